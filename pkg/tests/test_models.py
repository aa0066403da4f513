import numpy as np
import pytest

from forcebound import (
    BandLimitedFlatPrior,
    NoiseModel,
    OrnsteinUhlenbeckPrior,
    OscillatorParams,
    ResonanceError,
    SensorModel,
    TimeGrid,
    Topology,
    backaction_position_spectrum,
    observation_noise_spectrum,
    prior_spectrum,
    prior_variance,
    transfer_function,
)


def make_sensor(topology=Topology.STANDARD, s_xi=0.5, gamma=1e-3, quantum_limited=True):
    osc = OscillatorParams(m=1.0, omega_m=1.0, gamma=gamma, hbar=1.0)
    if quantum_limited:
        noise = NoiseModel.quantum_limited_pair(s_xi, hbar=osc.hbar)
    else:
        noise = NoiseModel(s_xi=s_xi, s_eta=1.0 / s_xi)
    return SensorModel(osc, noise, topology)


def eval_response(osc, omegas):
    # evaluate G on a grid containing the requested frequencies
    omegas = np.atleast_1d(omegas)
    vals = []
    for w in omegas:
        if w == 0.0:
            tg = TimeGrid(8, 0.1)
            k = 0
        else:
            tg = TimeGrid(8, 2 * np.pi / (8 * w))
            k = 1
        g = transfer_function(osc, tg.frequencies())
        vals.append(g.values[k])
    return np.array(vals)


def test_oscillator_defaults_and_validation():
    osc = OscillatorParams(m=2.0, omega_m=3.0)
    assert osc.gamma == pytest.approx(3e-3)
    with pytest.raises(ValueError):
        OscillatorParams(m=-1.0, omega_m=1.0)
    with pytest.raises(ValueError):
        OscillatorParams(m=1.0, omega_m=1.0, gamma=-0.1)


def test_transfer_function_reference_points():
    undamped = OscillatorParams(m=1.0, omega_m=1.0, gamma=0.0)
    assert eval_response(undamped, [0.0])[0] == pytest.approx(1.0)
    assert eval_response(undamped, [np.sqrt(2.0)])[0] == pytest.approx(-1.0)
    damped = OscillatorParams(m=1.0, omega_m=1.0, gamma=0.1)
    g_res = eval_response(damped, [1.0])[0]
    assert g_res == pytest.approx(10.0j)
    assert abs(g_res) == pytest.approx(10.0)


def test_transfer_function_conjugate_symmetry():
    osc = OscillatorParams(m=1.3, omega_m=0.7, gamma=0.01)
    g = transfer_function(osc, TimeGrid(64, 0.3).frequencies())
    w = g.grid.omega
    for k in range(1, 32):
        assert g.values[64 - k] == pytest.approx(np.conj(g.values[k]))
        assert w[64 - k] == pytest.approx(-w[k])


def test_transfer_function_resonance_error():
    osc = OscillatorParams(m=1.0, omega_m=1.0, gamma=0.0)
    # grid bin exactly at omega_m = 1: n*dt = 2*pi*k
    tg = TimeGrid(64, 2 * np.pi / 64)
    with pytest.raises(ResonanceError):
        transfer_function(osc, tg.frequencies())


def test_noise_model_uncertainty_floor():
    osc = OscillatorParams(m=1.0, omega_m=1.0, gamma=1e-3, hbar=1.0)
    with pytest.raises(ValueError):
        SensorModel(osc, NoiseModel(s_xi=0.1, s_eta=0.1), Topology.STANDARD)
    # quantum-limited product exact to machine precision
    noise = NoiseModel.quantum_limited_pair(0.7, hbar=1.0)
    assert noise.s_xi * noise.s_eta == pytest.approx(0.25, rel=1e-15)
    with pytest.raises(ValueError):
        SensorModel(
            osc, NoiseModel(s_xi=1.0, s_eta=1.0, quantum_limited=True), Topology.STANDARD
        )


def test_standard_topology_requires_damping():
    osc = OscillatorParams(m=1.0, omega_m=1.0, gamma=0.0)
    noise = NoiseModel.quantum_limited_pair(0.5)
    with pytest.raises(ValueError):
        SensorModel(osc, noise, Topology.STANDARD)
    SensorModel(osc, noise, Topology.QNC)  # allowed


def test_prior_spectrum_reference_points():
    fg = TimeGrid(2**12, 0.05).frequencies()
    ou = prior_spectrum(OrnsteinUhlenbeckPrior(kappa=0.2, p_var=1.0), fg)
    dc = np.flatnonzero(fg.omega == 0.0)[0]
    assert ou.values[dc] == pytest.approx(10.0)
    # value at omega = kappa is half the peak: interpolate at nearest bin
    k = np.argmin(np.abs(fg.omega - 0.2))
    expected = 2 * 0.2 / (0.04 + fg.omega[k] ** 2)
    assert ou.values[k] == pytest.approx(expected)

    flat = prior_spectrum(BandLimitedFlatPrior(s0=1.0, omega_c=2.0), fg)
    k3 = np.argmin(np.abs(fg.omega - 3.0))
    assert flat.values[k3] == 0.0
    kin = np.argmin(np.abs(fg.omega - 1.0))
    assert flat.values[kin] == 1.0


def test_prior_variance():
    assert prior_variance(OrnsteinUhlenbeckPrior(kappa=0.3, p_var=2.5)) == 2.5
    assert prior_variance(BandLimitedFlatPrior(s0=1.0, omega_c=2.0)) == pytest.approx(
        2.0 / np.pi
    )


def test_observation_noise_spectrum_topologies():
    fg = TimeGrid(1024, 0.05).frequencies()
    dc = np.flatnonzero(fg.omega == 0.0)[0]
    qnc = make_sensor(Topology.QNC, quantum_limited=False)
    std = make_sensor(Topology.STANDARD, quantum_limited=False)
    # s_eta = 2.0 here (non quantum-limited helper), |G(0)| = 1
    assert observation_noise_spectrum(qnc, fg).values[dc] == pytest.approx(2.0)
    assert observation_noise_spectrum(std, fg).values[dc] == pytest.approx(2.5)


def test_observation_noise_equals_sql_at_matched_bin():
    # quantum-limited with S_xi = hbar/(2|G|) at DC (|G(0)| = 1): AM-GM equality
    std = make_sensor(Topology.STANDARD, s_xi=0.5, quantum_limited=True)
    fg = TimeGrid(1024, 0.05).frequencies()
    dc = np.flatnonzero(fg.omega == 0.0)[0]
    s_z = observation_noise_spectrum(std, fg).values[dc]
    assert s_z == pytest.approx(1.0, rel=1e-12)  # hbar/|G(0)|


def test_backaction_position_spectrum():
    fg = TimeGrid(1024, 0.05).frequencies()
    std = make_sensor(Topology.STANDARD)
    vals = backaction_position_spectrum(std, fg).values
    dc = np.flatnonzero(fg.omega == 0.0)[0]
    assert vals[dc] == pytest.approx(0.5, rel=1e-5)
    k = np.argmin(np.abs(fg.omega - np.sqrt(2.0)))
    g2 = 1.0 / ((1 - fg.omega[k] ** 2) ** 2 + (1e-3 * fg.omega[k]) ** 2)
    assert vals[k] == pytest.approx(0.5 * g2)

    qnc = make_sensor(Topology.QNC)
    assert np.all(backaction_position_spectrum(qnc, fg).values == 0.0)
