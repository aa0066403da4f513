"""End-to-end acceptance suite for the force-estimation bound package.

Reference configuration: hbar = m = omega_m = 1, gamma = 1e-3, quantum-limited
probe with S_xi = S_eta = 0.5, Ornstein-Uhlenbeck force prior (kappa = 0.2,
P = 1), grid n = 2**15, dt = 0.05, 200 Monte Carlo trials.  Each criterion
prints a single [PASS]/[FAIL] line with the measured numbers.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from forcebound import (
    NoiseModel,
    OrnsteinUhlenbeckPrior,
    OscillatorParams,
    SampledSpectrum,
    SeedSpec,
    SensorModel,
    TimeGrid,
    Topology,
    build_state_space,
    circulant_covariance,
    circulant_eigenvalues,
    fisher_matrices,
    kalman_filter,
    matrix_point_bound,
    observation_noise_spectrum,
    periodogram,
    point_qcrb,
    prior_spectrum,
    prior_variance,
    referred_noise,
    rts_smoother,
    simulate_record,
    smoother_error_spectrum,
    smoother_point_error,
    spectral_qcrb,
    spectrum_integral,
    sql_spectrum,
    synthesize_stationary,
    transfer_function,
    wiener_smoother,
)

GRID = TimeGrid(n=2**15, dt=0.05)
FREQ = GRID.frequencies()
PRIOR = OrnsteinUhlenbeckPrior(kappa=0.2, p_var=1.0)
PARAMS = OscillatorParams(m=1.0, omega_m=1.0, gamma=1e-3)
NOISE = NoiseModel.quantum_limited_pair(s_xi=0.5)
TRIALS = 200
MASTER_SEED = 20260826


def make_sensor(topology):
    return SensorModel(osc=PARAMS, noise=NOISE, topology=topology)


def report(criterion, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] criterion {criterion}: {detail}")
    assert ok, detail


def empirical_point_error(sensor, trials=TRIALS, master_seed=MASTER_SEED):
    """Mean squared smoothing error and its standard error over trials."""
    mses = np.empty(trials)
    for trial in range(trials):
        seed = SeedSpec(master_seed=master_seed, trial_index=trial)
        traj = simulate_record(sensor, PRIOR, GRID, seed)
        x_hat = wiener_smoother(traj.y, sensor, PRIOR, GRID)
        mses[trial] = np.mean((x_hat - traj.x) ** 2)
    return float(np.mean(mses)), float(np.std(mses, ddof=1) / np.sqrt(trials))


def test_criterion_1_qnc_saturation():
    sensor = make_sensor(Topology.QNC)
    bound = spectral_qcrb(sensor, PRIOR, FREQ)
    achieved = smoother_error_spectrum(sensor, PRIOR, GRID)
    rel = np.max(np.abs(achieved.values - bound.values) / bound.values)
    pi_min = point_qcrb(sensor, PRIOR, FREQ)
    pi_emp, se = empirical_point_error(sensor)
    z = abs(pi_emp - pi_min) / se
    rel_mc = abs(pi_emp - pi_min) / pi_min
    ok = rel <= 1e-9 and z <= 3.0 and rel_mc <= 0.05
    report(
        1,
        ok,
        f"QNC smoother spectrum matches bound (max rel {rel:.2e}); "
        f"MC pi {pi_emp:.5f} vs pi_min {pi_min:.5f} "
        f"({z:.2f} SE, {100 * rel_mc:.3f}% rel)",
    )


def test_criterion_2_sql_inequality():
    sensor = make_sensor(Topology.STANDARD)
    s_z = observation_noise_spectrum(sensor, FREQ)
    s_sql = sql_spectrum(sensor, FREQ)
    slack = np.min(s_z.values - s_sql.values)
    g_mag = np.abs(transfer_function(sensor.osc, FREQ).values)
    equality_bins = np.isclose(
        sensor.noise.s_xi, sensor.osc.hbar / (2.0 * g_mag), rtol=1e-12, atol=0.0
    )
    rel = np.abs(s_z.values - s_sql.values) / s_sql.values
    at_eq = np.max(rel[equality_bins]) if np.any(equality_bins) else np.inf
    ok = slack >= -1e-12 and np.any(equality_bins) and at_eq <= 1e-9
    report(
        2,
        ok,
        f"S_z >= S_SQL everywhere (min slack {slack:.2e}); equality at "
        f"{int(np.sum(equality_bins))} bin(s) to {at_eq:.2e} relative",
    )


def test_criterion_3_standard_gap():
    sensor = make_sensor(Topology.STANDARD)
    pi_min = point_qcrb(sensor, PRIOR, FREQ)
    pi_emp, se = empirical_point_error(sensor)
    z = (pi_emp - pi_min) / se
    ok = pi_emp > pi_min and z > 3.0
    report(
        3,
        ok,
        f"Standard MC pi {pi_emp:.5f} exceeds pi_min {pi_min:.5f} "
        f"(ratio {pi_emp / pi_min:.3f}, {z:.1f} SE above)",
    )


def test_criterion_4_matrix_spectral_equivalence():
    grid = TimeGrid(n=4096, dt=0.05)
    freq = grid.frequencies()
    sensor = make_sensor(Topology.QNC)
    matrices = fisher_matrices(sensor, PRIOR, grid)
    pi_matrix = matrix_point_bound(matrices)
    pi_spectral = point_qcrb(sensor, PRIOR, freq)
    rel = abs(pi_matrix - pi_spectral) / pi_spectral

    hbar, kappa, p_var = PARAMS.hbar, PRIOR.kappa, PRIOR.p_var

    def integrand(omega):
        g2 = 1.0 / (
            PARAMS.m**2
            * ((PARAMS.omega_m**2 - omega**2) ** 2 + (PARAMS.gamma * omega) ** 2)
        )
        s_dq = g2 * NOISE.s_xi
        s_dx = 2.0 * kappa * p_var / (kappa**2 + omega**2)
        return (hbar**2 / 4.0) * s_dx / (s_dq * s_dx + hbar**2 / 4.0)

    nyquist = np.pi / grid.dt
    oracle = (
        quad(integrand, 0.0, nyquist, points=[PARAMS.omega_m], limit=400)[0]
        / np.pi
    )
    rel_oracle = abs(pi_spectral - oracle) / oracle
    ok = rel <= 1e-10 and rel_oracle <= 0.01
    report(
        4,
        ok,
        f"matrix vs spectral bound rel {rel:.2e}; grid vs quadrature oracle "
        f"rel {100 * rel_oracle:.3f}%",
    )


def test_criterion_5_prior_only_degeneration():
    weak = NoiseModel.quantum_limited_pair(s_xi=1e-12)
    sensor = SensorModel(osc=PARAMS, noise=weak, topology=Topology.STANDARD)
    pi_min = point_qcrb(sensor, PRIOR, FREQ)
    p_var = prior_variance(PRIOR)
    rel = abs(pi_min - p_var) / p_var
    ok = rel <= 0.01
    report(
        5,
        ok,
        f"vanishing-backaction pi_min {pi_min:.5f} vs prior variance "
        f"{p_var} ({100 * rel:.3f}% rel)",
    )


@pytest.mark.parametrize("topology", [Topology.QNC, Topology.STANDARD])
def test_criterion_6_estimator_ordering(topology):
    sensor = make_sensor(topology)
    seed = SeedSpec(master_seed=MASTER_SEED, trial_index=0)
    traj = simulate_record(sensor, PRIOR, GRID, seed)
    model = build_state_space(sensor, PRIOR, GRID.dt)
    filtered = kalman_filter(traj.y, model)
    smoothed = rts_smoother(filtered, model)
    var_filter = filtered.steady_force_variance
    var_smooth = smoothed.interior_force_variance
    target = smoother_point_error(sensor, PRIOR, GRID)
    rel = abs(var_smooth - target) / target
    ok = var_filter > var_smooth and rel <= 0.02
    report(
        6,
        ok,
        f"{topology.value}: filter var {var_filter:.5f} > smoother var "
        f"{var_smooth:.5f}; vs spectral integral {target:.5f} "
        f"({100 * rel:.3f}% rel)",
    )


def test_criterion_7_synthesis_fidelity():
    grid = TimeGrid(n=4096, dt=0.05)
    freq = grid.frequencies()
    broad = OscillatorParams(m=1.0, omega_m=1.0, gamma=0.1)
    sensor = SensorModel(osc=broad, noise=NOISE, topology=Topology.STANDARD)
    flat_xi = SampledSpectrum(freq, np.full(grid.n, NOISE.s_xi))
    flat_eta = SampledSpectrum(freq, np.full(grid.n, NOISE.s_eta))
    targets = {
        "x": prior_spectrum(PRIOR, freq),
        "xi": flat_xi,
        "eta": flat_eta,
        "z": observation_noise_spectrum(sensor, freq),
    }
    n_trials = 500
    sums = {name: np.zeros(grid.n) for name in targets}
    for trial in range(n_trials):
        seed = SeedSpec(master_seed=MASTER_SEED + 1, trial_index=trial)
        traj = simulate_record(sensor, PRIOR, grid, seed)
        sums["x"] += periodogram(traj.x, grid).values
        sums["xi"] += periodogram(traj.xi, grid).values
        sums["eta"] += periodogram(traj.eta, grid).values
        sums["z"] += periodogram(referred_noise(traj, sensor), grid).values
    worst_name, worst_iae = "", 0.0
    for name, target in targets.items():
        avg = sums[name] / n_trials
        iae = np.sum(np.abs(avg - target.values)) / np.sum(target.values)
        if iae > worst_iae:
            worst_name, worst_iae = name, iae
    s_x = prior_spectrum(PRIOR, freq)
    cov = circulant_covariance(s_x)
    eigs = circulant_eigenvalues(cov)
    eig_target = s_x.values / grid.dt
    eig_rel = np.max(np.abs(eigs - eig_target)) / np.max(eig_target)
    var_rel = abs(cov[0, 0] - spectrum_integral(s_x)) / cov[0, 0]
    ok = worst_iae <= 0.05 and eig_rel <= 1e-10 and var_rel <= 1e-10
    report(
        7,
        ok,
        f"worst periodogram IAE {100 * worst_iae:.2f}% ({worst_name}, "
        f"{n_trials} trials); circulant identities to {max(eig_rel, var_rel):.2e}",
    )


def test_criterion_8_determinism(tmp_path):
    import json

    from forcebound.cli import main

    cfg = {
        "m": 1.0,
        "omega_m": 1.0,
        "gamma": 1e-3,
        "hbar": 1.0,
        "s_xi": 0.5,
        "quantum_limited": True,
        "topology": "qnc",
        "prior": {"type": "ou", "kappa": 0.2, "p_var": 1.0},
        "grid": {"n": 4096, "dt": 0.05},
        "trials": 8,
        "master_seed": 7,
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(cfg))
    digests = []
    for name, threads in [("run1", "1"), ("run2", "4")]:
        out = tmp_path / name
        rc = main(
            [
                "montecarlo",
                "--config",
                str(cfg_path),
                "--out",
                str(out),
                "--threads",
                threads,
            ]
        )
        assert rc == 0
        digests.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    ok = digests[0] == digests[1]
    report(
        8,
        ok,
        f"byte-identical outputs across reruns and thread counts "
        f"({len(digests[0])} files)",
    )
