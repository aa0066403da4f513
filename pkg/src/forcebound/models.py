"""Physical configuration: oscillator, probe noise, readout topology, priors.

The sensed system is a harmonic oscillator driven by the force to be
estimated and monitored continuously in position.  Two readout topologies
are supported:

* ``Topology.STANDARD`` -- the record is y = q + eta, and the probe
  backaction xi drives the oscillator momentum, so referred-to-force
  observation noise is S_eta/|G|^2 + S_xi.
* ``Topology.QNC`` -- quantum noise cancellation: an auxiliary
  negative-mass oscillator is added and the collective position Q = q + q'
  is monitored.  Backaction cancels in the collective dynamics, leaving
  S_eta/|G|^2 only.

Probe noise spectra are flat (white) and satisfy the uncertainty relation
S_xi * S_eta >= hbar^2/4, with equality for a quantum-limited probe.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

from .grids import ComplexResponse, FrequencyGrid, SampledSpectrum


class ResonanceError(ValueError):
    """Undamped transfer function evaluated at a bin exactly on resonance."""


class Topology(enum.Enum):
    STANDARD = "standard"
    QNC = "qnc"


@dataclass(frozen=True)
class OscillatorParams:
    """Mechanical oscillator: mass (kg), resonance (rad/s), damping (rad/s).

    gamma is a regularizer for the near-resonant response; the physics of
    interest is the negligible-damping limit, so results should change by
    < 1% when gamma is halved (away from resonance bins).  Default
    gamma = 1e-3 * omega_m.
    """

    m: float
    omega_m: float
    gamma: float = None  # type: ignore[assignment]
    hbar: float = 1.0

    def __post_init__(self):
        if self.gamma is None:
            object.__setattr__(self, "gamma", 1e-3 * float(self.omega_m))
        for name in ("m", "omega_m", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"OscillatorParams.{name} must be > 0")
        if self.gamma < 0:
            raise ValueError("OscillatorParams.gamma must be >= 0")


@dataclass(frozen=True)
class NoiseModel:
    """Flat probe noise: backaction force PSD s_xi (N^2 s), readout PSD
    s_eta (m^2 s).  quantum_limited marks s_xi*s_eta == hbar^2/4 (checked
    against the owning sensor's hbar)."""

    s_xi: float
    s_eta: float
    quantum_limited: bool = False

    def __post_init__(self):
        if not self.s_xi > 0:
            raise ValueError("NoiseModel.s_xi must be > 0")
        if not self.s_eta > 0:
            raise ValueError("NoiseModel.s_eta must be > 0")

    @classmethod
    def quantum_limited_pair(cls, s_xi: float, hbar: float = 1.0) -> "NoiseModel":
        """Quantum-limited probe with the given backaction strength."""
        return cls(s_xi=s_xi, s_eta=hbar**2 / (4.0 * s_xi), quantum_limited=True)


@dataclass(frozen=True)
class SensorModel:
    osc: OscillatorParams
    noise: NoiseModel
    topology: Topology = Topology.STANDARD

    def __post_init__(self):
        floor = self.osc.hbar**2 / 4.0
        product = self.noise.s_xi * self.noise.s_eta
        if self.noise.quantum_limited:
            if abs(product - floor) > 1e-9 * floor:
                raise ValueError(
                    "quantum_limited noise requires s_xi*s_eta == hbar^2/4, "
                    f"got {product!r} vs {floor!r}"
                )
        elif product < floor * (1.0 - 1e-12):
            raise ValueError(
                f"s_xi*s_eta = {product!r} violates the uncertainty floor "
                f"hbar^2/4 = {floor!r}"
            )
        if self.topology is Topology.STANDARD and self.osc.gamma == 0:
            raise ValueError("Standard topology requires gamma > 0")


@dataclass(frozen=True)
class OrnsteinUhlenbeckPrior:
    """Stationary OU force prior: S(w) = 2*kappa*p_var/(kappa^2 + w^2)."""

    kappa: float
    p_var: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("OrnsteinUhlenbeckPrior.kappa must be > 0")
        if not self.p_var > 0:
            raise ValueError("OrnsteinUhlenbeckPrior.p_var must be > 0")


@dataclass(frozen=True)
class BandLimitedFlatPrior:
    """Flat force prior s0 inside |w| <= omega_c, zero outside."""

    s0: float
    omega_c: float

    def __post_init__(self):
        if not self.s0 > 0:
            raise ValueError("BandLimitedFlatPrior.s0 must be > 0")
        if not self.omega_c > 0:
            raise ValueError("BandLimitedFlatPrior.omega_c must be > 0")


PriorModel = Union[OrnsteinUhlenbeckPrior, BandLimitedFlatPrior]


def prior_spectrum(prior: PriorModel, grid: FrequencyGrid) -> SampledSpectrum:
    """Force prior PSD sampled on the grid."""
    w = grid.omega
    if isinstance(prior, OrnsteinUhlenbeckPrior):
        vals = 2.0 * prior.kappa * prior.p_var / (prior.kappa**2 + w**2)
    elif isinstance(prior, BandLimitedFlatPrior):
        vals = np.where(np.abs(w) <= prior.omega_c, prior.s0, 0.0)
    else:
        raise TypeError(f"unsupported prior {prior!r}")
    return SampledSpectrum(grid, vals)


def prior_variance(prior: PriorModel) -> float:
    """Stationary variance Int dw/2pi S(w) of the force prior."""
    if isinstance(prior, OrnsteinUhlenbeckPrior):
        return prior.p_var
    if isinstance(prior, BandLimitedFlatPrior):
        return prior.s0 * prior.omega_c / np.pi
    raise TypeError(f"unsupported prior {prior!r}")


def transfer_function(osc: OscillatorParams, grid: FrequencyGrid) -> ComplexResponse:
    """Oscillator response G(w) = 1/[m(omega_m^2 - w^2 - i*gamma*w)]."""
    w = grid.omega
    if osc.gamma == 0 and np.any(
        np.isclose(np.abs(w), osc.omega_m, rtol=1e-12, atol=0.0)
    ):
        raise ResonanceError(
            "gamma = 0 with a frequency bin on resonance; add damping or "
            "change the grid"
        )
    den = osc.m * (osc.omega_m**2 - w**2 - 1j * osc.gamma * w)
    return ComplexResponse(grid, 1.0 / den)


def observation_noise_spectrum(
    sensor: SensorModel, grid: FrequencyGrid
) -> SampledSpectrum:
    """Referred-to-force observation noise S_z for the configured topology.

    Standard: S_eta/|G|^2 + S_xi.  QNC: S_eta/|G|^2 (backaction cancels in
    the monitored collective coordinate).
    """
    g = transfer_function(sensor.osc, grid).values
    g2 = g.real**2 + g.imag**2
    vals = sensor.noise.s_eta / g2
    if sensor.topology is Topology.STANDARD:
        vals = vals + sensor.noise.s_xi
    return SampledSpectrum(grid, vals)


def backaction_position_spectrum(
    sensor: SensorModel, grid: FrequencyGrid
) -> SampledSpectrum:
    """PSD of backaction-driven fluctuations of the monitored coordinate.

    |G|^2 * S_xi for the Standard topology; identically zero under QNC,
    where xi drops out of the collective position dynamics.
    """
    if sensor.topology is Topology.QNC:
        return SampledSpectrum(grid, np.zeros(grid.n))
    g = transfer_function(sensor.osc, grid).values
    g2 = g.real**2 + g.imag**2
    return SampledSpectrum(grid, g2 * sensor.noise.s_xi)
