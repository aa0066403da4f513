"""Quantum Cramer-Rao bound for force estimation, spectral and matrix forms.

In the stationary linear-Gaussian setting the QCRB is a per-frequency
uncertainty relation on the error spectrum C(w) of any force estimator:

    C(w) * (|G(w)|^2 S_xi(w) + hbar^2 / (4 S_dx(w))) >= hbar^2/4,

with S_dx the force prior PSD.  Integrating the saturating C(w) over
dw/2pi gives the bound on the point (mean-square) error.  The same bound
in discrete time is Sigma >= F^{-1} with F = F_quantum + F_classical; on a
periodic grid both Fisher matrices are circulant, so the two forms reduce
to the same bin sum and agree to machine precision.

The quantum term always carries the full backaction-driven position
spectrum |G|^2 S_xi of the sensed oscillator: the probe interaction is the
same in both readout topologies.  Quantum noise cancellation removes
backaction from the *record* (see models.observation_noise_spectrum), which
is what lets the smoothing error reach this bound; it does not weaken the
bound itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .grids import (
    FrequencyGrid,
    SampledSpectrum,
    TimeGrid,
    circulant_covariance,
    circulant_eigenvalues,
    spectrum_integral,
)
from .models import (
    PriorModel,
    SensorModel,
    prior_spectrum,
    transfer_function,
)


class SingularPriorError(ValueError):
    """Time-domain prior Fisher matrix requested for a singular prior."""


class SingularFisherError(ValueError):
    """Total Fisher matrix is not invertible."""


def probe_backaction_spectrum(sensor: SensorModel, grid: FrequencyGrid) -> SampledSpectrum:
    """Backaction-driven position PSD |G|^2 S_xi of the sensed oscillator.

    Topology-independent: this is the quantum-noise kernel of the bound,
    present whether or not the readout cancels backaction in the record.
    """
    g = transfer_function(sensor.osc, grid).values
    g2 = g.real**2 + g.imag**2
    return SampledSpectrum(grid, g2 * sensor.noise.s_xi)


def sql_spectrum(sensor: SensorModel, grid: FrequencyGrid) -> SampledSpectrum:
    """Standard quantum limit for force detection, S_SQL(w) = hbar/|G(w)|."""
    g = transfer_function(sensor.osc, grid).values
    return SampledSpectrum(grid, sensor.osc.hbar / np.abs(g))


def spectral_qcrb(
    sensor: SensorModel, prior: PriorModel, grid: FrequencyGrid
) -> SampledSpectrum:
    """Lower bound on the error spectrum of any force estimator.

    Computed in the singularity-free rational form

        c_min(w) = (hbar^2/4) S_dx / (S_dq S_dx + hbar^2/4),

    so band-limited priors (S_dx = 0 out of band) yield c_min = 0 there.
    """
    q = sensor.osc.hbar**2 / 4.0
    s_dq = probe_backaction_spectrum(sensor, grid).values
    s_dx = prior_spectrum(prior, grid).values
    return SampledSpectrum(grid, q * s_dx / (s_dq * s_dx + q))


def point_qcrb(sensor: SensorModel, prior: PriorModel, grid: FrequencyGrid) -> float:
    """Lower bound on the stationary mean-square force-estimation error."""
    return spectrum_integral(spectral_qcrb(sensor, prior, grid))


@dataclass(frozen=True)
class FisherMatrices:
    """Discrete-time Fisher information, quantum + prior parts (circulant)."""

    grid: TimeGrid
    f_quantum: np.ndarray
    f_classical: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.f_quantum + self.f_classical


def fisher_quantum_matrix(sensor: SensorModel, grid: TimeGrid) -> np.ndarray:
    """Quantum Fisher matrix (4 dt^2/hbar^2) <dq(t_j) dq(t_l)>_sym.

    The two-time covariance of the backaction-driven position is realized
    through the circulant covariance of its spectrum.
    """
    s_dq = probe_backaction_spectrum(sensor, grid.frequencies())
    return (4.0 * grid.dt**2 / sensor.osc.hbar**2) * circulant_covariance(s_dq)


def fisher_classical_matrix(prior: PriorModel, grid: TimeGrid) -> np.ndarray:
    """Prior Fisher matrix: inverse of the prior covariance matrix.

    Built by circulant eigenvalue inversion (eigenvalue dt/S_dx(w_k) at
    bin k).  Requires a prior spectrum strictly positive at every bin;
    band-limited priors must use the frequency-domain bound instead.
    """
    fgrid = grid.frequencies()
    s_dx = prior_spectrum(prior, fgrid).values
    if np.any(s_dx <= 0):
        raise SingularPriorError(
            "prior spectrum vanishes on some bins; the time-domain prior "
            "Fisher matrix does not exist (use the spectral bound)"
        )
    eigs = grid.dt / s_dx
    col = np.fft.ifft(eigs).real
    return scipy.linalg.circulant(col)


def fisher_matrices(
    sensor: SensorModel, prior: PriorModel, grid: TimeGrid
) -> FisherMatrices:
    return FisherMatrices(
        grid=grid,
        f_quantum=fisher_quantum_matrix(sensor, grid),
        f_classical=fisher_classical_matrix(prior, grid),
    )


def matrix_point_bound(fm: FisherMatrices) -> float:
    """Diagonal of F^{-1}: (1/n) sum_k 1/lambda_k over circulant eigenvalues.

    All diagonal entries coincide by circulant symmetry; equals point_qcrb
    on the same grid up to machine rounding.
    """
    lam = circulant_eigenvalues(fm.total)
    if np.any(lam <= 0):
        raise SingularFisherError("total Fisher matrix has nonpositive eigenvalues")
    return float(np.mean(1.0 / lam))


def weighted_cost_bound(fm: FisherMatrices, weights: SampledSpectrum) -> float:
    """Frequency-weighted integral of the error-bound spectrum.

    The bound spectrum at bin k is dt/lambda_k, so the value is
    (domega/2pi) sum_k w_k dt/lambda_k.  Realizes the general
    quadratic-cost bound for stationary weight kernels, which are diagonal
    in the frequency basis; weights identically 1 recover
    matrix_point_bound.
    """
    if weights.grid.n != fm.grid.n:
        raise ValueError("weight grid does not match the Fisher grid")
    lam = circulant_eigenvalues(fm.total)
    if np.any(lam <= 0):
        raise SingularFisherError("total Fisher matrix has nonpositive eigenvalues")
    g = weights.grid
    return float(np.sum(weights.values * fm.grid.dt / lam) * g.domega / (2.0 * np.pi))


@dataclass(frozen=True)
class BoundReport:
    """Bound outputs for one configuration."""

    c_min: SampledSpectrum
    pi_min: float
    s_sql: SampledSpectrum


def bound_report(
    sensor: SensorModel, prior: PriorModel, grid: FrequencyGrid
) -> BoundReport:
    c_min = spectral_qcrb(sensor, prior, grid)
    return BoundReport(
        c_min=c_min,
        pi_min=spectrum_integral(c_min),
        s_sql=sql_spectrum(sensor, grid),
    )
