"""Ground-truth simulation of force, probe noises, and measurement records.

The probe is simulated classically: for uncorrelated white xi and eta
acting on a linear system, every measured statistic is reproduced by
independent classical Gaussian processes with the same spectra.  Quantum
mechanics enters only through the uncertainty floor S_xi*S_eta >= hbar^2/4
enforced by the sensor model.

All processes are synthesized as periodic stationary Gaussian records in
the frequency domain, so their statistics match the circulant covariance
assumed by the bounds exactly (no transients, no windowing bias).
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .grids import SampledSpectrum, TimeGrid
from .models import (
    PriorModel,
    SensorModel,
    Topology,
    prior_spectrum,
    transfer_function,
)

# Named noise streams, one substream per physical process.
STREAM_FORCE = "x"
STREAM_BACKACTION = "xi"
STREAM_READOUT = "eta"


@dataclass(frozen=True)
class SeedSpec:
    """Deterministic per-trial RNG derivation from a master seed.

    Each (master_seed, trial_index, stream label) triple keys an
    independent generator; trials are embarrassingly parallel and
    bit-reproducible regardless of evaluation order.
    """

    master_seed: int
    trial_index: int = 0

    def __post_init__(self):
        if self.trial_index < 0:
            raise ValueError("SeedSpec.trial_index must be >= 0")

    def rng(self, stream: str) -> np.random.Generator:
        label = zlib.crc32(stream.encode("utf-8"))
        return np.random.default_rng(
            [int(self.master_seed) & 0xFFFFFFFFFFFFFFFF, int(self.trial_index), label]
        )


@dataclass(frozen=True)
class Trajectory:
    """One simulated record: force, noises, monitored position, observation."""

    grid: TimeGrid
    x: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    position: np.ndarray
    y: np.ndarray


def synthesize_stationary(
    spectrum: SampledSpectrum, seed: SeedSpec, stream: str
) -> np.ndarray:
    """Periodic stationary Gaussian record with the given two-sided PSD.

    Hermitian-symmetric complex Gaussian DFT coefficients are drawn with
    E|X_k|^2 = n*S_k/dt (DC and Nyquist bins real), then inverse
    transformed; the exact covariance of the result is
    circulant_covariance(spectrum).
    """
    grid = spectrum.grid
    n, dt = grid.n, grid.dt
    rng = seed.rng(stream)
    half = n // 2
    a = rng.standard_normal(half + 1)
    b = rng.standard_normal(half + 1)
    coeffs = np.zeros(n, dtype=complex)
    scale = np.sqrt(n * spectrum.values / dt)
    coeffs[0] = a[0] * scale[0]
    if n % 2 == 0:
        coeffs[half] = a[half] * scale[half]
        paired = np.arange(1, half)
    else:
        paired = np.arange(1, half + 1)
    if paired.size:
        amp = scale[paired] / np.sqrt(2.0)
        coeffs[paired] = (a[paired] + 1j * b[paired]) * amp
        coeffs[n - paired] = np.conj(coeffs[paired])
    return np.fft.ifft(coeffs).real


def simulate_record(
    sensor: SensorModel, prior: PriorModel, grid: TimeGrid, seed: SeedSpec
) -> Trajectory:
    """Draw one consistent (x, xi, eta, position, y) realization.

    The monitored position responds through the transfer function:
    G*(x + xi) for the Standard topology, G*x under QNC (backaction
    cancels in the collective coordinate); the record is y = position + eta.
    """
    fgrid = grid.frequencies()
    flat = np.ones(grid.n)
    x = synthesize_stationary(prior_spectrum(prior, fgrid), seed, STREAM_FORCE)
    xi = synthesize_stationary(
        SampledSpectrum(fgrid, sensor.noise.s_xi * flat), seed, STREAM_BACKACTION
    )
    eta = synthesize_stationary(
        SampledSpectrum(fgrid, sensor.noise.s_eta * flat), seed, STREAM_READOUT
    )
    g = transfer_function(sensor.osc, fgrid).values
    drive = x + xi if sensor.topology is Topology.STANDARD else x
    position = np.fft.ifft(g * np.fft.fft(drive)).real
    return Trajectory(grid=grid, x=x, xi=xi, eta=eta, position=position, y=position + eta)


def referred_noise(traj: Trajectory, sensor: SensorModel) -> np.ndarray:
    """Force-referred observation noise z with DFT(z) = DFT(y)/G - DFT(x).

    The record decomposes as y(w) = G(w)[x(w) + z(w)]; averaged
    periodograms of z converge to observation_noise_spectrum.
    """
    fgrid = traj.grid.frequencies()
    g = transfer_function(sensor.osc, fgrid).values
    return np.fft.ifft(np.fft.fft(traj.y) / g - np.fft.fft(traj.x)).real
