"""Uniform sampling grids, two-sided spectra, and circulant covariance tools.

Spectral convention used everywhere in this package: two-sided power
spectral density in angular frequency,

    S_f(w) = Int dtau <f(t) f(t+tau)> exp(i w tau),

so that Var f = Int dw/2pi S_f(w).  Units of a spectrum are
[signal]^2 * s.

Frequency bins are stored internally in DFT (numpy fft) order,
w_k = 2*pi*k/(n*dt) for k = 0, 1, ..., n/2-1, -n/2, ..., -1; the
``sort_order`` permutation exposes the monotone ordering for display.
Stationarity is periodic (circulant): the covariance matrix of a process
with spectrum S on an n-point grid is circulant with eigenvalue S_k/dt at
bin k, which makes time-domain and frequency-domain formulas exactly
interconvertible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class NonCirculantError(ValueError):
    """Input matrix fails the cyclic-shift consistency check."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform periodic time lattice: n samples spaced dt seconds."""

    n: int
    dt: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"TimeGrid.n must be an integer >= 2, got {self.n!r}")
        if not self.dt > 0:
            raise ValueError(f"TimeGrid.dt must be > 0, got {self.dt!r}")

    @property
    def duration(self) -> float:
        return self.n * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.dt

    def frequencies(self) -> "FrequencyGrid":
        return FrequencyGrid(self)


@dataclass(frozen=True)
class FrequencyGrid:
    """Angular-frequency lattice conjugate to a TimeGrid."""

    time_grid: TimeGrid

    @property
    def n(self) -> int:
        return self.time_grid.n

    @property
    def dt(self) -> float:
        return self.time_grid.dt

    @property
    def domega(self) -> float:
        """Bin width 2*pi/(n*dt) in rad/s."""
        return 2.0 * np.pi / (self.n * self.dt)

    @property
    def omega(self) -> np.ndarray:
        """Bin angular frequencies in DFT order (contains 0 exactly)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dt)

    @property
    def sort_order(self) -> np.ndarray:
        """Permutation taking DFT order to monotone frequency order."""
        return np.argsort(self.omega, kind="stable")


def _freeze(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SampledSpectrum:
    """Two-sided PSD sampled on a FrequencyGrid (DFT bin order)."""

    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.shape != (self.grid.n,):
            raise ValueError(
                f"spectrum has {values.shape} values for an n={self.grid.n} grid"
            )
        if np.any(values < 0):
            raise ValueError("spectrum values must be >= 0")
        object.__setattr__(self, "values", _freeze(values))

    def sorted_values(self):
        """(omega, values) in monotone frequency order, for display/export."""
        order = self.grid.sort_order
        return self.grid.omega[order], self.values[order]


@dataclass(frozen=True)
class ComplexResponse:
    """Complex frequency response sampled on a FrequencyGrid (DFT order)."""

    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex, copy=True)
        if values.shape != (self.grid.n,):
            raise ValueError(
                f"response has {values.shape} values for an n={self.grid.n} grid"
            )
        object.__setattr__(self, "values", _freeze(values))


def spectrum_integral(spectrum: SampledSpectrum) -> float:
    """Riemann sum (domega/2pi) * sum_k S_k over all bins.

    For a process variance this is the discrete stand-in for
    Int dw/2pi S(w); truncation at the Nyquist frequency is the only
    approximation.
    """
    g = spectrum.grid
    return float(spectrum.values.sum() / (g.n * g.dt))


def circulant_covariance(spectrum: SampledSpectrum) -> np.ndarray:
    """Covariance matrix of the periodic stationary process with this PSD.

    C[j, l] = (1/(n*dt)) * sum_k S_k cos(w_k (j-l) dt).  The result is
    circulant, symmetric, and PSD, with eigenvalue S_k/dt at bin k.
    """
    # First column; spectra of real processes are even so this is real.
    col = np.fft.ifft(spectrum.values).real / spectrum.grid.dt
    return scipy.linalg.circulant(col)


def circulant_eigenvalues(c: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
    """Eigenvalues of a (symmetric) circulant, in FrequencyGrid bin order.

    Raises NonCirculantError if the rows of ``c`` are not cyclic shifts of
    the first row, or if the implied eigenvalues are not real.
    """
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {c.shape}")
    n = c.shape[0]
    scale = np.abs(c).max()
    row0 = c[0]
    for j in range(1, n):
        if not np.allclose(c[j], np.roll(row0, j), rtol=rtol, atol=rtol * scale):
            raise NonCirculantError(f"row {j} is not a cyclic shift of row 0")
    lam = np.fft.fft(c[:, 0])
    if np.abs(lam.imag).max() > rtol * max(scale * n, 1.0):
        raise NonCirculantError("circulant is not symmetric: complex eigenvalues")
    return lam.real


def periodogram(samples: np.ndarray, grid: TimeGrid) -> SampledSpectrum:
    """Empirical PSD estimate, value[k] = dt*|DFT(samples)_k|^2/n.

    Unbiased for the periodic synthesis model: averaging over realizations
    converges to the target spectrum bin by bin.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (grid.n,):
        raise ValueError(f"got {samples.shape} samples for an n={grid.n} grid")
    x = np.fft.fft(samples)
    vals = grid.dt * (x.real**2 + x.imag**2) / grid.n
    return SampledSpectrum(grid.frequencies(), vals)
