"""Channel basis, periodic time grid and the grid/Fourier representations.

Conventions: atomic units with hbar = 1, Fourier modes n = -N/2 ... N/2-1 with
<t|n> = exp(-i n w t), w = 2 pi / T, and unitary normalization so that norms
do not depend on the representation.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft


def fft_workers() -> int:
    """Number of FFT worker threads, capped by ``CATM_NUM_WORKERS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("CATM_NUM_WORKERS", "1")))
    except ValueError:
        return 1


class Representation(enum.Enum):
    TIME_GRID = "time_grid"
    FOURIER = "fourier"


@dataclass(frozen=True)
class ChannelBasis:
    """Free-system eigenbasis.

    Attributes:
        energies: channel energies E_j.
        bound_flags: True for channels counted as bound (non-dissociated).
    """

    energies: np.ndarray
    bound_flags: np.ndarray = None

    def __post_init__(self):
        energies = np.atleast_1d(np.asarray(self.energies, dtype=float)).copy()
        if energies.ndim != 1 or energies.size < 1:
            raise ValueError("energies must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(energies)):
            raise ValueError("energies must be finite")
        flags = self.bound_flags
        flags = np.ones(energies.size, bool) if flags is None else np.asarray(flags, bool).copy()
        if flags.shape != energies.shape:
            raise ValueError("bound_flags must match energies")
        energies.setflags(write=False)
        flags.setflags(write=False)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "bound_flags", flags)

    @property
    def n_channels(self) -> int:
        return self.energies.size


@dataclass(frozen=True)
class TimeGrid:
    """Uniform periodic grid on [0, T) with T = T0 + dT.

    Attributes:
        T0: physical duration.
        dT: artificial (absorbing) duration.
        n_points: number of collocation points N, a power of two.
    """

    T0: float
    dT: float
    n_points: int

    def __post_init__(self):
        if not (self.T0 > 0 and self.dT > 0):
            raise ValueError("T0 and dT must be positive")
        n = int(self.n_points)
        if n < 2 or n & (n - 1):
            raise ValueError("n_points must be a power of two >= 2")
        object.__setattr__(self, "n_points", n)

    @classmethod
    def aligned(cls, T0: float, n_points: int, dt_fraction: float) -> "TimeGrid":
        """Grid whose point ``physical_index`` lands exactly on T0.

        The artificial duration is adjusted from ``dt_fraction * T0`` so that
        T0 is an integer number of grid spacings.
        """
        k = int(round(n_points / (1.0 + dt_fraction)))
        k = min(max(k, 1), n_points - 1)
        T = T0 * n_points / k
        return cls(T0=T0, dT=T - T0, n_points=n_points)

    @property
    def T(self) -> float:
        return self.T0 + self.dT

    @property
    def spacing(self) -> float:
        return self.T / self.n_points

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.T

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n_points) * self.spacing

    @property
    def physical_index(self) -> int:
        """Index of the last grid point with t_i <= T0 (to rounding)."""
        return int(np.floor(self.T0 / self.spacing + 1e-9))

    @property
    def physical_mask(self) -> np.ndarray:
        return np.arange(self.n_points) <= self.physical_index

    @property
    def modes(self) -> np.ndarray:
        return mode_numbers(self.n_points)


def mode_numbers(n_points: int) -> np.ndarray:
    """Mode indices -N/2 ... N/2-1 in the stored (shifted) order."""
    return np.arange(-(n_points // 2), n_points - n_points // 2)


def fourier_coefficients(values: np.ndarray) -> np.ndarray:
    """Grid values (..., N) to unitary Fourier coefficients on modes -N/2..N/2-1."""
    c = scipy.fft.ifft(values, axis=-1, norm="ortho", workers=fft_workers())
    return np.fft.fftshift(c, axes=-1)


def grid_values(coefficients: np.ndarray) -> np.ndarray:
    """Inverse of :func:`fourier_coefficients`."""
    c = np.fft.ifftshift(coefficients, axes=-1)
    return scipy.fft.fft(c, axis=-1, norm="ortho", workers=fft_workers())


def derivative_symbol(grid: TimeGrid) -> np.ndarray:
    """Eigenvalues -n w of -i d/dt on the stored mode order."""
    return -grid.modes * grid.omega


def time_derivative_values(values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """(-i d/dt) applied to grid values along the last axis."""
    return grid_values(fourier_coefficients(values) * derivative_symbol(grid))


def band_limited_values(coefficients: np.ndarray, grid: TimeGrid, times) -> np.ndarray:
    """Evaluate the trigonometric interpolant at arbitrary times.

    The Nyquist mode is split evenly between n = -N/2 and n = +N/2 so that
    the interpolant of real data stays real.

    Arguments:
        coefficients: (..., N) unitary coefficients.
        grid: the grid the coefficients belong to.
        times: 1-d array of times.

    Returns:
        (..., len(times)) array of values.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    n = grid.modes.astype(float)
    N = grid.n_points
    basis = np.exp(-1j * np.outer(n, times) * grid.omega)
    if N % 2 == 0:
        basis[0] = np.cos(0.5 * N * grid.omega * times)
    return coefficients @ basis / np.sqrt(N)


@dataclass(frozen=True)
class ExtendedVector:
    """Amplitudes over channel x time with a representation tag.

    Attributes:
        amplitudes: complex array of shape (n_channels, n_points).
        representation: which basis the amplitudes are expressed in.
    """

    amplitudes: np.ndarray
    representation: Representation = Representation.TIME_GRID
    grid: TimeGrid | None = field(default=None, compare=False)

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex, ndmin=2)
        if a.ndim != 2:
            raise ValueError("amplitudes must be 2-d (channels, points)")
        if self.grid is not None and a.shape[1] != self.grid.n_points:
            raise ValueError("amplitudes do not match the grid")
        object.__setattr__(self, "amplitudes", a)

    @property
    def shape(self) -> tuple:
        return self.amplitudes.shape

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def to_fourier(x: ExtendedVector) -> ExtendedVector:
    if x.representation is not Representation.TIME_GRID:
        raise ValueError("to_fourier expects a time-grid vector")
    return ExtendedVector(fourier_coefficients(x.amplitudes), Representation.FOURIER, x.grid)


def to_time_grid(x: ExtendedVector) -> ExtendedVector:
    if x.representation is not Representation.FOURIER:
        raise ValueError("to_time_grid expects a Fourier vector")
    return ExtendedVector(grid_values(x.amplitudes), Representation.TIME_GRID, x.grid)


def apply_time_derivative(x: ExtendedVector, grid: TimeGrid | None = None) -> ExtendedVector:
    """Return (-i d/dt) x in the representation of ``x``.

    Arguments:
        x: vector to differentiate.
        grid: period information; defaults to ``x.grid``.
    """
    grid = grid or x.grid
    if grid is None:
        raise ValueError("a TimeGrid is required for the derivative")
    if x.shape[1] != grid.n_points:
        raise ValueError("vector does not match the grid")
    if x.representation is Representation.FOURIER:
        return ExtendedVector(x.amplitudes * derivative_symbol(grid), x.representation, grid)
    return ExtendedVector(time_derivative_values(x.amplitudes, grid), x.representation, grid)
