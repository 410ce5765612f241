"""Uniform periodic grids and wave functions sampled on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .params import NumericsConfig, PhysicalParams


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    x_min: float
    dx: float
    n: int

    @cached_property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n, self.dx)

    @property
    def x_max(self) -> float:
        return self.x_min + self.dx * (self.n - 1)

    @property
    def length(self) -> float:
        return self.dx * self.n

    @classmethod
    def spanning(cls, lo: float, hi: float, n: int) -> "Grid":
        if not hi > lo:
            raise ValueError("grid needs hi > lo")
        return cls(lo, (hi - lo) / n, n)

    def same_as(self, other: "Grid") -> bool:
        return self.n == other.n and math.isclose(self.x_min, other.x_min, abs_tol=1e-12 * self.length) \
            and math.isclose(self.dx, other.dx, rel_tol=1e-12)


def grid_for(traj, numerics: NumericsConfig | None = None, n: int = 0) -> Grid:
    """Grid covering q_0 and q_c over the whole protocol plus padding.

    The padding is ``numerics.grid_padding`` ground-state widths, widened
    by the classical turning point of level ``n``.
    """
    numerics = numerics or NumericsConfig()
    params: PhysicalParams = traj.params
    t = np.union1d(np.linspace(0.0, traj.duration, 2049), traj.breakpoints)
    paths = [traj.q0(t)]
    if traj.classical is not None:
        paths.append(traj.qc(t))
    lo = min(float(np.min(p)) for p in paths)
    hi = max(float(np.max(p)) for p in paths)
    sigma = params.ground_width
    pad = (numerics.grid_padding + math.sqrt(2 * (2 * n + 1)) - math.sqrt(2)) * sigma
    return Grid.spanning(lo - pad, hi + pad, numerics.grid_points)


@dataclass(frozen=True, eq=False)
class WaveFunction:
    amplitudes: np.ndarray
    grid: Grid

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.grid.n,):
            raise ValueError("amplitude array does not match the grid")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.amplitudes) ** 2)) * self.grid.dx)

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.amplitudes / self.norm(), self.grid)

    def inner(self, other: "WaveFunction") -> complex:
        """<self|other>."""
        if not self.grid.same_as(other.grid):
            raise GridMismatchError("wave functions live on different grids")
        return complex(np.vdot(self.amplitudes, other.amplitudes) * self.grid.dx)

    def probability(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def expect_x(self, power: int = 1) -> float:
        return float(np.sum(self.probability() * self.x**power) * self.grid.dx)

    def momentum_amplitudes(self) -> np.ndarray:
        return np.fft.fft(self.amplitudes)

    def expect_p(self, hbar: float, power: int = 1) -> float:
        pk = np.abs(self.momentum_amplitudes()) ** 2
        return float(np.sum(pk * (hbar * self.grid.k) ** power) / np.sum(pk))

    def boundary_amplitude(self) -> float:
        a = np.abs(self.amplitudes)
        return float(max(a[0], a[-1]))

    def momentum_edge_fraction(self) -> float:
        """Probability in the outer eighth of the momentum grid on each side."""
        pk = np.abs(np.fft.fftshift(self.momentum_amplitudes())) ** 2
        m = max(1, self.grid.n // 16)
        return float((pk[:m].sum() + pk[-m:].sum()) / pk.sum())

    def shifted(self, distance: float) -> "WaveFunction":
        """psi(x - distance), by a spectral (exactly unitary) translation."""
        spec = np.fft.fft(self.amplitudes) * np.exp(-1j * self.grid.k * distance)
        return WaveFunction(np.fft.ifft(spec), self.grid)

    def boosted(self, momentum: float, hbar: float) -> "WaveFunction":
        return WaveFunction(self.amplitudes * np.exp(1j * momentum * self.x / hbar), self.grid)
