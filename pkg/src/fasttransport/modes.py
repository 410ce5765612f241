"""Transport modes of the moving harmonic trap and their invariant.

With rho = 1 the quadratic dynamical invariant reduces to

    I = (p - m q_c')**2 / 2m + m omega0**2 (q - q_c)**2 / 2,

whose eigenstates are oscillator eigenfunctions centred on the classical
path and boosted by its momentum.  Multiplied by the Lewis-Riesenfeld phase
they solve the time-dependent Schrodinger equation exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import PhysicalParams
from .quadrature import integrate
from .wavefunction import Grid, WaveFunction

N_CAP = 50


def hermite_functions(n_max: int, xi) -> np.ndarray:
    """Normalised Hermite functions phi_0..phi_{n_max} of dimensionless xi.

    Uses the three-term recurrence on already normalised functions,
    so no factorials appear.  Returns shape (n_max + 1,) + xi.shape.
    """
    if n_max < 0 or n_max > N_CAP:
        raise ValueError(f"n must lie in [0, {N_CAP}]")
    xi = np.asarray(xi, dtype=float)
    out = np.empty((n_max + 1,) + xi.shape)
    out[0] = math.pi**-0.25 * np.exp(-0.5 * xi**2)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * xi * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * xi * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def oscillator_eigenfunction(n: int, x, params: PhysicalParams, center: float = 0.0) -> np.ndarray:
    """phi_n(x - center) for the trap of frequency omega0, normalised in x."""
    ell = params.oscillator_length
    return hermite_functions(n, (np.asarray(x) - center) / ell)[n] / math.sqrt(ell)


@dataclass(frozen=True)
class TransportMode:
    n: int
    traj: object

    def __post_init__(self):
        if not 0 <= self.n <= N_CAP:
            raise ValueError(f"n must lie in [0, {N_CAP}]")

    @property
    def params(self) -> PhysicalParams:
        return self.traj.params

    @property
    def eigenvalue(self) -> float:
        return self.params.level(self.n)


def lr_phase(mode: TransportMode, t: float, lab_gauge: bool = False, rtol: float = 1e-12) -> float:
    """Lewis-Riesenfeld phase alpha_n(t) = -(E_n t + int_0^t m q_c'^2 / 2) / hbar.

    This is the phase attached to the transport modes when the trap energy
    is written as m omega0**2 (q - q_0)**2 / 2.  That form drops a
    q-independent term, so the mode then differs from the exact solution of
    that Hamiltonian by a global phase.  ``lab_gauge=True`` adds the missing
    -(1/hbar) int m omega0**2 (q_0**2 - q_c**2) / 2 dt so the mode matches a
    propagated wave function including its phase (for g = 0).
    """
    p = mode.params
    traj = mode.traj
    if t == 0:
        return 0.0
    m, w = p.mass, p.omega0

    def integrand(u):
        val = 0.5 * m * traj.qc(u, 1) ** 2
        if lab_gauge:
            val = val + 0.5 * m * w**2 * (traj.q0(u) ** 2 - traj.qc(u) ** 2)
        return val

    action = integrate(integrand, 0.0, t, traj.breakpoints, rtol=rtol)
    return -(mode.eigenvalue * t + action) / p.hbar


def mode_wavefunction(mode: TransportMode, t: float, grid: Grid, lab_gauge: bool = False,
                      norm_tol: float = 1e-10) -> WaveFunction:
    """The n-th transport mode at time ``t`` sampled on ``grid``."""
    p = mode.params
    traj = mode.traj
    qc = float(traj.qc(t))
    vc = float(traj.qc(t, 1))
    x = grid.x
    phase = lr_phase(mode, t, lab_gauge=lab_gauge) + p.mass * vc * x / p.hbar
    psi = WaveFunction(np.exp(1j * phase) * oscillator_eigenfunction(mode.n, x, p, qc), grid)
    deficit = abs(psi.norm() - 1.0)
    if deficit > norm_tol:
        raise ValueError(f"grid too small for mode {mode.n} at t={t}: norm deficit {deficit:.3e}")
    return psi


def invariant_expectation(psi: WaveFunction, traj, t: float) -> float:
    """<psi| I(t) |psi> using a spectral derivative for the kinetic part."""
    p = traj.params
    grid = psi.grid
    qc = float(traj.qc(t))
    vc = float(traj.qc(t, 1))
    # remove the classical momentum, then <p^2>
    moving = psi.amplitudes * np.exp(-1j * p.mass * vc * grid.x / p.hbar)
    pk = np.abs(np.fft.fft(moving)) ** 2
    norm = psi.norm() ** 2
    kinetic = float(np.sum(pk * (p.hbar * grid.k) ** 2) / np.sum(pk)) / (2 * p.mass)
    potential = 0.5 * p.mass * p.omega0**2 * float(np.sum(psi.probability() * (grid.x - qc) ** 2) * grid.dx) / norm
    return kinetic + potential


def mode_populations(psi: WaveFunction, traj, t: float, n_max: int = 16) -> np.ndarray:
    """|<psi_n(t)|psi>|**2 for n = 0..n_max over the transport modes at ``t``."""
    p = traj.params
    grid = psi.grid
    qc = float(traj.qc(t))
    vc = float(traj.qc(t, 1))
    moving = psi.amplitudes * np.exp(-1j * p.mass * vc * grid.x / p.hbar)
    ell = p.oscillator_length
    basis = hermite_functions(n_max, (grid.x - qc) / ell) / math.sqrt(ell)
    overlaps = basis @ moving * grid.dx
    return np.abs(overlaps) ** 2
