"""First-order effect of the quartic term of a cigar-shaped beam trap.

Along the beam axis V = -V0 / (1 + y**2/x_R**2) ~ -V0 + V0 y**2/x_R**2 - V0 y**4/x_R**4.
Treating the quartic term as a perturbation of the transport mode gives

    <psi(t_f)|psi~(t_f)> = 1 - i F / hbar,
    F = -(V0 / x_R**4) int_0^t_f <psi_n(t)| (q - q_0)**4 |psi_n(t)> dt.

Closed forms exist for the bang-bang and the quintic protocol at
t_f = 4 pi N / omega0 (and for the quintic at any t_f); ``f_numeric`` is the
quadrature oracle used to check them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .modes import N_CAP
from .params import NumericsConfig, PhysicalParams, TransportSpec
from .quadrature import integrate
from .trajectories import TrajectoryKind, bang_bang_trajectory, rest_to_rest


@dataclass(frozen=True)
class BeamParams:
    V0: float
    x_R: float
    waist: float | None = None
    wavelength: float | None = None

    def __post_init__(self):
        if not (self.V0 > 0 and self.x_R > 0):
            raise ValueError("V0 and x_R must be positive")

    @classmethod
    def from_frequency(cls, params: PhysicalParams, x_R: float) -> "BeamParams":
        """Depth matched to the trap frequency, V0 = m omega0**2 x_R**2 / 2."""
        return cls(0.5 * params.mass * params.omega0**2 * x_R**2, x_R)

    @classmethod
    def from_waist(cls, params: PhysicalParams, waist: float, wavelength: float) -> "BeamParams":
        x_R = math.pi * waist**2 / wavelength
        return cls(0.5 * params.mass * params.omega0**2 * x_R**2, x_R, waist, wavelength)

    def depth_ratio(self, params: PhysicalParams) -> float:
        """V0 relative to the frequency-matched depth."""
        return self.V0 / (0.5 * params.mass * params.omega0**2 * self.x_R**2)


def _prefactor(n: int, power: int) -> float:
    """2**-(power + n) (2n)!! / n!, evaluated in log space."""
    if not 0 <= n <= N_CAP:
        raise ValueError(f"n must lie in [0, {N_CAP}]")
    log_dfact = n * math.log(2) + math.lgamma(n + 1)  # (2n)!! = 2**n n!
    return math.exp(-(power + n) * math.log(2) + log_dfact - math.lgamma(n + 1))


def _check_N(N) -> int:
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    return int(N)


def f_bang_bang(N: int, n: int, distance: float, params: PhysicalParams, beam: BeamParams) -> float:
    """F for the bang-bang protocol at t_f = 4 pi N / omega0."""
    N = _check_N(N)
    m, w, hbar, d = params.mass, params.omega0, params.hbar, distance
    pi = math.pi
    brace = (1536 * N**8 * hbar**2 * (1 + 2 * n * (1 + n)) * pi**8
             + 576 * d**2 * N**4 * hbar * m * (1 + 2 * n) * pi**4 * w
             + 35 * d**4 * m**2 * w**2)
    value = -_prefactor(n, 10) * brace / (N**7 * m * pi**7 * w * beam.x_R**2)
    return value * beam.depth_ratio(params)


def f_inverse(t_f: float, n: int, distance: float, params: PhysicalParams, beam: BeamParams) -> float:
    """F for the quintic rest-to-rest protocol at any t_f > 0."""
    if not t_f > 0:
        raise ValueError("t_f must be positive")
    m, w, hbar, d = params.mass, params.omega0, params.hbar, distance
    bracket = (1728000 * d**4 / (1001 * t_f**7 * w**8)
               + 1440 * d**2 * hbar * (1 + 2 * n) / (7 * m * t_f**3 * w**5)
               + hbar**2 * (3 + 6 * n * (1 + n)) * t_f / (m**2 * w**2))
    return -_prefactor(n, 2) * beam.V0 * bracket / beam.x_R**4


def f_inverse_discrete(N: int, n: int, distance: float, params: PhysicalParams, beam: BeamParams) -> float:
    """F for the quintic protocol at t_f = 4 pi N / omega0."""
    N = _check_N(N)
    m, w, hbar, d = params.mass, params.omega0, params.hbar, distance
    pi = math.pi
    brace = (128128 * N**8 * hbar**2 * (1 + 2 * n * (1 + n)) * pi**8
             + 34320 * d**2 * N**4 * hbar * m * (1 + 2 * n) * pi**4 * w
             + 1125 * d**4 * m**2 * w**2)
    value = -3 * _prefactor(n, 8) * brace / (1001 * N**7 * m * pi**7 * w * beam.x_R**2)
    return value * beam.depth_ratio(params)


def quartic_moment(delta, n: int, params: PhysicalParams):
    """<psi_n|(q - q_0)**4|psi_n> for a mode displaced by delta = q_c - q_0."""
    s2 = params.hbar / (2 * params.mass * params.omega0)
    xi2 = (2 * n + 1) * s2
    xi4 = 3 * (2 * n * n + 2 * n + 1) * s2**2
    return delta**4 + 6 * delta**2 * xi2 + xi4


def f_numeric(traj, n: int, params: PhysicalParams | None = None, beam: BeamParams | None = None,
              rtol: float = 1e-12) -> float:
    """Quadrature oracle for F along any harmonic protocol."""
    params = params or traj.params
    if beam is None:
        raise ValueError("beam parameters are required")
    if not 0 <= n <= N_CAP:
        raise ValueError(f"n must lie in [0, {N_CAP}]")

    def integrand(t):
        return quartic_moment(traj.qc(t) - traj.q0(t), n, params)

    val = integrate(integrand, 0.0, traj.duration, traj.breakpoints, rtol=rtol)
    return -beam.V0 / beam.x_R**4 * val


@dataclass(frozen=True)
class PerturbationReport:
    F_closed: float
    F_numeric: float
    first_order_overlap: complex
    discrepancy: float

    def to_dict(self) -> dict:
        ov = self.first_order_overlap
        return {
            "F_closed": self.F_closed,
            "F_numeric": self.F_numeric,
            "first_order_overlap": {"re": ov.real, "im": ov.imag},
            "discrepancy": self.discrepancy,
        }


def _discrete_index(traj) -> int | None:
    N = traj.duration * traj.params.omega0 / (4 * math.pi)
    k = round(N)
    return k if k >= 1 and abs(N - k) < 1e-9 * max(1.0, N) else None


def closed_form(traj, n: int, beam: BeamParams) -> float:
    """The closed-form F matching the protocol, or NaN when none exists."""
    p = traj.params
    d = traj.spec.distance
    N = _discrete_index(traj)
    if traj.kind == TrajectoryKind.BANG_BANG and N is not None:
        return f_bang_bang(N, n, d, p, beam)
    if traj.kind == TrajectoryKind.INVERSE_POLYNOMIAL:
        if N is not None:
            return f_inverse_discrete(N, n, d, p, beam)
        return f_inverse(traj.duration, n, d, p, beam)
    return math.nan


def perturbation_report(traj, n: int, beam: BeamParams, eps: float = 1e-300) -> PerturbationReport:
    p = traj.params
    f_cl = closed_form(traj, n, beam)
    f_num = f_numeric(traj, n, p, beam)
    disc = abs(f_cl - f_num) / max(abs(f_cl), eps) if math.isfinite(f_cl) else math.nan
    return PerturbationReport(f_cl, f_num, complex(1, -f_num / p.hbar), disc)


def perturbation_sweep(distance: float, params: PhysicalParams, beam: BeamParams,
                       Ns=(1, 2, 3), ns=(0, 1, 2)):
    """Rows (N, n, F_bb, F_inv, F_numeric_bb, F_numeric_inv)."""
    rows = []
    for N in Ns:
        spec = TransportSpec(distance, 4 * math.pi * N / params.omega0)
        bb = bang_bang_trajectory(spec, params)
        inv = rest_to_rest(spec, params)
        for n in ns:
            rows.append((N, n, f_bang_bang(N, n, distance, params, beam),
                         f_inverse_discrete(N, n, distance, params, beam),
                         f_numeric(bb, n, params, beam), f_numeric(inv, n, params, beam)))
    return rows


def tdse_overlap(traj, beam: BeamParams, n: int = 0, strength: float = 1.0,
                 numerics: NumericsConfig | None = None) -> complex:
    """<psi(t_f)|psi~(t_f)> from two propagations (harmonic and quartic-expanded).

    The harmonic part of the beam must match the trap frequency.
    """
    from .tdse import MovingHarmonic, QuarticExpanded, initial_state, propagate
    from .wavefunction import grid_for

    p = traj.params
    if not math.isclose(beam.depth_ratio(p), 1.0, rel_tol=1e-12):
        raise ValueError("beam depth must match the trap frequency")
    numerics = numerics or NumericsConfig(samples=2)
    grid = grid_for(traj, numerics, n)
    harm = MovingHarmonic(traj)
    quart = QuarticExpanded(beam.V0, beam.x_R, traj, strength)
    psi0 = initial_state(harm, grid, n)
    a = propagate(psi0, harm, numerics=numerics, n=n).final_state
    b = propagate(psi0, quart, numerics=numerics, n=n).final_state
    return a.inner(b)


def first_order_overlap(F: float, hbar: float = 1.0) -> complex:
    return complex(1.0, -F / hbar)



__all__ = [
    "BeamParams", "PerturbationReport", "closed_form", "f_bang_bang", "f_inverse",
    "f_inverse_discrete", "f_numeric", "first_order_overlap", "perturbation_report",
    "perturbation_sweep", "quartic_moment", "tdse_overlap",
]
