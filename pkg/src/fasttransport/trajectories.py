"""Classical paths q_c(t) and trap paths q_0(t) for every transport protocol.

For a rigid harmonic trap the classical centre of every transport mode obeys

    q_c'' + omega0**2 (q_c - q_0) = -g,

so a protocol is designed by choosing q_c with the right boundary values and
reading off q_0 = q_c + (q_c'' + g) / omega0**2.  Polynomial protocols are
represented exactly by their coefficients in s = t / t_f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq

from .params import PhysicalParams, TransportSpec


class TrajectoryKind(str, Enum):
    INVERSE_POLYNOMIAL = "inverse_polynomial"
    STOPPING = "stopping"
    LAUNCHING = "launching"
    BANG_BANG = "bang_bang"
    QUASI_OPTIMAL = "quasi_optimal"
    GRAVITY_VARIANT = "gravity"
    CUSTOM = "custom"


# ---------------------------------------------------------------------------
# path evaluators


@dataclass(frozen=True)
class PolynomialPath:
    """x(t) = sum_j coeffs[j] * (t / duration)**j."""

    coeffs: tuple[float, ...]
    duration: float

    def __call__(self, t, order: int = 0):
        s = np.asarray(t, dtype=float) / self.duration
        c = np.asarray(self.coeffs, dtype=float)
        if order:
            c = P.polyder(c, order)
        return P.polyval(s, c) / self.duration**order

    def scaled_coeffs(self, order: int = 0) -> np.ndarray:
        """Coefficients of the ``order``-th derivative with respect to s."""
        c = np.asarray(self.coeffs, dtype=float)
        return P.polyder(c, order) if order else c


@dataclass(frozen=True)
class BangBangTrapPath:
    """Two parabolas: acceleration +4d/t_f**2, then -4d/t_f**2."""

    distance: float
    duration: float
    offset: float = 0.0

    def __call__(self, t, order: int = 0):
        t = np.asarray(t, dtype=float)
        d, tf = self.distance, self.duration
        s = t / tf
        first = s < 0.5
        if order == 0:
            out = np.where(first, 2 * d * s**2, 4 * d * (s - s**2 / 2 - 0.25))
            return out + self.offset
        if order == 1:
            return np.where(first, 4 * d * s / tf, 4 * d * (1 - s) / tf)
        if order == 2:
            return np.where(first, 4 * d / tf**2, -4 * d / tf**2)
        return np.zeros_like(t)


@dataclass(frozen=True)
class BangBangClassicalPath:
    """Closed-form classical response to :class:`BangBangTrapPath`."""

    distance: float
    duration: float
    omega0: float

    def __call__(self, t, order: int = 0):
        t = np.asarray(t, dtype=float)
        w, tf = self.omega0, self.duration
        amp = 4 * self.distance / (w * tf) ** 2
        first = t < tf / 2
        if order == 0:
            diff = np.where(
                first,
                -amp * (1 - np.cos(w * t)),
                amp * (1 + np.cos(w * t) - 2 * np.cos(w * (t - tf / 2))),
            )
        else:
            shift = order * math.pi / 2
            diff = np.where(
                first,
                amp * w**order * np.cos(w * t + shift),
                amp * w**order * (np.cos(w * t + shift) - 2 * np.cos(w * (t - tf / 2) + shift)),
            )
        return BangBangTrapPath(self.distance, tf)(t, order) + diff


@dataclass(frozen=True)
class DerivedTrapPath:
    """q_0 = q_c + (q_c'' + g) / omega0**2 for an arbitrary smooth q_c."""

    classical: object
    omega0: float
    gravity: float = 0.0

    def __call__(self, t, order: int = 0):
        out = self.classical(t, order) + self.classical(t, order + 2) / self.omega0**2
        if order == 0:
            out = out + self.gravity / self.omega0**2
        return out


@dataclass(frozen=True)
class CallablePath:
    """User-supplied derivatives [x, x', x'', ...] as vectorised callables."""

    derivatives: tuple

    def __call__(self, t, order: int = 0):
        if order >= len(self.derivatives):
            raise ValueError(f"derivative of order {order} was not supplied")
        return np.asarray(self.derivatives[order](np.asarray(t, dtype=float)), dtype=float)


# ---------------------------------------------------------------------------
# trajectory container


@dataclass(frozen=True)
class Trajectory:
    kind: TrajectoryKind
    spec: TransportSpec
    params: PhysicalParams
    classical: object = None
    trap: object = None
    breakpoints: tuple[float, ...] = ()

    @property
    def duration(self) -> float:
        return self.spec.duration

    def qc(self, t, order: int = 0):
        if self.classical is None:
            raise ValueError("trajectory has no classical path")
        return self.classical(t, order)

    def q0(self, t, order: int = 0):
        if self.trap is None:
            raise ValueError("trajectory has no trap path; call derive_q0 first")
        return self.trap(t, order)

    @property
    def rest_positions(self) -> tuple[float, float]:
        """Trap positions before and after transport (including gravity sag)."""
        sag = self.params.sag
        return sag, self.spec.distance + sag


# ---------------------------------------------------------------------------
# boundary-value synthesis


@dataclass(frozen=True)
class Endpoint:
    position: float
    velocity: float = 0.0
    acceleration: float | None = 0.0


@dataclass(frozen=True)
class BoundaryConditions:
    start: Endpoint
    end: Endpoint

    def __post_init__(self):
        if (self.start.acceleration is None) != (self.end.acceleration is None):
            raise ValueError("accelerations must be imposed at both endpoints or at neither")

    @property
    def count(self) -> int:
        return 4 if self.start.acceleration is None else 6

    def conditions(self):
        """[(s, derivative order, value)] in physical units."""
        out = []
        for s, ep in ((0, self.start), (1, self.end)):
            out.append((s, 0, ep.position))
            out.append((s, 1, ep.velocity))
            if ep.acceleration is not None:
                out.append((s, 2, ep.acceleration))
        return out

    @classmethod
    def rest_to_rest(cls, distance: float) -> "BoundaryConditions":
        return cls(Endpoint(0.0), Endpoint(distance))

    @classmethod
    def four_point(cls, distance: float) -> "BoundaryConditions":
        return cls(Endpoint(0.0, 0.0, None), Endpoint(distance, 0.0, None))

    @classmethod
    def stopping(cls, distance: float, velocity: float) -> "BoundaryConditions":
        return cls(Endpoint(0.0, velocity), Endpoint(distance))

    @classmethod
    def launching(cls, distance: float, velocity: float) -> "BoundaryConditions":
        return cls(Endpoint(0.0), Endpoint(distance, velocity))


@lru_cache(maxsize=16)
def _inverse_system(rows: tuple[tuple[int, int], ...]) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Exact inverse of the (s, order) -> coefficient matrix for s in {0, 1}.

    Row i of the inverse is returned as (integer numerators, denominator).
    """
    k = len(rows)
    a = []
    for s, order in rows:
        a.append([math.perm(j, order) * s ** (j - order) if j >= order else 0 for j in range(k)]
                 + [int(i == len(a)) for i in range(k)])
    # integer Gauss-Jordan; rows are scaled rather than divided, so every
    # entry stays an exact int
    for col in range(k):
        pivot = next(r for r in range(col, k) if a[r][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        p = a[col][col]
        for r in range(k):
            f = a[r][col]
            if r != col and f != 0:
                a[r] = [p * v - f * w for v, w in zip(a[r], a[col])]
                g = math.gcd(*a[r])
                a[r] = [v // g for v in a[r]]
    out = []
    for i, row in enumerate(a):
        sign = -1 if row[i] < 0 else 1
        out.append((tuple(sign * v for v in row[k:]), sign * row[i]))
    return tuple(out)


def _dyadic(values):
    """Exact integers n_i and a shared power-of-two denominator for floats."""
    ratios = [Fraction(v) for v in values]
    den = max(r.denominator for r in ratios)
    return [r.numerator * (den // r.denominator) for r in ratios], den


def polynomial_coefficients(bc: BoundaryConditions, duration: float) -> tuple[float, ...]:
    """Coefficients in s of the degree k-1 polynomial meeting all k conditions.

    The linear system has integer entries and is solved exactly in integer
    arithmetic; only the final division rounds, so e.g. rest-to-rest returns
    exactly (0, 0, 0, 10, -15, 6) d.
    """
    conds = bc.conditions()
    if len(conds) not in (4, 6):
        raise ValueError(f"need 4 or 6 boundary conditions, got {len(conds)}")
    inv = _inverse_system(tuple((s, order) for s, order, _ in conds))
    tf = Fraction(duration)
    # value * t_f**order, exactly, as n_i / den
    rhs, den = _dyadic([Fraction(value) * tf**order for _, order, value in conds])
    return tuple(sum(m * r for m, r in zip(nums, rhs)) / (d * den) for nums, d in inv)


def solve_polynomial_qc(bc: BoundaryConditions, spec: TransportSpec,
                        params: PhysicalParams | None = None,
                        kind: TrajectoryKind = TrajectoryKind.CUSTOM) -> Trajectory:
    """Interpolating polynomial for q_c; the trap path is left unset."""
    coeffs = polynomial_coefficients(bc, spec.duration)
    return Trajectory(kind, spec, params or PhysicalParams(),
                      classical=PolynomialPath(coeffs, spec.duration))


def derive_q0(traj: Trajectory, params: PhysicalParams | None = None) -> Trajectory:
    """Attach q_0 = q_c + (q_c'' + g) / omega0**2 to ``traj``."""
    params = params or traj.params
    qc = traj.classical
    if qc is None:
        raise ValueError("trajectory has no classical path")
    if isinstance(qc, PolynomialPath):
        b = params.omega0 * qc.duration
        c = np.zeros(len(qc.coeffs))
        c[:] = qc.coeffs
        acc = qc.scaled_coeffs(2) / b**2
        c[: len(acc)] += acc
        c[0] += params.sag
        trap = PolynomialPath(tuple(c), qc.duration)
    else:
        trap = DerivedTrapPath(qc, params.omega0, params.gravity)
    return replace(traj, params=params, trap=trap)


def rest_to_rest(spec: TransportSpec, params: PhysicalParams | None = None) -> Trajectory:
    """Quintic q_c with zero velocity and acceleration at both ends."""
    params = params or PhysicalParams()
    kind = TrajectoryKind.GRAVITY_VARIANT if params.gravity else TrajectoryKind.INVERSE_POLYNOMIAL
    traj = solve_polynomial_qc(BoundaryConditions.rest_to_rest(spec.distance), spec, params, kind)
    return derive_q0(traj)


def gravity_trajectory(spec: TransportSpec, params: PhysicalParams) -> Trajectory:
    """Vertical rest-to-rest transport; the trap rides g/omega0**2 above q_c."""
    traj = solve_polynomial_qc(BoundaryConditions.rest_to_rest(spec.distance), spec, params,
                               TrajectoryKind.GRAVITY_VARIANT)
    return derive_q0(traj)


def quasi_optimal_trajectory(spec: TransportSpec, params: PhysicalParams | None = None) -> Trajectory:
    """Cubic q_c = d(3s^2 - 2s^3), the minimiser of the averaged E_P
    under position and velocity conditions only.  Its q_0 jumps at the ends."""
    traj = solve_polynomial_qc(BoundaryConditions.four_point(spec.distance), spec,
                               params or PhysicalParams(), TrajectoryKind.QUASI_OPTIMAL)
    return derive_q0(traj)


def stopping_trajectory(spec: TransportSpec, params: PhysicalParams | None = None) -> Trajectory:
    if spec.distance == 0:
        raise ValueError("stopping needs a nonzero distance")
    bc = BoundaryConditions.stopping(spec.distance, spec.v_initial)
    traj = solve_polynomial_qc(bc, spec, params or PhysicalParams(), TrajectoryKind.STOPPING)
    return derive_q0(traj)


def launching_trajectory(spec: TransportSpec, params: PhysicalParams | None = None) -> Trajectory:
    bc = BoundaryConditions.launching(spec.distance, spec.v_final)
    traj = solve_polynomial_qc(bc, spec, params or PhysicalParams(), TrajectoryKind.LAUNCHING)
    return derive_q0(traj)


def bang_bang_trajectory(spec: TransportSpec, params: PhysicalParams | None = None) -> Trajectory:
    """Piecewise constant trap acceleration, switched at t_f / 2.

    The boundary conditions at t_f only hold for t_f = 4 pi N / omega0.
    """
    params = params or PhysicalParams()
    d, tf = spec.distance, spec.duration
    return Trajectory(
        TrajectoryKind.BANG_BANG, spec, params,
        classical=BangBangClassicalPath(d, tf, params.omega0),
        trap=BangBangTrapPath(d, tf, params.sag),
        breakpoints=(tf / 2,),
    )


def compensated_trajectory(spec: TransportSpec, params: PhysicalParams | None = None,
                           smooth: bool = True) -> Trajectory:
    """Trap path designed directly, for force-compensated transport.

    q_0 is the rest-to-rest polynomial (quintic when ``smooth``, otherwise
    the cubic, which has acceleration jumps at the ends).  In this scheme the
    mode centre is the trap itself, so q_c is set to q_0.
    """
    bc = (BoundaryConditions.rest_to_rest if smooth else BoundaryConditions.four_point)(spec.distance)
    path = PolynomialPath(polynomial_coefficients(bc, spec.duration), spec.duration)
    return Trajectory(TrajectoryKind.CUSTOM, spec, params or PhysicalParams(),
                      classical=path, trap=path)


def custom_trajectory(spec: TransportSpec, params: PhysicalParams, qc=None, q0=None,
                      breakpoints=()) -> Trajectory:
    """Wrap user callables; each of ``qc``/``q0`` is a sequence of derivatives."""
    classical = CallablePath(tuple(qc)) if qc is not None else None
    trap = CallablePath(tuple(q0)) if q0 is not None else None
    return Trajectory(TrajectoryKind.CUSTOM, spec, params, classical, trap, tuple(breakpoints))


BUILDERS = {
    TrajectoryKind.INVERSE_POLYNOMIAL: rest_to_rest,
    TrajectoryKind.STOPPING: stopping_trajectory,
    TrajectoryKind.LAUNCHING: launching_trajectory,
    TrajectoryKind.BANG_BANG: bang_bang_trajectory,
    TrajectoryKind.QUASI_OPTIMAL: quasi_optimal_trajectory,
    TrajectoryKind.GRAVITY_VARIANT: gravity_trajectory,
}


def build_trajectory(kind, spec: TransportSpec, params: PhysicalParams) -> Trajectory:
    kind = TrajectoryKind(kind)
    if kind == TrajectoryKind.CUSTOM:
        return compensated_trajectory(spec, params)
    return BUILDERS[kind](spec, params)


# ---------------------------------------------------------------------------
# geometric domain


@dataclass(frozen=True)
class DomainReport:
    minimum: float
    maximum: float
    violates_below: bool
    violates_above: bool
    extremal_times: tuple[float, ...]


def domain_scan(traj: Trajectory, samples: int = 2048) -> DomainReport:
    """Global extrema of q_0 on [0, t_f] and whether it leaves the rest interval.

    q_0 is sampled uniformly, every sign change of q_0' is refined by
    bracketing root search, and endpoints are always candidates.
    """
    tf = traj.duration
    t = np.union1d(np.linspace(0.0, tf, samples), np.asarray(traj.breakpoints, dtype=float))
    v = traj.q0(t, 1)
    cand = [0.0, tf]
    for i in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
        cand.append(brentq(lambda x: float(traj.q0(x, 1)), t[i], t[i + 1], xtol=1e-15 * max(tf, 1)))
    cand.extend(t[v == 0.0])
    cand = np.unique(np.asarray(cand))
    values = np.concatenate([traj.q0(cand), traj.q0(t)])
    times = np.concatenate([cand, t])
    lo, hi = traj.rest_positions
    eps = 1e-12 * abs(traj.spec.distance)
    i_min, i_max = int(np.argmin(values)), int(np.argmax(values))
    return DomainReport(
        minimum=float(values[i_min]),
        maximum=float(values[i_max]),
        violates_below=bool(values[i_min] < lo - eps),
        violates_above=bool(values[i_max] > hi + eps),
        extremal_times=tuple(float(x) for x in cand),
    )


def _unit_interval_extrema(coeffs: np.ndarray, n_samples: int = 257):
    """Min and max over s in [0, 1] of many polynomials at once.

    ``coeffs`` has shape (m, k) in ascending order.  Critical points come
    from the companion-matrix eigenvalues of the derivative; a coarse sample
    grid is added as a safeguard.
    """
    m, k = coeffs.shape
    der = coeffs[:, 1:] * np.arange(1, k)[None, :]
    scale = np.max(np.abs(der), axis=1, keepdims=True)
    scale[scale == 0] = 1.0
    der = der / scale
    # drop leading columns that vanish for every row
    while der.shape[1] > 1 and np.all(np.abs(der[:, -1]) < 1e-13):
        der = der[:, :-1]
    s = np.linspace(0.0, 1.0, n_samples)
    vals = P.polyval(s, coeffs.T)  # (m, n_samples)
    lo, hi = vals.min(axis=1), vals.max(axis=1)
    deg = der.shape[1] - 1
    if deg >= 1:
        lead = der[:, -1]
        ok = np.abs(lead) > 1e-13
        comp = np.zeros((m, deg, deg))
        comp[:, 1:, :-1] = np.eye(deg - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            comp[:, :, -1] = -der[:, :-1] / np.where(ok, lead, 1.0)[:, None]
        roots = np.linalg.eigvals(comp)
        real = roots.real
        good = (np.abs(roots.imag) < 1e-7) & (real > 0) & (real < 1) & ok[:, None]
        for j in range(deg):
            r = np.clip(real[:, j], 0.0, 1.0)
            val = np.einsum("ij,ij->i", coeffs, r[:, None] ** np.arange(k)[None, :])
            lo = np.where(good[:, j], np.minimum(lo, val), lo)
            hi = np.where(good[:, j], np.maximum(hi, val), hi)
        for i in np.nonzero(~ok)[0]:
            r = np.roots(der[i, ::-1]) if np.any(der[i]) else np.array([])
            r = r[(np.abs(r.imag) < 1e-7) & (r.real > 0) & (r.real < 1)].real
            if r.size:
                val = P.polyval(r, coeffs[i])
                lo[i], hi[i] = min(lo[i], val.min()), max(hi[i], val.max())
    return lo, hi


@lru_cache(maxsize=1)
def _stopping_basis():
    """q_c/d coefficients at a = 0 and a = 1 (they are affine in a)."""
    base = np.array(polynomial_coefficients(BoundaryConditions.stopping(1.0, 0.0), 1.0))
    unit = np.array(polynomial_coefficients(BoundaryConditions.stopping(1.0, 1.0), 1.0))
    return base, unit - base


def stopping_q0_coefficients(a, b) -> np.ndarray:
    """Coefficients (ascending in s) of q_0/d for the stopping protocol.

    Broadcasts over ``a`` and ``b``; result shape is broadcast(a, b) + (6,).
    """
    base, slope = _stopping_basis()
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    qc = base + a[..., None] * slope
    acc = np.zeros_like(qc)
    acc[..., :4] = P.polyder(qc.reshape(-1, 6).T, 2).T.reshape(qc.shape[:-1] + (4,))
    return qc + acc / (b[..., None] ** 2)


@dataclass(frozen=True)
class RegionMap:
    a: np.ndarray
    b_over_2pi: np.ndarray
    below: np.ndarray  # shape (len(a), len(b_over_2pi))
    above: np.ndarray
    minimum: np.ndarray
    maximum: np.ndarray

    def rows(self):
        for i, a in enumerate(self.a):
            for j, b in enumerate(self.b_over_2pi):
                yield float(a), float(b), bool(self.below[i, j]), bool(self.above[i, j])


def stopping_region_map(a_range=(0.0, 5.0), b_over_2pi_range=(0.05, 2.0), resolution=200,
                        a_values=None, b_over_2pi_values=None) -> RegionMap:
    """Where the stopping trap path leaves [0, d], over a grid of (a, b/2pi)."""
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    if min(resolution) < 1:
        raise ValueError("resolution must be positive")
    a_vals = np.asarray(a_values if a_values is not None else np.linspace(*a_range, resolution[0]), float)
    b_vals = np.asarray(b_over_2pi_values if b_over_2pi_values is not None
                        else np.linspace(*b_over_2pi_range, resolution[1]), float)
    if np.any(b_vals <= 0):
        raise ValueError("b/2pi must be positive")
    A, B = np.meshgrid(a_vals, 2 * np.pi * b_vals, indexing="ij")
    coeffs = stopping_q0_coefficients(A, B).reshape(-1, 6)
    lo, hi = _unit_interval_extrema(coeffs)
    lo, hi = lo.reshape(A.shape), hi.reshape(A.shape)
    return RegionMap(a_vals, b_vals, lo < -1e-12, hi > 1 + 1e-12, lo, hi)


# ---------------------------------------------------------------------------
# thresholds


def _bisect(indicator, lo: float, hi: float, tol: float) -> float:
    """Boundary between indicator(lo) and indicator(hi), which must differ."""
    f_lo = indicator(lo)
    if f_lo == indicator(hi):
        raise ValueError(f"indicator does not change sign on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if indicator(mid) == f_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def critical_duration(params: PhysicalParams | None = None, lo: float = 1.0,
                      hi: float = 2 * math.pi, tol: float = 1e-6) -> float:
    """omega0 t_f below which the rest-to-rest trap path leaves [0, d]."""
    params = params or PhysicalParams()

    def violates(b):
        traj = rest_to_rest(TransportSpec(1.0, b / params.omega0), params)
        rep = domain_scan(traj)
        return rep.violates_below or rep.violates_above

    return _bisect(violates, lo, hi, tol)


def below_violation_boundary(a: float, lo: float = 0.05, hi: float = 2 * math.pi,
                             tol: float = 1e-6) -> float:
    """b = omega0 t_f at which the stopping path stops dipping below 0."""
    def below(b):
        c = stopping_q0_coefficients(a, b).reshape(1, 6)
        return bool(_unit_interval_extrema(c)[0][0] < -1e-12)

    return _bisect(below, lo, hi, tol)


def above_violation_onset(b_over_2pi_values, lo: float = 2.0, hi: float = 3.0,
                          tol: float = 1e-6) -> float:
    """Smallest a for which q_0 > d somewhere for every sampled b."""
    b = 2 * np.pi * np.asarray(b_over_2pi_values, float)

    def all_above(a):
        c = stopping_q0_coefficients(np.full_like(b, a), b)
        return bool(np.all(_unit_interval_extrema(c)[1] > 1 + 1e-12))

    return _bisect(all_above, lo, hi, tol)


def sample_design(traj: Trajectory, samples: int = 201):
    """(s, q_c/d, q_0/d) on a uniform grid in s, for CSV export."""
    s = np.linspace(0.0, 1.0, samples)
    t = s * traj.duration
    d = traj.spec.distance or 1.0
    return s, traj.qc(t) / d, traj.q0(t) / d
