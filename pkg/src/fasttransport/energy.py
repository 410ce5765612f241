"""Transient energies of transport modes and lower bounds on them."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import eval_laguerre

from .modes import TransportMode
from .params import PhysicalParams, TransportSpec
from .quadrature import integrate
from .trajectories import PolynomialPath, rest_to_rest


@dataclass(frozen=True)
class EnergyReport:
    """Time series and time averages of the energy of one transport mode.

    ``EP_avg`` is the average of m omega0**2 (q_c - q_0)**2 / 2 by direct
    quadrature; ``EP_avg_from_acceleration`` is the same quantity computed
    as m / (2 t_f omega0**2) * int q_c''**2 dt.
    """

    t: np.ndarray
    EH: np.ndarray
    EP: np.ndarray
    Ekin_c: np.ndarray
    dH: np.ndarray
    EH_avg: float
    EP_avg: float
    EP_avg_from_acceleration: float
    Ekin_c_avg: float
    dH_avg: float
    dH2_avg: float

    def averages(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k.endswith(("_avg", "_acceleration"))}


@dataclass(frozen=True)
class BoundsReport:
    euler_lagrange_bound: float
    mvt_velocity_bound: float
    mvt_acceleration_bound: float
    instantaneous_EP_bound: float
    aa_bound_on_avg_dH: float
    variance_avg_bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def _series(mode: TransportMode, t):
    p = mode.params
    traj = mode.traj
    vc = traj.qc(t, 1)
    ep = 0.5 * p.mass * p.omega0**2 * (traj.qc(t) - traj.q0(t)) ** 2
    ek = 0.5 * p.mass * vc**2
    eh = mode.eigenvalue + ek + ep
    dh = np.sqrt(2 * p.quantum * (mode.n + 0.5) * (ep + ek))
    return eh, ep, ek, dh


def energy_report(mode: TransportMode, samples: int = 1001, rtol: float = 1e-10) -> EnergyReport:
    """Closed-form energies along a harmonic protocol (g = 0).

    <H> = (n + 1/2) hbar omega0 + m q_c'**2 / 2 + E_P and
    (Delta H)**2 = 2 hbar omega0 (n + 1/2) (E_P + m q_c'**2 / 2).
    """
    p = mode.params
    traj = mode.traj
    if p.gravity:
        raise ValueError("energy_report assumes a horizontal trap (gravity = 0)")
    tf = traj.duration
    t = np.linspace(0.0, tf, samples)
    eh, ep, ek, dh = _series(mode, t)

    def avg(i):
        return integrate(lambda u: _series(mode, u)[i], 0.0, tf, traj.breakpoints, rtol) / tf

    qc = traj.classical
    if isinstance(qc, PolynomialPath):
        acc = qc.scaled_coeffs(2)
        integral = P.polyval(1.0, P.polyint(P.polymul(acc, acc))) / tf**3
    else:
        integral = integrate(lambda u: traj.qc(u, 2) ** 2, 0.0, tf, traj.breakpoints, rtol)
    ep_closed = p.mass / (2 * tf * p.omega0**2) * integral
    dh2 = integrate(lambda u: _series(mode, u)[3] ** 2, 0.0, tf, traj.breakpoints, rtol) / tf
    return EnergyReport(
        t=t, EH=eh, EP=ep, Ekin_c=ek, dH=dh,
        EH_avg=avg(0), EP_avg=avg(1), EP_avg_from_acceleration=float(ep_closed),
        Ekin_c_avg=avg(2), dH_avg=avg(3), dH2_avg=dh2,
    )


def aa_bound(spec: TransportSpec, params: PhysicalParams, n: int = 0) -> float:
    """hbar arccos|<phi_n|phi_n(. - d)>| / t_f.

    For n = 0 the overlap is exp(-m omega0 d**2 / 4 hbar).
    """
    x = params.mass * params.omega0 * spec.distance**2 / (2 * params.hbar)
    overlap = abs(math.exp(-x / 2) * float(eval_laguerre(n, x)))
    return params.hbar * math.acos(min(overlap, 1.0)) / spec.duration


def bounds_report(spec: TransportSpec, params: PhysicalParams, n: int = 0) -> BoundsReport:
    m, w, hbar = params.mass, params.omega0, params.hbar
    d, tf = abs(spec.distance), spec.duration
    return BoundsReport(
        euler_lagrange_bound=6 * m * d**2 / (tf**4 * w**2),
        mvt_velocity_bound=d / tf,
        mvt_acceleration_bound=2 * d / tf**2,
        instantaneous_EP_bound=2 * m * (d / (w * tf**2)) ** 2,
        aa_bound_on_avg_dH=aa_bound(spec, params, n),
        # bounds the average of (Delta H)**2, not the average of Delta H
        variance_avg_bound=12 * hbar * (n + 0.5) * m * d**2 / (w * tf**4),
    )


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def energy_sweep(distance: float, durations, params: PhysicalParams, n: int = 0,
                 builder=rest_to_rest):
    """Rows (t_f, EP_avg, EL bound, dH_avg, AA bound) over ``durations``."""
    rows = []
    for tf in durations:
        spec = TransportSpec(distance, float(tf))
        rep = energy_report(TransportMode(n, builder(spec, params)), samples=2)
        b = bounds_report(spec, params, n)
        rows.append((float(tf), rep.EP_avg, b.euler_lagrange_bound, rep.dH_avg, b.aa_bound_on_avg_dH))
    return rows
