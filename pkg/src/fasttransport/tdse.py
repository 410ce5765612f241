"""Split-step propagation of a single atom in a moving trap.

Each step of length h applies exp(-i V h / 2 hbar) in position space,
the momentum-diagonal factor (kinetic energy and, for transitionless
driving, the p q_0' term) in Fourier space, and again the half potential
step.  Time-dependent coefficients are taken at the step midpoint; steps
are aligned with trajectory breakpoints (the bang-bang switch).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .modes import (
    TransportMode,
    hermite_functions,
    invariant_expectation,
    mode_populations,
    mode_wavefunction,
    oscillator_eigenfunction,
)
from .params import NumericsConfig, PhysicalParams
from .wavefunction import Grid, GridMismatchError, WaveFunction, grid_for

__all__ = [
    "CompensatedTrap", "Eigenstate", "GaussianBeamLongitudinal", "MovingHarmonic",
    "NumericalError", "QuarticExpanded", "SimulationResult", "TransitionlessMomentum",
    "fidelity", "ground_state", "mode_populations", "propagate", "simulate",
    "trap_frame_transform",
]


class NumericalError(RuntimeError):
    """Norm drift, NaN, or leakage to the grid edges during propagation."""


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Eigenstate(WaveFunction):
    energy: float = math.nan


def _harmonic(params: PhysicalParams):
    return lambda y: 0.5 * params.mass * params.omega0**2 * y**2


# ---------------------------------------------------------------------------
# potential models


@dataclass(frozen=True)
class MovingHarmonic:
    """m omega0**2 (q - q_0(t))**2 / 2 + m g q."""

    traj: object

    def potential(self, x, t):
        p = self.traj.params
        return 0.5 * p.mass * p.omega0**2 * (x - self.traj.q0(t)) ** 2 + p.mass * p.gravity * x

    static_potential = potential
    kinetic = True
    harmonic = True

    def drift(self, t0, t1):
        return 0.0


@dataclass(frozen=True)
class CompensatedTrap:
    """U(q - q_0(t)) - m q q_0''(t); ``U`` maps displacement to energy."""

    traj: object
    U: object = None

    def profile(self, y):
        return (self.U or _harmonic(self.traj.params))(y)

    def potential(self, x, t):
        return self.profile(x - self.traj.q0(t)) - self.traj.params.mass * x * self.traj.q0(t, 2)

    def static_potential(self, x, t):
        return self.profile(x - self.traj.q0(t))

    kinetic = True
    harmonic = False

    def drift(self, t0, t1):
        return 0.0


@dataclass(frozen=True)
class GaussianBeamLongitudinal:
    """On-axis focus of a Gaussian beam, -V0 / (1 + (q - q_0)**2 / x_R**2)."""

    V0: float
    x_R: float
    traj: object

    @classmethod
    def matched(cls, traj, x_R: float) -> "GaussianBeamLongitudinal":
        """Depth chosen so the small-oscillation frequency equals omega0."""
        p = traj.params
        return cls(0.5 * p.mass * p.omega0**2 * x_R**2, x_R, traj)

    def profile(self, y):
        return -self.V0 / (1 + (y / self.x_R) ** 2)

    def potential(self, x, t):
        return self.profile(x - self.traj.q0(t))

    static_potential = potential
    kinetic = True
    harmonic = False

    def drift(self, t0, t1):
        return 0.0


@dataclass(frozen=True)
class QuarticExpanded:
    """V0 y**2 / x_R**2 - strength * V0 y**4 / x_R**4 with y = q - q_0(t).

    The static reference for excitation and targets is the harmonic part.
    """

    V0: float
    x_R: float
    traj: object
    strength: float = 1.0

    @classmethod
    def matched(cls, traj, x_R: float, strength: float = 1.0) -> "QuarticExpanded":
        p = traj.params
        return cls(0.5 * p.mass * p.omega0**2 * x_R**2, x_R, traj, strength)

    def potential(self, x, t):
        y = (x - self.traj.q0(t)) / self.x_R
        return self.V0 * (y**2 - self.strength * y**4)

    def static_potential(self, x, t):
        return self.V0 * ((x - self.traj.q0(t)) / self.x_R) ** 2

    kinetic = True
    harmonic = False

    def drift(self, t0, t1):
        return 0.0


@dataclass(frozen=True)
class TransitionlessMomentum:
    """H_0 + p q_0'(t), or p q_0'(t) alone when ``include_H0`` is false.

    H_0 = p**2 / 2m + U(q - q_0); U defaults to the harmonic trap.
    """

    traj: object
    include_H0: bool = True
    U: object = None

    def profile(self, y):
        return (self.U or _harmonic(self.traj.params))(y)

    def potential(self, x, t):
        if not self.include_H0:
            return np.zeros_like(x)
        return self.profile(x - self.traj.q0(t))

    def static_potential(self, x, t):
        return self.profile(x - self.traj.q0(t))

    @property
    def kinetic(self):
        return self.include_H0

    harmonic = False

    def drift(self, t0, t1):
        # p q_0' commutes with itself at all times: integrate it exactly
        return float(self.traj.q0(t1) - self.traj.q0(t0))


# ---------------------------------------------------------------------------
# elementary operations


def fidelity(psi: WaveFunction, phi: WaveFunction) -> float:
    """|<phi|psi>|, insensitive to global phase."""
    if not psi.grid.same_as(phi.grid):
        raise GridMismatchError("fidelity needs both states on the same grid")
    return abs(phi.inner(psi))


def hamiltonian_expectation(psi: WaveFunction, V, params: PhysicalParams,
                            kinetic: bool = True, drift_velocity: float = 0.0) -> float:
    grid = psi.grid
    pk = np.abs(np.fft.fft(psi.amplitudes)) ** 2
    pk /= pk.sum()
    p = params.hbar * grid.k
    e = float(np.sum(psi.probability() * V) * grid.dx) / psi.norm() ** 2
    if kinetic:
        e += float(np.sum(pk * p**2)) / (2 * params.mass)
    if drift_velocity:
        e += drift_velocity * float(np.sum(pk * p))
    return e


def trap_frame_transform(psi: WaveFunction, traj, t: float, inverse: bool = False) -> WaveFunction:
    """Apply exp(i p q_0 / hbar) exp(-i m q_0' q / hbar) (or its inverse).

    The plane-wave factor acts first, then the state is translated by -q_0.
    """
    p = traj.params
    q0 = float(traj.q0(t))
    v0 = float(traj.q0(t, 1))
    if inverse:
        return psi.shifted(q0).boosted(p.mass * v0, p.hbar)
    return psi.boosted(-p.mass * v0, p.hbar).shifted(-q0)


def ground_state(U, grid: Grid, params: PhysicalParams, initial: WaveFunction | None = None,
                 schedule=(0.1, 0.02, 0.004), tol: float = 1e-12,
                 max_iter: int = 200_000) -> Eigenstate:
    """Ground state of p**2/2m + U(x) by imaginary-time split-step.

    ``U`` is a callable of position (or an array on ``grid``).  For each
    imaginary step in ``schedule`` (in units of 1/omega0) the state is
    renormalised every step until the energy changes by less than ``tol``.
    """
    x = grid.x
    V = np.asarray(U(x) if callable(U) else U, dtype=float)
    if V.shape != x.shape:
        raise ValueError("potential does not match the grid")
    if initial is None:
        center = x[int(np.argmin(V))]
        psi = oscillator_eigenfunction(0, x, params, center).astype(complex)
    else:
        psi = initial.amplitudes.copy()
    kin_energy = (params.hbar * grid.k) ** 2 / (2 * params.mass)

    def energy(a):
        pk = np.abs(np.fft.fft(a)) ** 2
        return float(np.sum(pk * kin_energy) / pk.sum() + np.sum(np.abs(a) ** 2 * V) / np.sum(np.abs(a) ** 2))

    iters = 0
    e_old = energy(psi)
    for dtau in schedule:
        h = dtau / params.omega0
        half = np.exp(-0.5 * h * (V - V.min()) / params.hbar)
        kin = np.exp(-h * kin_energy / params.hbar)
        while True:
            psi = half * np.fft.ifft(kin * np.fft.fft(half * psi))
            psi /= math.sqrt(float(np.sum(np.abs(psi) ** 2)) * grid.dx)
            e_new = energy(psi)
            iters += 1
            if abs(e_new - e_old) < tol:
                e_old = e_new
                break
            e_old = e_new
            if iters >= max_iter:
                raise ConvergenceError(f"imaginary-time search did not converge in {max_iter} steps")
    # fix the global phase so the state is real and mostly positive
    psi = psi * np.exp(-1j * np.angle(psi[np.argmax(np.abs(psi))]))
    return Eigenstate(psi, grid, energy=e_old)


# ---------------------------------------------------------------------------
# propagation


def _step_plan(duration: float, breakpoints, dt: float):
    """(start, step) pairs covering [0, duration] with steps <= dt."""
    cuts = sorted({0.0, duration, *[b for b in breakpoints if 0 < b < duration]})
    plan = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        k = max(1, math.ceil((hi - lo) / dt - 1e-9))
        h = (hi - lo) / k
        plan.extend((lo + i * h, h) for i in range(k))
    return plan


def _harmonic_static(pot) -> bool:
    if isinstance(pot, (MovingHarmonic, QuarticExpanded)):
        return True
    return isinstance(pot, (CompensatedTrap, TransitionlessMomentum)) and pot.U is None


def _static_center(pot, t: float) -> float:
    sag = pot.traj.params.sag if isinstance(pot, MovingHarmonic) else 0.0
    return float(pot.traj.q0(t)) - sag


def static_eigenstate(pot, grid: Grid, t: float, n: int = 0) -> Eigenstate:
    """Eigenstate ``n`` of the static trap at the position it has at ``t``."""
    p = pot.traj.params
    if _harmonic_static(pot):
        center = _static_center(pot, t)
        v_min = float(pot.static_potential(np.array([center]), t)[0])
        amp = oscillator_eigenfunction(n, grid.x, p, center)
        return Eigenstate(amp.astype(complex), grid, energy=p.level(n) + v_min)
    if n != 0:
        raise ValueError("only the ground state is available for anharmonic traps")
    return ground_state(lambda x: pot.static_potential(x, t), grid, p)


@dataclass
class SimulationResult:
    """Outcome of one propagation.

    ``fidelity`` is |<target|psi(t_f)>| with the target the level-n
    eigenstate of the static trap at its final position;
    ``populations`` are taken in that trap's eigenbasis (only n = 0 for
    anharmonic traps).  ``reference_fidelity`` tracks the overlap with the
    state the protocol is designed to follow (transport mode, displaced
    trap-frame state, ...).
    """

    fidelity: float
    populations: np.ndarray
    excitation_energy: float
    times: np.ndarray
    q_mean: np.ndarray
    p_mean: np.ndarray
    energy: np.ndarray
    invariant: np.ndarray | None
    reference_fidelity: np.ndarray
    norm_drift: float
    steps: int
    final_state: WaveFunction = field(repr=False)
    transport_populations: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, series: bool = True) -> dict:
        out = {
            "fidelity": float(self.fidelity),
            "populations": [float(v) for v in self.populations],
            "excitation_energy": float(self.excitation_energy),
            "norm_drift": float(self.norm_drift),
            "steps": int(self.steps),
        }
        if series:
            out["series"] = {
                "t": self.times.tolist(),
                "q_mean": self.q_mean.tolist(),
                "p_mean": self.p_mean.tolist(),
                "E": self.energy.tolist(),
                "I_mean": None if self.invariant is None else self.invariant.tolist(),
                "fidelity": self.reference_fidelity.tolist(),
            }
        return out

    def write_csv(self, path) -> None:
        inv = self.invariant if self.invariant is not None else [math.nan] * len(self.times)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "q_mean", "p_mean", "E", "I_mean", "fidelity"])
            for row in zip(self.times, self.q_mean, self.p_mean, self.energy, inv, self.reference_fidelity):
                w.writerow([repr(float(v)) for v in row])


def _reference(pot, psi0: WaveFunction, t: float, n: int) -> WaveFunction:
    traj = pot.traj
    if isinstance(pot, CompensatedTrap):
        frame = trap_frame_transform(psi0, traj, 0.0)
        return trap_frame_transform(frame, traj, t, inverse=True)
    if isinstance(pot, TransitionlessMomentum):
        return psi0.shifted(float(traj.q0(t) - traj.q0(0.0)))
    return mode_wavefunction(TransportMode(n, traj), t, psi0.grid, norm_tol=math.inf)


def _check(psi: WaveFunction, t: float, tol) -> float:
    if not np.all(np.isfinite(psi.amplitudes)):
        raise NumericalError(f"non-finite amplitudes at t={t}")
    drift = abs(psi.norm() - 1.0)
    if drift > tol.norm:
        raise NumericalError(f"norm drift {drift:.3e} at t={t} exceeds {tol.norm:.1e}; refine grid or time step")
    edge = psi.boundary_amplitude()
    if edge > tol.boundary:
        raise NumericalError(f"amplitude {edge:.3e} at the grid edge at t={t}; increase grid_padding")
    if psi.momentum_edge_fraction() > tol.boundary:
        raise NumericalError(f"momentum grid saturated at t={t}; increase grid_points")
    return drift


def propagate(psi0: WaveFunction, pot, t_f: float | None = None,
              numerics: NumericsConfig | None = None, n: int = 0,
              target: WaveFunction | None = None,
              record_populations: bool = False) -> SimulationResult:
    """Evolve ``psi0`` under ``pot`` from 0 to ``t_f`` (default: protocol end)."""
    numerics = numerics or NumericsConfig()
    traj = pot.traj
    params = traj.params
    tol = numerics.tolerances
    grid = psi0.grid
    x = grid.x
    t_f = traj.duration if t_f is None else t_f
    plan = _step_plan(t_f, traj.breakpoints, numerics.dt(params))
    n_steps = len(plan)
    sample_at = set(np.unique(np.round(np.linspace(0, n_steps, numerics.samples)).astype(int)).tolist())
    kinetic_energy = (params.hbar * grid.k) ** 2 / (2 * params.mass)
    kin_cache: dict[float, np.ndarray] = {}

    rec = {"t": [], "q": [], "p": [], "E": [], "I": [], "F": [], "pop": []}
    worst_drift = 0.0

    def observe(psi, t):
        nonlocal worst_drift
        worst_drift = max(worst_drift, _check(psi, t, tol))
        v_drift = float(traj.q0(t, 1)) if isinstance(pot, TransitionlessMomentum) else 0.0
        rec["t"].append(t)
        rec["q"].append(psi.expect_x())
        rec["p"].append(psi.expect_p(params.hbar))
        rec["E"].append(hamiltonian_expectation(psi, pot.potential(x, t), params, pot.kinetic, v_drift))
        if pot.harmonic:
            rec["I"].append(invariant_expectation(psi, traj, t))
        rec["F"].append(fidelity(psi, _reference(pot, psi0, t, n)))
        if record_populations and traj.classical is not None:
            rec["pop"].append(mode_populations(psi, traj, t, numerics.n_max))

    a = psi0.amplitudes.copy()
    observe(psi0, 0.0)
    for i, (t0, h) in enumerate(plan, start=1):
        half = np.exp(-0.5j * h * pot.potential(x, t0 + 0.5 * h) / params.hbar)
        if pot.kinetic:
            kin = kin_cache.get(h)
            if kin is None:
                kin = kin_cache[h] = np.exp(-1j * h * kinetic_energy / params.hbar)
        else:
            kin = 1.0
        shift = pot.drift(t0, t0 + h)
        factor = kin * np.exp(-1j * grid.k * shift) if shift else kin
        a = half * np.fft.ifft(factor * np.fft.fft(half * a))
        if i in sample_at:
            observe(WaveFunction(a, grid), t0 + h)

    final = WaveFunction(a, grid)
    eig = static_eigenstate(pot, grid, t_f, n)
    ground = eig if n == 0 else static_eigenstate(pot, grid, t_f, 0)
    if _harmonic_static(pot):
        ell = params.oscillator_length
        basis = hermite_functions(numerics.n_max, (x - _static_center(pot, t_f)) / ell) / math.sqrt(ell)
        pops = np.abs(basis @ a * grid.dx) ** 2
    else:
        pops = np.array([fidelity(final, ground) ** 2])
    e_static = hamiltonian_expectation(final, pot.static_potential(x, t_f), params)

    return SimulationResult(
        fidelity=fidelity(final, target if target is not None else eig),
        populations=pops,
        excitation_energy=e_static - ground.energy,
        times=np.array(rec["t"]),
        q_mean=np.array(rec["q"]),
        p_mean=np.array(rec["p"]),
        energy=np.array(rec["E"]),
        invariant=np.array(rec["I"]) if rec["I"] else None,
        reference_fidelity=np.array(rec["F"]),
        norm_drift=worst_drift,
        steps=n_steps,
        final_state=final,
        transport_populations=np.array(rec["pop"]) if rec["pop"] else None,
    )


def initial_state(pot, grid: Grid, n: int = 0) -> WaveFunction:
    """The state a protocol is designed to start from."""
    traj = pot.traj
    if pot.harmonic or isinstance(pot, (QuarticExpanded, GaussianBeamLongitudinal)):
        return mode_wavefunction(TransportMode(n, traj), 0.0, grid, norm_tol=math.inf)
    if getattr(pot, "U", None) is None:
        frame = WaveFunction(oscillator_eigenfunction(n, grid.x, traj.params), grid)
    else:
        if n != 0:
            raise ValueError("only the ground state is available for anharmonic traps")
        frame = ground_state(pot.profile, grid, traj.params)
    if isinstance(pot, CompensatedTrap):
        return trap_frame_transform(frame, traj, 0.0, inverse=True)
    return frame.shifted(float(traj.q0(0.0)))


def simulate(pot, numerics: NumericsConfig | None = None, n: int = 0,
             record_populations: bool = False) -> SimulationResult:
    """Build the grid and initial state for ``pot`` and propagate to t_f."""
    numerics = numerics or NumericsConfig()
    grid = grid_for(pot.traj, numerics, n)
    psi0 = initial_state(pot, grid, n)
    return propagate(psi0, pot, numerics=numerics, n=n, record_populations=record_populations)
