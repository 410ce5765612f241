"""Physical parameters, transport targets and numerical settings.

Every other module takes a :class:`PhysicalParams` so that formulas can be
written with explicit ``m``, ``omega0`` and ``hbar``.  The default is the
oscillator unit system (m = hbar = omega0 = 1); SI work goes through
:func:`oscillator_units`, which records the scale factors for converting
back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# (mass, length, time) exponents of the quantities handled by UnitScales
DIMENSIONS = {
    "mass": (1, 0, 0),
    "length": (0, 1, 0),
    "time": (0, 0, 1),
    "frequency": (0, 0, -1),
    "velocity": (0, 1, -1),
    "acceleration": (0, 1, -2),
    "energy": (1, 2, -2),
    "action": (1, 2, -1),
    "momentum": (1, 1, -1),
    "dimensionless": (0, 0, 0),
}


@dataclass(frozen=True)
class PhysicalParams:
    """Atom mass, trap angular frequency, reduced Planck constant, gravity."""

    mass: float = 1.0
    omega0: float = 1.0
    hbar: float = 1.0
    gravity: float = 0.0

    def __post_init__(self):
        for name in ("mass", "omega0", "hbar"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if not math.isfinite(self.gravity):
            raise ValueError("gravity must be finite")

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega0

    @property
    def oscillator_length(self) -> float:
        """sqrt(hbar / m omega0)."""
        return math.sqrt(self.hbar / (self.mass * self.omega0))

    @property
    def ground_width(self) -> float:
        """Position spread of the ground state, sqrt(hbar / 2 m omega0)."""
        return math.sqrt(self.hbar / (2 * self.mass * self.omega0))

    @property
    def quantum(self) -> float:
        return self.hbar * self.omega0

    @property
    def sag(self) -> float:
        """Equilibrium offset g / omega0**2 of the atom below the trap centre."""
        return self.gravity / self.omega0**2

    def level(self, n: int) -> float:
        return (n + 0.5) * self.hbar * self.omega0


@dataclass(frozen=True)
class UnitScales:
    """Scale factors between a physical unit system and oscillator units."""

    mass: float = 1.0
    length: float = 1.0
    time: float = 1.0

    def factor(self, kind: str) -> float:
        try:
            em, el, et = DIMENSIONS[kind]
        except KeyError:
            raise ValueError(f"unknown quantity kind {kind!r}") from None
        return self.mass**em * self.length**el * self.time**et

    @property
    def energy(self) -> float:
        return self.factor("energy")

    def to_oscillator(self, value, kind: str):
        return value / self.factor(kind)

    def from_oscillator(self, value, kind: str):
        return value * self.factor(kind)


@dataclass(frozen=True)
class OscillatorUnits:
    params: PhysicalParams
    scales: UnitScales


def oscillator_units(params: PhysicalParams) -> OscillatorUnits:
    """Rescale ``params`` to m = hbar = omega0 = 1.

    The returned scales are: mass ``m``, length ``sqrt(hbar/m omega0)``,
    time ``1/omega0`` (so energy is ``hbar omega0``).
    """
    scales = UnitScales(
        mass=params.mass,
        length=params.oscillator_length,
        time=1.0 / params.omega0,
    )
    reduced = PhysicalParams(
        mass=1.0,
        omega0=1.0,
        hbar=1.0,
        gravity=scales.to_oscillator(params.gravity, "acceleration"),
    )
    return OscillatorUnits(reduced, scales)


@dataclass(frozen=True)
class TransportSpec:
    """Transport target: move by ``distance`` in time ``duration``.

    ``v_initial`` is the incoming velocity for stopping protocols,
    ``v_final`` the outgoing one for launching.
    """

    distance: float
    duration: float
    v_initial: float = 0.0
    v_final: float = 0.0

    def __post_init__(self):
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ValueError(f"duration must be positive, got {self.duration!r}")
        if not math.isfinite(self.distance):
            raise ValueError("distance must be finite")

    @property
    def a(self) -> float:
        """Dimensionless initial velocity v_initial t_f / d."""
        if self.distance == 0:
            raise ValueError("a = v t_f / d is undefined for d = 0")
        return self.v_initial * self.duration / self.distance

    def b(self, params: PhysicalParams) -> float:
        """Dimensionless duration omega0 t_f."""
        return params.omega0 * self.duration

    def to_oscillator(self, scales: UnitScales) -> "TransportSpec":
        return TransportSpec(
            distance=scales.to_oscillator(self.distance, "length"),
            duration=scales.to_oscillator(self.duration, "time"),
            v_initial=scales.to_oscillator(self.v_initial, "velocity"),
            v_final=scales.to_oscillator(self.v_final, "velocity"),
        )


@dataclass(frozen=True)
class Tolerances:
    norm: float = 1e-10
    fidelity: float = 1e-6
    quadrature: float = 1e-10
    boundary: float = 1e-8


@dataclass(frozen=True)
class NumericsConfig:
    """Grid and time-step settings for the wave-function solvers.

    ``grid_padding`` is measured in ground-state widths sigma0 and is added
    on both sides of the region swept by the trap and the classical path.
    ``time_step`` is absolute; ``None`` means 0.01 / omega0.
    """

    grid_points: int = 2048
    grid_padding: float = 10.0
    time_step: float | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    n_max: int = 16
    samples: int = 101

    def __post_init__(self):
        n = self.grid_points
        if n < 16 or n & (n - 1):
            raise ValueError(f"grid_points must be a power of two >= 16, got {n}")
        if self.grid_padding <= 0:
            raise ValueError("grid_padding must be positive")
        if self.time_step is not None and not self.time_step > 0:
            raise ValueError("time_step must be positive")
        if self.samples < 2:
            raise ValueError("samples must be at least 2")

    def dt(self, params: PhysicalParams) -> float:
        if self.time_step is None:
            return 0.01 / params.omega0
        return self.time_step
