"""Inverse-engineered trap trajectories for fast, heating-free atom transport.

Trajectories are designed from the classical path of the transport modes
of a moving harmonic trap, checked against domain constraints and energy
bounds, and verified with a 1D split-step Schrodinger propagator.
"""

from .energy import BoundsReport, EnergyReport, aa_bound, bounds_report, energy_report
from .modes import TransportMode, hermite_functions, lr_phase, mode_populations, mode_wavefunction
from .params import NumericsConfig, PhysicalParams, Tolerances, TransportSpec, UnitScales, oscillator_units
from .perturbation import (
    BeamParams,
    PerturbationReport,
    f_bang_bang,
    f_inverse,
    f_inverse_discrete,
    f_numeric,
    perturbation_report,
)
from .tdse import (
    CompensatedTrap,
    GaussianBeamLongitudinal,
    MovingHarmonic,
    NumericalError,
    QuarticExpanded,
    SimulationResult,
    TransitionlessMomentum,
    fidelity,
    ground_state,
    propagate,
    simulate,
    trap_frame_transform,
)
from .trajectories import (
    BoundaryConditions,
    DomainReport,
    Trajectory,
    TrajectoryKind,
    bang_bang_trajectory,
    build_trajectory,
    compensated_trajectory,
    critical_duration,
    domain_scan,
    rest_to_rest,
    solve_polynomial_qc,
    stopping_region_map,
    stopping_trajectory,
)
from .wavefunction import Grid, GridMismatchError, WaveFunction, grid_for

__version__ = "0.1.0"
