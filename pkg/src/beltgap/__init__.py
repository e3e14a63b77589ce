"""Band-structure solver for an axially moving string on a harmonically
modulated elastic foundation: dispersion branches, band-gap detection and
tuning rules, compound-wave mode shapes, and an independent time-domain
transmission check."""

__version__ = "0.1.0"

from .model import (
    BeltParams,
    BeltgapError,
    DegeneracyError,
    FrequencyPoint,
    NumericalError,
    OffSurfaceError,
    ParameterError,
    PhysicalParams,
    SupercriticalSpeedError,
    ValidationReport,
    nondimensionalize,
    validate,
)
from .dispersion import (
    ComplexWavenumber,
    CouplingMatrix,
    DispersionBranch,
    assemble_k_pencil,
    assemble_omega_pencil,
    det_dispersion,
    fold_to_bz,
    group_velocity_closed,
    group_velocity_implicit,
    group_velocity_numeric,
    min_decay_rates,
    principal_wavenumber,
    solve_k,
    solve_omega,
    sweep_branches,
)
from .bandgap import (
    BandGap,
    FrequencyClass,
    TuningResult,
    classify_frequency,
    detect_gaps,
    first_gap_closed_form,
    second_gap_two_term,
    sweep_parameter,
    tune_stiffness,
    tune_velocity,
)
from .modes import ModeShape, SpatialProfile, eigenvector_at, participation_ratio, reconstruct
from .timedomain import SimConfig, TransmissionRecord, run_transmission, transmission_spectrum

__all__ = [
    "BandGap",
    "BeltParams",
    "BeltgapError",
    "ComplexWavenumber",
    "CouplingMatrix",
    "DegeneracyError",
    "DispersionBranch",
    "FrequencyClass",
    "FrequencyPoint",
    "ModeShape",
    "NumericalError",
    "OffSurfaceError",
    "ParameterError",
    "PhysicalParams",
    "SimConfig",
    "SpatialProfile",
    "SupercriticalSpeedError",
    "TransmissionRecord",
    "TuningResult",
    "ValidationReport",
    "assemble_k_pencil",
    "assemble_omega_pencil",
    "classify_frequency",
    "det_dispersion",
    "detect_gaps",
    "eigenvector_at",
    "first_gap_closed_form",
    "fold_to_bz",
    "group_velocity_closed",
    "group_velocity_implicit",
    "group_velocity_numeric",
    "min_decay_rates",
    "nondimensionalize",
    "participation_ratio",
    "principal_wavenumber",
    "reconstruct",
    "run_transmission",
    "second_gap_two_term",
    "solve_k",
    "solve_omega",
    "sweep_branches",
    "sweep_parameter",
    "transmission_spectrum",
    "tune_stiffness",
    "tune_velocity",
    "validate",
]
