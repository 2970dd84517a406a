from .config import DEFAULT_TOLERANCES, Tolerances, resolve_tolerances
from .errors import (
    ConfigError,
    ContractError,
    ConvergenceError,
    DimensionError,
    DomainError,
    EptrapError,
    GridTooCoarseError,
    IllConditionedError,
    NoEPFoundError,
    NotAnEPError,
    NumericalError,
    PoleError,
    StepSizeError,
    SweepError,
)
from .linalg import EigenPair, JordanSolve, Matrix, c_normalize, eig, hessenberg, jordan_chain, schur_qr
from .models import (
    BandModelSpec,
    ModelSpec,
    PTSpec,
    ThreeLevelSpec,
    ToyChainSpec,
    TwoLevelSpec,
    build,
    build_heff_band,
    closed_form_two_level,
    lamb_shift,
    pv_quadrature,
    pv_self_energy,
    residuum_matrix,
    self_consistent_poles,
    spec_from_dict,
    spin_swap_decoherence_rate,
    spin_swap_frequency,
)
from .nonlinear import NonlinearSolve, linear_projection, solve_nonlinear, source_term
from .observables import (
    ObservableSeries,
    ScatteringSeries,
    average_rate_vs_alpha,
    decay_rate,
    internal_wavefunction,
    order_parameter,
    phase_lapse_scan,
    phase_shift_excursion,
    rho_phase_rigidity,
    rigidity_series,
    s_matrix,
    scattering_series,
    time_delay,
    weights_from_coupling,
)
from .spectra import ModeSet, chirality_defect, lifetimes, phase_rigidity, solve_modes
from .sweeps import (
    Branch,
    CycleReport,
    EpCandidate,
    SweepGrid,
    detect_avoided_crossings,
    encircle_ep,
    locate_ep,
    sweep,
)

__all__ = [
    "DEFAULT_TOLERANCES",
    "Tolerances",
    "resolve_tolerances",
    "EptrapError",
    "ConfigError",
    "NumericalError",
    "DimensionError",
    "ConvergenceError",
    "IllConditionedError",
    "NotAnEPError",
    "NoEPFoundError",
    "DomainError",
    "PoleError",
    "GridTooCoarseError",
    "StepSizeError",
    "ContractError",
    "SweepError",
    "Matrix",
    "EigenPair",
    "JordanSolve",
    "hessenberg",
    "schur_qr",
    "eig",
    "c_normalize",
    "jordan_chain",
    "ModelSpec",
    "TwoLevelSpec",
    "ToyChainSpec",
    "BandModelSpec",
    "PTSpec",
    "ThreeLevelSpec",
    "spec_from_dict",
    "build",
    "build_heff_band",
    "pv_self_energy",
    "pv_quadrature",
    "residuum_matrix",
    "closed_form_two_level",
    "lamb_shift",
    "self_consistent_poles",
    "spin_swap_frequency",
    "spin_swap_decoherence_rate",
    "ModeSet",
    "solve_modes",
    "phase_rigidity",
    "chirality_defect",
    "lifetimes",
    "SweepGrid",
    "Branch",
    "EpCandidate",
    "CycleReport",
    "sweep",
    "detect_avoided_crossings",
    "locate_ep",
    "encircle_ep",
    "ObservableSeries",
    "ScatteringSeries",
    "s_matrix",
    "scattering_series",
    "time_delay",
    "phase_shift_excursion",
    "phase_lapse_scan",
    "internal_wavefunction",
    "rho_phase_rigidity",
    "rigidity_series",
    "weights_from_coupling",
    "decay_rate",
    "average_rate_vs_alpha",
    "order_parameter",
    "NonlinearSolve",
    "source_term",
    "linear_projection",
    "solve_nonlinear",
]
