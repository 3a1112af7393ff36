"""Exact Gaussian-input information matrix for Wiener model identification."""

__version__ = "0.1.0"

from .design import ScanResult, f_factor, scan_sigma
from .errors import WienerFimError
from .fim import (
    FimResult,
    SchurReport,
    assemble_fim,
    compute_fim,
    fim_determinant,
    prepare,
    schur_consistency,
)
from .model import (
    ConstraintMaps,
    LinearParams,
    NormalizationConstraint,
    WienerModel,
    build_constraint_maps,
    check_identifiability,
    eval_model,
    lift_alpha,
    reduce_alpha,
)
from .moments import MomentContext, build_moment_context, gaussian_moment, output_stats
from .oracle import OracleReport, SimulationPlan, empirical_fim, finite_diff_score, simulate_states
from .realization import (
    GaussianInputSpec,
    SensitivityRealization,
    StateStatistics,
    build_canonical,
    build_sensitivity_realization,
    state_statistics,
)
