"""Orthogonal Weingarten calculus and random orthogonal quantum channel numerics."""

from .asymptotics import (
    ConvexBody,
    ExperimentResult,
    bell_input,
    bell_state_vector,
    convergence_experiment,
    convex_body,
    distance_to_body,
    entropy_extremal,
    isotropic_entropy,
    isotropic_eta,
    mean_output_asymptotic,
    op_Q_tilde,
    op_R_tilde,
    op_S_tilde,
    op_T,
    op_T_tilde,
    project_to_body,
    von_neumann_entropy,
)
from .channels import (
    ChannelSpec,
    RngStream,
    apply_channel,
    apply_channel_power,
    make_channel,
    mc_conjugation_mean,
    mc_mean_output,
    mc_trace_moment,
    output_state,
    sample_haar_orthogonal,
)
from .errors import (
    BudgetError,
    EnumerationLimitError,
    InvalidStateError,
    OrthochanError,
    ValidationError,
)
from .moments import (
    MomentTerm,
    asymptotic_trace_moment,
    exact_mean_output,
    exact_trace_moment,
    f_beta,
    g_from_state,
    term_report,
    wiring_matrix,
)
from .pairings import (
    Pairing,
    PartialPairing,
    Permutation,
    bumps,
    connected_components,
    delta_gamma,
    dominant_pairs,
    enumerate_pairings,
    enumerate_partial_pairings,
    is_transverse,
    length,
    min_transverse_distance,
    mobius,
    pairing_from_partial,
)
from .weingarten import WeingartenTable, gram_matrix, integrate_monomial, wg_asymptotic, wg_exact

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "ChannelSpec",
    "ConvexBody",
    "EnumerationLimitError",
    "ExperimentResult",
    "InvalidStateError",
    "MomentTerm",
    "OrthochanError",
    "Pairing",
    "PartialPairing",
    "Permutation",
    "RngStream",
    "ValidationError",
    "WeingartenTable",
    "apply_channel",
    "apply_channel_power",
    "asymptotic_trace_moment",
    "bell_input",
    "bell_state_vector",
    "bumps",
    "connected_components",
    "convergence_experiment",
    "convex_body",
    "delta_gamma",
    "distance_to_body",
    "dominant_pairs",
    "entropy_extremal",
    "enumerate_pairings",
    "enumerate_partial_pairings",
    "exact_mean_output",
    "exact_trace_moment",
    "f_beta",
    "g_from_state",
    "gram_matrix",
    "integrate_monomial",
    "is_transverse",
    "isotropic_entropy",
    "isotropic_eta",
    "length",
    "make_channel",
    "mc_conjugation_mean",
    "mc_mean_output",
    "mc_trace_moment",
    "mean_output_asymptotic",
    "min_transverse_distance",
    "mobius",
    "op_Q_tilde",
    "op_R_tilde",
    "op_S_tilde",
    "op_T",
    "op_T_tilde",
    "output_state",
    "pairing_from_partial",
    "project_to_body",
    "sample_haar_orthogonal",
    "term_report",
    "von_neumann_entropy",
    "wg_asymptotic",
    "wg_exact",
    "wiring_matrix",
]
