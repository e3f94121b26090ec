"""Rank, border rank and rank-two approximation of small real tensors."""

from .approx import (
    AlsTrace,
    BoundaryResult,
    DeficientCandidate,
    DegenerateSecondMode,
    ImprovementCase,
    ImprovementOutcome,
    NotDeficient,
    NotThreeGeneric,
    NumericalStall,
    TargetExpansion,
    als_rank2,
    boundary_distance,
    nearest_tangent_form,
    improve_candidate,
    improvement_chain,
    normalize_deficient,
    orthogonality_residuals,
    projection_condition_residual,
    random_rank2_search,
    strict_improve_lowrank,
    target_expansion,
)
from .classify import (
    ClassificationAmbiguous,
    ClassTag,
    PencilQuadratic,
    RankReport,
    classify_rank,
    delta_scaling_check,
    hyperdeterminant,
    normalized_delta,
    pencil_quadratic,
)
from .contraction import (
    Flattening,
    MultilinearRank,
    contraction_norm_identity_check,
    flatten,
    image_project,
    mode_contract,
    multilinear_rank,
    unflatten,
)
from .geometry import (
    DegeneratePencil,
    NotTangentClass,
    SpanSet,
    TangentForm,
    border_bound,
    border_distance,
    border_sequence,
    secant_tangent_span,
    segre_tangent_span,
    tangency_point,
    tangent_form_dense,
    uniqueness_witness,
)
from .tensor import (
    DenseTensor,
    Rank2Candidate,
    Shape,
    TensorFormatError,
    as_tensor,
    frobenius_inner,
    load_tensor,
    multilinear_action,
    p_norm,
    rank_one,
    sample_gaussian,
    w_tensor,
)

__version__ = "0.1.0"
