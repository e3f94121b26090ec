"""Hyperdeterminant and rank / border-rank classification of real 2×2×2 tensors."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .contraction import DEFAULT_RANK_TOL, MultilinearRank, mode_contract, multilinear_rank
from .tensor import as_tensor, multilinear_action

__all__ = [
    "ClassTag",
    "RankReport",
    "PencilQuadratic",
    "ClassificationAmbiguous",
    "hyperdeterminant",
    "normalized_delta",
    "pencil_quadratic",
    "classify_rank",
    "delta_scaling_check",
    "DEFAULT_DELTA_TOL",
]

DEFAULT_DELTA_TOL = 1e-10


class ClassTag(str, Enum):
    ZERO = "Zero"
    RANK_ONE = "RankOne"
    RANK_TWO_SHARED = "RankTwoShared"
    RANK_TWO_GENERIC = "RankTwoGeneric"
    THREE_TANGENT = "ThreeTangent"
    THREE_GENERIC = "ThreeGeneric"

    def __str__(self):
        return self.value


class ClassificationAmbiguous(ValueError):
    """The multilinear rank and the hyperdeterminant sign disagree."""


def _require_222(t):
    t = as_tensor(t)
    if t.data.shape != (2, 2, 2):
        raise ValueError(f"expected a 2x2x2 tensor, got shape {tuple(t.shape)}")
    return t


def hyperdeterminant(t) -> float:
    """Cayley's 2×2×2 hyperdeterminant, evaluated term by term."""
    t = _require_222(t)
    (a111, a112, a121, a122, a211, a212, a221, a222) = t.data.ravel().tolist()
    return (
        (a111 * a111 * a222 * a222 + a112 * a112 * a221 * a221
         + a121 * a121 * a212 * a212 + a122 * a122 * a211 * a211)
        - 2.0 * (a111 * a112 * a221 * a222 + a111 * a121 * a212 * a222
                 + a111 * a122 * a211 * a222)
        - 2.0 * (a112 * a121 * a212 * a221 + a112 * a122 * a221 * a211
                 + a121 * a122 * a212 * a211)
        + 4.0 * (a111 * a122 * a212 * a221 + a112 * a121 * a211 * a222)
    )


def normalized_delta(t) -> float:
    """``Δ(t) / ||t||^4``; zero for the zero tensor."""
    t = _require_222(t)
    n2 = float(np.dot(t.data.ravel(), t.data.ravel()))
    if n2 == 0.0:
        return 0.0
    return hyperdeterminant(t) / (n2 * n2)


@dataclass(frozen=True)
class PencilQuadratic:
    """``det(x*S0 + y*S1) = qa*x**2 + qb*x*y + qc*y**2`` for the two mode slices."""

    mode: int
    qa: float
    qb: float
    qc: float

    @property
    def discriminant(self) -> float:
        return self.qb * self.qb - 4.0 * self.qa * self.qc

    @property
    def coefficients(self) -> tuple:
        return (self.qa, self.qb, self.qc)


def pencil_quadratic(t, mode: int) -> PencilQuadratic:
    t = _require_222(t)
    s0 = mode_contract(t, mode, [1.0, 0.0])
    s1 = mode_contract(t, mode, [0.0, 1.0])
    qa = s0[0, 0] * s0[1, 1] - s0[0, 1] * s0[1, 0]
    qc = s1[0, 0] * s1[1, 1] - s1[0, 1] * s1[1, 0]
    qb = s0[0, 0] * s1[1, 1] + s1[0, 0] * s0[1, 1] - s0[0, 1] * s1[1, 0] - s1[0, 1] * s0[1, 0]
    return PencilQuadratic(mode, float(qa), float(qb), float(qc))


@dataclass(frozen=True)
class RankReport:
    delta: float
    mlrank: MultilinearRank
    rank: int
    border_rank: int
    class_tag: ClassTag
    delta_tol_used: float

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "mlrank": list(self.mlrank.as_tuple()),
            "rank": self.rank,
            "border_rank": self.border_rank,
            "class_tag": self.class_tag.value,
        }


def classify_rank(t, tol_rel: float = DEFAULT_DELTA_TOL,
                  rank_tol: float = DEFAULT_RANK_TOL) -> RankReport:
    """Real rank and border rank of a 2×2×2 tensor.

    Parameters
    ----------
    t : DenseTensor or array_like, shape (2, 2, 2)
    tol_rel : float
        ``Δ`` counts as zero when ``|Δ| <= tol_rel * ||t||^4``.
    rank_tol : float
        Relative singular-value threshold for the flattening ranks.

    Raises
    ------
    ClassificationAmbiguous
        If the multilinear rank is impossible for an exact tensor, or a tensor
        with a rank-one flattening has a hyperdeterminant beyond ``tol_rel``.
    """
    if not tol_rel > 0:
        raise ValueError("tol_rel must be positive")
    t = _require_222(t)
    delta = hyperdeterminant(t)
    ml = multilinear_rank(t, rank_tol)
    ranks = ml.as_tuple()
    n2 = float(np.dot(t.data.ravel(), t.data.ravel()))
    dhat = delta / (n2 * n2) if n2 > 0 else 0.0

    def report(rank, border, tag):
        return RankReport(delta, ml, rank, border, tag, tol_rel)

    if ranks == (0, 0, 0):
        return report(0, 0, ClassTag.ZERO)
    if ranks == (1, 1, 1):
        return report(1, 1, ClassTag.RANK_ONE)
    ones = ranks.count(1)
    if ones == 1 and 0 not in ranks:
        if abs(dhat) <= tol_rel:
            return report(2, 2, ClassTag.RANK_TWO_SHARED)
        raise ClassificationAmbiguous(
            f"multilinear rank {ranks} forces Δ = 0 but Δ/||t||^4 = {dhat:.3e} "
            f"exceeds tol_rel = {tol_rel:g}"
        )
    if ranks == (2, 2, 2):
        if dhat > tol_rel:
            return report(2, 2, ClassTag.RANK_TWO_GENERIC)
        if dhat < -tol_rel:
            return report(3, 3, ClassTag.THREE_GENERIC)
        return report(3, 2, ClassTag.THREE_TANGENT)
    raise ClassificationAmbiguous(
        f"multilinear rank {ranks} is not attainable by an exact tensor "
        f"(rank_tol = {rank_tol:g}, tol_rel = {tol_rel:g})"
    )


def delta_scaling_check(t, g1, g2, g3) -> float:
    """``|Δ(g·t) - det(g1)² det(g2)² det(g3)² Δ(t)|`` (absolute)."""
    t = _require_222(t)
    lhs = hyperdeterminant(multilinear_action(g1, g2, g3, t))
    factor = float(np.linalg.det(g1) * np.linalg.det(g2) * np.linalg.det(g3)) ** 2
    return abs(lhs - factor * hyperdeterminant(t))
