"""Tangent forms, border sequences and tangent spaces of the Segre variety.

A tangent form with base ``(x1, x2, x3)`` and offset ``(y1, y2, y3)`` is the
tensor

    y1⊗x2⊗x3 + x1⊗y2⊗x3 + x1⊗x2⊗y3,

an element of the tangent space of the Segre variety at ``x1⊗x2⊗x3``. When
each pair ``{x_i, y_i}`` is independent it has rank three but is the limit of
the rank-two border sequence

    n (x1 + y1/n)⊗(x2 + y2/n)⊗(x3 + y3/n) - n x1⊗x2⊗x3.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .classify import ClassTag, classify_rank, pencil_quadratic
from .contraction import mode_contract
from .tensor import DenseTensor, Rank2Candidate, as_tensor, p_norm, rank_one

__all__ = [
    "TangentForm",
    "SpanSet",
    "NotTangentClass",
    "DegeneratePencil",
    "tangent_form_dense",
    "border_sequence",
    "border_bound_constants",
    "border_bound",
    "border_distance",
    "escape_index",
    "segre_tangent_span",
    "secant_tangent_span",
    "tangent_space_matrix",
    "tangent_form_jacobian",
    "tangency_point",
    "tangency_from_mode",
    "uniqueness_witness",
    "UniquenessReport",
    "line_distance",
]


class NotTangentClass(ValueError):
    """The tensor is not a rank-three element of the tangential variety."""


class DegeneratePencil(ValueError):
    """A mode's slice pencil has an identically vanishing determinant."""


def _as_triple(vs, name):
    out = tuple(np.asarray(v, dtype=np.float64) for v in vs)
    if len(out) != 3 or any(v.ndim != 1 for v in out):
        raise ValueError(f"{name} must be three 1-d vectors")
    return out


@dataclass(frozen=True, eq=False)
class TangentForm:
    base: tuple
    offset: tuple

    def __post_init__(self):
        base = _as_triple(self.base, "base")
        offset = _as_triple(self.offset, "offset")
        if tuple(v.size for v in base) != tuple(v.size for v in offset):
            raise ValueError("base and offset dimensions differ")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "offset", offset)

    @property
    def shape(self) -> tuple:
        return tuple(v.size for v in self.base)

    def dense(self) -> DenseTensor:
        return tangent_form_dense(self)

    def to_params(self) -> np.ndarray:
        return np.concatenate(self.base + self.offset)

    @classmethod
    def from_params(cls, params, shape=(2, 2, 2)) -> "TangentForm":
        params = np.asarray(params, dtype=np.float64)
        cuts = np.cumsum([shape[0], shape[1], shape[2], shape[0], shape[1]])
        parts = np.split(params, cuts)
        return cls(tuple(parts[:3]), tuple(parts[3:]))

    def permuted(self, perm) -> "TangentForm":
        """Reorder modes: new mode ``m`` is old mode ``perm[m]``."""
        return TangentForm(tuple(self.base[p] for p in perm),
                           tuple(self.offset[p] for p in perm))


def tangent_form_dense(f: TangentForm) -> DenseTensor:
    (x1, x2, x3), (y1, y2, y3) = f.base, f.offset
    return DenseTensor(
        np.einsum("i,j,k->ijk", y1, x2, x3)
        + np.einsum("i,j,k->ijk", x1, y2, x3)
        + np.einsum("i,j,k->ijk", x1, x2, y3)
    )


def border_sequence(f: TangentForm, n) -> Rank2Candidate:
    """Rank-two element ``tau_n`` converging to ``dense(f)`` at rate ``1/n``.

    The weight ``n`` is split as ``n**(1/3)`` over the three factors of each
    term, which keeps the factor norms balanced for large ``n``.
    """
    if not n >= 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    n = float(n)
    c = n ** (1.0 / 3.0)
    (x1, x2, x3), (y1, y2, y3) = f.base, f.offset
    first = (c * (x1 + y1 / n), c * (x2 + y2 / n), c * (x3 + y3 / n))
    second = (-c * x1, c * x2, c * x3)
    return Rank2Candidate(first, second)


def border_bound_constants(f: TangentForm) -> tuple:
    """``(C1, C2)`` with ``||tau_n - beta|| <= C1/n + C2/n**2``."""
    (x1, x2, x3), (y1, y2, y3) = f.base, f.offset
    c1 = np.linalg.norm(
        np.einsum("i,j,k->ijk", y1, y2, x3)
        + np.einsum("i,j,k->ijk", y1, x2, y3)
        + np.einsum("i,j,k->ijk", x1, y2, y3)
    )
    c2 = np.linalg.norm(y1) * np.linalg.norm(y2) * np.linalg.norm(y3)
    return float(c1), float(c2)


def border_distance(f: TangentForm, n) -> float:
    """``||tau_n - beta||`` for the exact (real-number) sequence, in rationals.

    The float factors returned by :func:`border_sequence` carry rounding of
    order ``n * eps``, which for large ``n`` exceeds the ``1/n**2`` slack in
    :func:`border_bound`. Expanding the difference symbolically,

        tau_n - beta = (y1⊗y2⊗x3 + y1⊗x2⊗y3 + x1⊗y2⊗y3) / n + y1⊗y2⊗y3 / n**2,

    avoids the cancellation entirely.
    """
    if not n >= 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    inv = 1 / (Fraction(int(n)) if float(n).is_integer() else Fraction(float(n)))
    (x1, x2, x3), (y1, y2, y3) = (
        tuple([Fraction(float(v)) for v in vec] for vec in part) for part in (f.base, f.offset))
    total = Fraction(0)
    for i, j, k in itertools.product(range(len(x1)), range(len(x2)), range(len(x3))):
        first = y1[i] * y2[j] * x3[k] + y1[i] * x2[j] * y3[k] + x1[i] * y2[j] * y3[k]
        d = inv * first + inv * inv * (y1[i] * y2[j] * y3[k])
        total += d * d
    return math.sqrt(total)


def border_bound(f: TangentForm, n) -> float:
    c1, c2 = border_bound_constants(f)
    return c1 / n + c2 / (float(n) ** 2)


# --------------------------------------------------------------------------
# tangent spaces


@dataclass(frozen=True, eq=False)
class SpanSet:
    """Finite spanning list of a linear subspace of tensors."""

    tensors: tuple
    tol: float = 1e-10

    @property
    def matrix(self) -> np.ndarray:
        """Spanning tensors as columns."""
        return np.stack([t.coeffs for t in self.tensors], axis=1)

    @property
    def dimension(self) -> int:
        sv = np.linalg.svd(self.matrix, compute_uv=False)
        if sv.size == 0 or sv[0] == 0.0:
            return 0
        return int(np.sum(sv > self.tol * sv[0]))

    def project(self, t) -> DenseTensor:
        t = as_tensor(t)
        a = self.matrix
        coef = np.linalg.lstsq(a, t.coeffs, rcond=None)[0]
        return DenseTensor((a @ coef).reshape(t.data.shape))

    def residual(self, t) -> float:
        """Distance from ``t`` to the span."""
        t = as_tensor(t)
        return p_norm(t - self.project(t), 2)


def _unit_vectors(n):
    return [np.eye(n)[s] for s in range(n)]


def _check_nonzero(point, what):
    for m, v in enumerate(point, start=1):
        if not np.any(v):
            raise ValueError(f"{what}: mode-{m} factor is zero")


def segre_tangent_span(point) -> SpanSet:
    """Spanning set of the Segre tangent space at ``x1⊗x2⊗x3``."""
    x1, x2, x3 = _as_triple(point, "point")
    _check_nonzero((x1, x2, x3), "segre_tangent_span")
    spans = [rank_one(e, x2, x3) for e in _unit_vectors(x1.size)]
    spans += [rank_one(x1, e, x3) for e in _unit_vectors(x2.size)]
    spans += [rank_one(x1, x2, e) for e in _unit_vectors(x3.size)]
    return SpanSet(tuple(spans))


def secant_tangent_span(c: Rank2Candidate) -> SpanSet:
    """Union of the Segre tangent spaces at the two terms of ``c``."""
    first = segre_tangent_span(c.first)
    second = segre_tangent_span(c.second)
    return SpanSet(first.tensors + second.tensors)


def tangent_space_matrix(base) -> np.ndarray:
    """Linear map (as a matrix) from offsets ``(y1, y2, y3)`` to the tangent form."""
    x1, x2, x3 = _as_triple(base, "base")
    cols = [np.einsum("ai,j,k->ijka", np.eye(x1.size), x2, x3).reshape(-1, x1.size),
            np.einsum("i,aj,k->ijka", x1, np.eye(x2.size), x3).reshape(-1, x2.size),
            np.einsum("i,j,ak->ijka", x1, x2, np.eye(x3.size)).reshape(-1, x3.size)]
    return np.concatenate(cols, axis=1)


def tangent_form_jacobian(f: TangentForm) -> np.ndarray:
    """Derivative of ``vec(dense(f))`` with respect to ``f.to_params()``."""
    (x1, x2, x3), (y1, y2, y3) = f.base, f.offset
    i1, i2, i3 = np.eye(x1.size), np.eye(x2.size), np.eye(x3.size)
    d_x1 = np.einsum("ai,j,k->ijka", i1, y2, x3) + np.einsum("ai,j,k->ijka", i1, x2, y3)
    d_x2 = np.einsum("i,aj,k->ijka", y1, i2, x3) + np.einsum("i,aj,k->ijka", x1, i2, y3)
    d_x3 = np.einsum("i,j,ak->ijka", y1, x2, i3) + np.einsum("i,j,ak->ijka", x1, y2, i3)
    jx = [d.reshape(-1, d.shape[-1]) for d in (d_x1, d_x2, d_x3)]
    return np.concatenate(jx + [tangent_space_matrix(f.base)], axis=1)


def line_distance(u, v) -> float:
    """Sine of the angle between the lines spanned by ``u`` and ``v``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 1.0
    u, v = u / nu, v / nv
    if u.size == 2:
        return abs(u[0] * v[1] - u[1] * v[0])
    perp = v - np.dot(u, v) * u
    return float(min(np.linalg.norm(perp), 1.0))


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    return v if v[np.argmax(np.abs(v))] >= 0 else -v


# --------------------------------------------------------------------------
# tangency point recovery


def _require_tangent(t, tol_rel):
    report = classify_rank(t, tol_rel=tol_rel)
    if report.class_tag is not ClassTag.THREE_TANGENT:
        raise NotTangentClass(
            f"expected a ThreeTangent tensor, got {report.class_tag.value} "
            f"(Δ = {report.delta:.3e}, mlrank = {report.mlrank.as_tuple()})"
        )
    return report


def _double_root(t, mode) -> np.ndarray:
    """Unit covector at the double root of the mode's slice pencil."""
    q = pencil_quadratic(t, mode)
    scale = float(np.dot(t.data.ravel(), t.data.ravel()))
    if max(abs(q.qa), abs(q.qc)) <= 1e-13 * scale:
        raise DegeneratePencil(
            f"mode-{mode} pencil determinant vanishes identically "
            f"(coefficients {q.coefficients})"
        )
    if abs(q.qa) >= abs(q.qc):
        phi = np.array([-q.qb, 2.0 * q.qa])
    else:
        phi = np.array([2.0 * q.qc, -q.qb])
    return phi / np.linalg.norm(phi)


def tangency_from_mode(t, mode: int, tol_rel: float = 1e-10) -> tuple:
    """Base point recovered entirely from one mode's slice pencil.

    The double-root covector ``phi`` annihilates the base vector of that mode,
    and the contraction against ``phi`` is the rank-one matrix spanned by the
    base vectors of the other two modes. Returns three unit vectors.
    """
    t = as_tensor(t)
    _require_tangent(t, tol_rel)
    phi = _double_root(t, mode)
    own = _canonical_sign(np.array([-phi[1], phi[0]]))
    m = mode_contract(t, mode, phi)
    u, _, vt = np.linalg.svd(m)
    others = [_canonical_sign(u[:, 0]), _canonical_sign(vt[0])]
    base = others[: mode - 1] + [own] + others[mode - 1:]
    return tuple(base)


def tangency_point(t, tol_rel: float = 1e-10) -> TangentForm:
    """Tangent form representing ``t`` with the (unique) tangency base point.

    Each base vector ``x_i`` is read off the double root of the mode-``i``
    pencil. Offsets are the minimum-norm least-squares solution against the
    tangent space at the recovered base: components orthogonal to each base
    vector are unique, and the rank-one component is split evenly.
    """
    t = as_tensor(t)
    _require_tangent(t, tol_rel)
    base = []
    for mode in (1, 2, 3):
        phi = _double_root(t, mode)
        base.append(_canonical_sign(np.array([-phi[1], phi[0]])))
    a = tangent_space_matrix(base)
    y = np.linalg.lstsq(a, t.coeffs, rcond=None)[0]
    offset = (y[0:2], y[2:4], y[4:6])
    return TangentForm(tuple(base), offset)


@dataclass(frozen=True)
class UniquenessReport:
    bases: dict
    distances: dict

    @property
    def max_distance(self) -> float:
        return max(self.distances.values())


def uniqueness_witness(t, tol_rel: float = 1e-10) -> UniquenessReport:
    """Recover the base point through each mode independently and compare.

    The distance between two recovered base points is the largest line
    distance over their three factors.
    """
    t = as_tensor(t)
    _require_tangent(t, tol_rel)
    bases = {m: tangency_from_mode(t, m, tol_rel) for m in (1, 2, 3)}
    distances = {}
    for a, b in itertools.combinations((1, 2, 3), 2):
        distances[(a, b)] = max(line_distance(u, v) for u, v in zip(bases[a], bases[b]))
    return UniquenessReport(bases, distances)


def escape_index(f: TangentForm, gap: float) -> int:
    """Smallest border index guaranteeing ``||tau_n - beta|| <= gap / 2``."""
    if not gap > 0:
        raise ValueError("gap must be positive")
    c1, c2 = border_bound_constants(f)
    return max(1, int(math.ceil(2.0 * (c1 + c2) / gap)))
