"""Dense order-3 tensors, rank-one construction, norms and the GL action.

All coordinates are taken in the standard bases of the three modes. A tensor
with shape ``(n1, n2, n3)`` stores entry ``a[i, j, k]`` at linear position
``(i * n2 + j) * n3 + k`` (zero-based, row-major), which is also the order
used by the JSON file format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "Shape",
    "DenseTensor",
    "Rank2Candidate",
    "TensorFormatError",
    "as_tensor",
    "rank_one",
    "add",
    "scale",
    "p_norm",
    "frobenius_inner",
    "multilinear_action",
    "sample_gaussian",
    "zeros",
    "basis_tensor",
    "w_tensor",
    "load_tensor",
    "dump_tensor",
    "tensor_from_json",
    "tensor_to_json",
    "candidate_from_json",
    "candidate_to_json",
]


class TensorFormatError(ValueError):
    """Raised when a tensor or candidate file cannot be parsed."""


class Shape(NamedTuple):
    n1: int
    n2: int
    n3: int

    @classmethod
    def of(cls, dims: Sequence[int]) -> "Shape":
        dims = tuple(int(d) for d in dims)
        if len(dims) != 3:
            raise ValueError(f"expected three dimensions, got {dims}")
        if any(d < 1 for d in dims):
            raise ValueError(f"dimensions must be positive, got {dims}")
        return cls(*dims)

    @property
    def size(self) -> int:
        return self.n1 * self.n2 * self.n3


@dataclass(frozen=True, eq=False)
class DenseTensor:
    """Immutable real tensor of order three.

    Parameters
    ----------
    data : array_like, shape (n1, n2, n3)
        Coefficient hypermatrix. A private read-only float64 copy is kept.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError(f"tensor data must be 3-dimensional, got ndim={arr.ndim}")
        Shape.of(arr.shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_coeffs(cls, shape: Sequence[int], coeffs: Sequence[float]) -> "DenseTensor":
        shape = Shape.of(shape)
        coeffs = np.asarray(coeffs, dtype=np.float64).ravel()
        if coeffs.size != shape.size:
            raise ValueError(
                f"coefficient count {coeffs.size} does not match shape {tuple(shape)}"
            )
        return cls(coeffs.reshape(shape))

    @property
    def shape(self) -> Shape:
        return Shape(*self.data.shape)

    @property
    def coeffs(self) -> np.ndarray:
        return self.data.ravel()

    def norm(self, p: int = 2) -> float:
        return p_norm(self, p)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __neg__(self):
        return scale(self, -1.0)

    def __mul__(self, c):
        return scale(self, c)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, DenseTensor):
            return NotImplemented
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.data.shape, self.data.tobytes()))

    def __repr__(self):
        return f"DenseTensor(shape={tuple(self.shape)}, coeffs={self.coeffs.tolist()})"


def as_tensor(t) -> DenseTensor:
    """Return ``t`` as a :class:`DenseTensor` (no copy if it already is one)."""
    if isinstance(t, DenseTensor):
        return t
    return DenseTensor(t)


def _vec(v, name="vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d array")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} entries must be finite")
    return arr


def rank_one(u, v, w) -> DenseTensor:
    """Simple tensor ``u ⊗ v ⊗ w`` with entries ``u[i] * v[j] * w[k]``."""
    u, v, w = _vec(u, "u"), _vec(v, "v"), _vec(w, "w")
    return DenseTensor(np.einsum("i,j,k->ijk", u, v, w))


def _check_same_shape(a: DenseTensor, b: DenseTensor) -> None:
    if a.data.shape != b.data.shape:
        raise ValueError(f"shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")


def add(a, b) -> DenseTensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape(a, b)
    return DenseTensor(a.data + b.data)


def scale(a, c: float) -> DenseTensor:
    return DenseTensor(float(c) * as_tensor(a).data)


def p_norm(t, p: int = 2) -> float:
    """Entrywise p-norm ``(sum |a_ijk|^p)^(1/p)`` for an integer ``p >= 1``."""
    if int(p) != p or p < 1:
        raise ValueError(f"p must be a positive integer, got {p!r}")
    x = np.abs(as_tensor(t).data.ravel())
    if p == 2:
        return float(np.linalg.norm(x))
    m = x.max()
    if m == 0.0:
        return 0.0
    # scaled to avoid overflow for large p
    return float(m * np.sum((x / m) ** p) ** (1.0 / p))


def frobenius_inner(a, b) -> float:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape(a, b)
    return float(np.dot(a.data.ravel(), b.data.ravel()))


def multilinear_action(g1, g2, g3, t) -> DenseTensor:
    """Apply ``g1 ⊗ g2 ⊗ g3`` to ``t``: each ``g_i`` acts on the mode-i fibers.

    On simple tensors this is ``rank_one(g1 @ u, g2 @ v, g3 @ w)``.
    """
    t = as_tensor(t)
    mats = [np.asarray(g, dtype=np.float64) for g in (g1, g2, g3)]
    for mode, (g, n) in enumerate(zip(mats, t.shape), start=1):
        if g.ndim != 2 or g.shape != (n, n):
            raise ValueError(f"mode-{mode} map must be {n}x{n}, got {g.shape}")
    return DenseTensor(np.einsum("ai,bj,ck,ijk->abc", *mats, t.data))


def sample_gaussian(shape: Sequence[int], seed: int) -> DenseTensor:
    """Tensor with i.i.d. standard normal entries, deterministic in ``seed``."""
    shape = Shape.of(shape)
    rng = np.random.default_rng(seed)
    return DenseTensor(rng.standard_normal(tuple(shape)))


def zeros(shape: Sequence[int] = (2, 2, 2)) -> DenseTensor:
    return DenseTensor(np.zeros(tuple(Shape.of(shape))))


def basis_tensor(shape: Sequence[int], index: Sequence[int]) -> DenseTensor:
    """Standard basis tensor ``e_i ⊗ e_j ⊗ e_k``."""
    data = np.zeros(tuple(Shape.of(shape)))
    data[tuple(index)] = 1.0
    return DenseTensor(data)


def w_tensor() -> DenseTensor:
    """``e1⊗e0⊗e0 + e0⊗e1⊗e0 + e0⊗e0⊗e1`` (entries a100 = a010 = a001 = 1)."""
    data = np.zeros((2, 2, 2))
    data[1, 0, 0] = data[0, 1, 0] = data[0, 0, 1] = 1.0
    return DenseTensor(data)


# --------------------------------------------------------------------------
# Rank-two candidates


def _exact_rank_sum(terms, shape) -> list:
    """Exact (rational) coefficients of ``sum_t u_t ⊗ v_t ⊗ w_t``."""
    n1, n2, n3 = shape
    frac_terms = [
        tuple([Fraction(float(x)) for x in f] for f in term) for term in terms
    ]
    out = []
    for i in range(n1):
        for j in range(n2):
            for k in range(n3):
                out.append(sum(u[i] * v[j] * w[k] for u, v, w in frac_terms))
    return out


@dataclass(frozen=True, eq=False)
class Rank2Candidate:
    """Two factor triples representing ``u1⊗v1⊗w1 + u2⊗v2⊗w2``.

    Materialization is exactly rounded: near the boundary of the rank-two set
    the two terms nearly cancel, and naive float sums would lose every digit
    of the difference.
    """

    first: tuple
    second: tuple

    def __post_init__(self):
        first = tuple(_vec(f, "factor").copy() for f in self.first)
        second = tuple(_vec(f, "factor").copy() for f in self.second)
        if len(first) != 3 or len(second) != 3:
            raise ValueError("each term needs exactly three factors")
        if tuple(f.size for f in first) != tuple(f.size for f in second):
            raise ValueError("the two terms have different factor lengths")
        for f in first + second:
            f.setflags(write=False)
        object.__setattr__(self, "first", first)
        object.__setattr__(self, "second", second)

    @property
    def shape(self) -> Shape:
        return Shape(*(f.size for f in self.first))

    @property
    def terms(self) -> tuple:
        return (self.first, self.second)

    def dense(self) -> DenseTensor:
        exact = _exact_rank_sum(self.terms, self.shape)
        return DenseTensor(np.array([float(x) for x in exact]).reshape(self.shape))

    def residual(self, tau) -> DenseTensor:
        """Correctly rounded ``tau - dense()``."""
        tau = as_tensor(tau)
        if tau.data.shape != tuple(self.shape):
            raise ValueError(f"shape mismatch: {tuple(tau.shape)} vs {tuple(self.shape)}")
        exact = _exact_rank_sum(self.terms, self.shape)
        diff = [Fraction(float(a)) - b for a, b in zip(tau.data.ravel(), exact)]
        return DenseTensor(np.array([float(x) for x in diff]).reshape(self.shape))

    def error(self, tau) -> float:
        """Frobenius distance ``||tau - dense()||``."""
        return p_norm(self.residual(tau), 2)

    def factor_norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(f) for f in self.first + self.second])

    def factor_norm_max(self) -> float:
        return float(self.factor_norms().max())

    def term_norm_max(self) -> float:
        """Largest term norm ``||u||*||v||*||w||``; independent of factor scaling."""
        return float(max(np.prod([np.linalg.norm(f) for f in term]) for term in self.terms))

    def to_params(self) -> np.ndarray:
        return np.concatenate(self.first + self.second)

    @classmethod
    def from_params(cls, params, shape: Sequence[int]) -> "Rank2Candidate":
        shape = Shape.of(shape)
        params = np.asarray(params, dtype=np.float64)
        cuts = np.cumsum([shape.n1, shape.n2, shape.n3, shape.n1, shape.n2])
        parts = np.split(params, cuts)
        return cls(tuple(parts[:3]), tuple(parts[3:]))

    @classmethod
    def from_rank_one(cls, u, v, w) -> "Rank2Candidate":
        u, v, w = _vec(u), _vec(v), _vec(w)
        return cls((u, v, w), (np.zeros_like(u), np.zeros_like(v), np.zeros_like(w)))

    def __repr__(self):
        f = [x.tolist() for x in self.first]
        s = [x.tolist() for x in self.second]
        return f"Rank2Candidate(first={f}, second={s})"


# --------------------------------------------------------------------------
# JSON interchange


def tensor_to_json(t) -> dict:
    t = as_tensor(t)
    return {"shape": list(t.shape), "data": t.coeffs.tolist()}


def tensor_from_json(obj) -> DenseTensor:
    try:
        shape = obj["shape"]
        data = obj["data"]
    except (KeyError, TypeError) as exc:
        raise TensorFormatError("tensor JSON needs 'shape' and 'data' fields") from exc
    if not isinstance(shape, list) or not isinstance(data, list):
        raise TensorFormatError("'shape' and 'data' must be arrays")
    try:
        dims = Shape.of(shape)
        values = np.array(data, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise TensorFormatError(str(exc)) from exc
    if values.ndim != 1 or values.size != dims.size:
        raise TensorFormatError(
            f"data length {values.size} does not match shape {list(dims)} "
            f"(expected {dims.size})"
        )
    if not np.all(np.isfinite(values)):
        raise TensorFormatError("tensor entries must be finite")
    return DenseTensor(values.reshape(dims))


def load_tensor(path) -> DenseTensor:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise TensorFormatError(f"{path}: {exc}") from exc
    return tensor_from_json(obj)


def dump_tensor(t, path) -> None:
    with open(path, "w") as fh:
        json.dump(tensor_to_json(t), fh)
        fh.write("\n")


def candidate_to_json(c: Rank2Candidate) -> dict:
    return {
        "shape": list(c.shape),
        "first": [f.tolist() for f in c.first],
        "second": [f.tolist() for f in c.second],
    }


def candidate_from_json(obj) -> Rank2Candidate:
    try:
        first, second = obj["first"], obj["second"]
        cand = Rank2Candidate(tuple(first), tuple(second))
    except (KeyError, TypeError, ValueError) as exc:
        raise TensorFormatError(f"bad candidate JSON: {exc}") from exc
    if "shape" in obj and list(obj["shape"]) != list(cand.shape):
        raise TensorFormatError(
            f"candidate shape {obj['shape']} does not match factor lengths {list(cand.shape)}"
        )
    return cand
