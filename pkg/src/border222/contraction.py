"""Mode contractions, flattenings, multilinear rank and image projections.

The mode-``i`` contraction of ``t`` sends a covector ``phi`` on mode ``i`` to
the matrix obtained by pairing ``phi`` with the mode-``i`` index; the two
remaining modes keep their original order. The flattening collects the
contractions of the dual standard basis as rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor import DenseTensor, as_tensor

__all__ = [
    "Flattening",
    "MultilinearRank",
    "mode_contract",
    "flatten",
    "unflatten",
    "singular_values",
    "multilinear_rank",
    "image_basis",
    "image_project",
    "contraction_norm_identity_check",
    "DEFAULT_RANK_TOL",
]

DEFAULT_RANK_TOL = 1e-9


def _check_mode(mode: int) -> int:
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    return mode


def _mode_first(data: np.ndarray, mode: int) -> np.ndarray:
    return np.moveaxis(data, mode - 1, 0)


def mode_contract(t, mode: int, phi) -> np.ndarray:
    """Matrix ``sum_s phi[s] * t[.., s, ..]`` over the mode-``mode`` index.

    For ``t = sum v1 ⊗ v2 ⊗ v3`` this equals ``sum phi(v_mode) * (outer product
    of the other two factors)``, independent of the decomposition chosen.
    """
    t = as_tensor(t)
    _check_mode(mode)
    phi = np.asarray(phi, dtype=np.float64)
    n = t.shape[mode - 1]
    if phi.shape != (n,):
        raise ValueError(f"covector for mode {mode} must have length {n}, got {phi.shape}")
    return np.tensordot(phi, _mode_first(t.data, mode), axes=(0, 0))


@dataclass(frozen=True)
class Flattening:
    """Matrix of the mode-``mode`` contraction over the dual standard basis.

    Row ``s`` is the contraction against ``e*_s`` flattened row-major over the
    remaining two modes; ``other_shape`` records their dimensions.
    """

    mode: int
    matrix: np.ndarray
    other_shape: tuple

    def row_matrix(self, s: int) -> np.ndarray:
        return self.matrix[s].reshape(self.other_shape)

    def unflatten(self) -> DenseTensor:
        return unflatten(self)


def flatten(t, mode: int) -> Flattening:
    t = as_tensor(t)
    _check_mode(mode)
    moved = _mode_first(t.data, mode)
    other = moved.shape[1:]
    return Flattening(mode, moved.reshape(moved.shape[0], -1).copy(), tuple(other))


def unflatten(f: Flattening) -> DenseTensor:
    moved = f.matrix.reshape((f.matrix.shape[0],) + tuple(f.other_shape))
    return DenseTensor(np.moveaxis(moved, 0, f.mode - 1))


def _two_row_singular_values(m: np.ndarray) -> np.ndarray:
    """Singular values of a 2×N matrix from its 2×2 Gram matrix.

    The Gram determinant is taken as the sum of squared 2×2 minors
    (Cauchy-Binet), so a rank-one input yields a tiny second value instead of
    the ``sqrt(eps)``-sized noise of ``g00*g11 - g01**2``.
    """
    r0, r1 = m[0], m[1]
    g00 = float(np.dot(r0, r0))
    g11 = float(np.dot(r1, r1))
    g01 = float(np.dot(r0, r1))
    minors = np.outer(r0, r1) - np.outer(r1, r0)
    det = 0.5 * float(np.sum(minors * minors))
    half_tr = 0.5 * (g00 + g11)
    disc = math.sqrt(max(0.25 * (g00 - g11) ** 2 + g01 * g01, 0.0))
    lam_max = half_tr + disc
    lam_min = det / lam_max if lam_max > 0.0 else 0.0
    return np.sqrt(np.array([lam_max, max(lam_min, 0.0)]))


def singular_values(matrix) -> np.ndarray:
    """Singular values in decreasing order (closed form for two rows)."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("expected a matrix")
    if m.shape[0] == 2 and m.shape[1] >= 2:
        return _two_row_singular_values(m)
    return np.linalg.svd(m, compute_uv=False)


@dataclass(frozen=True)
class MultilinearRank:
    r1: int
    r2: int
    r3: int
    tol: float

    def as_tuple(self) -> tuple:
        return (self.r1, self.r2, self.r3)

    def __iter__(self):
        return iter(self.as_tuple())


def _numerical_rank(sv: np.ndarray, tol_rel: float) -> int:
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol_rel * sv[0]))


def multilinear_rank(t, tol_rel: float = DEFAULT_RANK_TOL) -> MultilinearRank:
    """Flattening ranks with a relative singular-value threshold."""
    if not tol_rel > 0:
        raise ValueError("tol_rel must be positive")
    t = as_tensor(t)
    ranks = [_numerical_rank(singular_values(flatten(t, m).matrix), tol_rel) for m in (1, 2, 3)]
    return MultilinearRank(*ranks, tol=tol_rel)


def image_basis(f: Flattening, tol_rel: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis (as rows) of the span of the flattening's rows."""
    m = f.matrix
    if not np.any(m):
        return np.zeros((0, m.shape[1]))
    _, s, vt = np.linalg.svd(m, full_matrices=False)
    keep = s > tol_rel * s[0]
    return vt[keep]


def image_project(target, f: Flattening, tol_rel: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthogonal projection of a matrix onto the image of the contraction.

    ``target`` is a matrix over the two non-contracted modes (the codomain of
    the contraction); the result has the same shape.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.shape != tuple(f.other_shape):
        raise ValueError(
            f"target must have shape {tuple(f.other_shape)}, got {target.shape}"
        )
    basis = image_basis(f, tol_rel)
    vec = target.ravel()
    proj = basis.T @ (basis @ vec)
    return proj.reshape(target.shape)


def contraction_norm_identity_check(t, p: int = 2) -> float:
    """Largest over modes of ``| ||t||_p^p - sum_s ||row_s||_p^p |``."""
    if int(p) != p or p < 1:
        raise ValueError(f"p must be a positive integer, got {p!r}")
    t = as_tensor(t)
    total = float(np.sum(np.abs(t.data) ** p))
    worst = 0.0
    for mode in (1, 2, 3):
        f = flatten(t, mode)
        rows = sum(float(np.sum(np.abs(f.matrix[s]) ** p)) for s in range(f.matrix.shape[0]))
        worst = max(worst, abs(total - rows))
    return worst
