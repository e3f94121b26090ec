"""Rank-two approximation: ALS, strict-improvement steps and boundary distance.

For a real 2×2×2 tensor with negative hyperdeterminant no best rank-two
approximation exists. The routines here make that concrete. Given any rank-two
candidate, :func:`improve_candidate` returns a strictly better one, and
:func:`boundary_distance` computes the infimum, which is attained only on the
tangential variety.

Candidate errors are always evaluated with exactly rounded materialization
(see :class:`~border222.tensor.Rank2Candidate`). Near the boundary the two
terms cancel almost completely, and the float error would be noise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import least_squares

from .classify import ClassTag, classify_rank, hyperdeterminant
from .contraction import flatten, image_project
from .geometry import (
    TangentForm,
    border_sequence,
    escape_index,
    line_distance,
    tangent_form_dense,
    tangent_form_jacobian,
    tangent_space_matrix,
)
from .tensor import DenseTensor, Rank2Candidate, as_tensor, p_norm

__all__ = [
    "NotDeficient",
    "DegenerateSecondMode",
    "NumericalStall",
    "NotThreeGeneric",
    "ImprovementCase",
    "DeficientCandidate",
    "TargetExpansion",
    "ImprovementOutcome",
    "ChainResult",
    "AlsRecord",
    "AlsTrace",
    "BoundaryResult",
    "strict_improve_lowrank",
    "shared_mode",
    "normalize_deficient",
    "target_expansion",
    "projection_condition_residual",
    "orthogonality_residuals",
    "improve_candidate",
    "improvement_chain",
    "candidate_jacobian",
    "als_rank2",
    "random_candidate",
    "random_rank2_search",
    "boundary_distance",
    "nearest_tangent_form",
    "write_trace_csv",
    "TRACE_COLUMNS",
    "DEFICIENCY_TOL",
]

DEFICIENCY_TOL = 1e-8
RESTART_FITS, RESTART_SEED = 20, 7919
TRACE_COLUMNS = ("iteration", "error", "factor_norm_max", "delta_candidate", "proj_residual")


class NotDeficient(ValueError):
    """No mode in which the two candidate terms share a direction."""


class DegenerateSecondMode(ValueError):
    """The non-shared factors are dependent; the candidate has rank at most one."""


class NotThreeGeneric(ValueError):
    """The target does not have a negative hyperdeterminant."""


class NumericalStall(RuntimeError):
    """No representable candidate improves the error by a meaningful amount.

    Attributes
    ----------
    error : float
        Error of the candidate that could not be improved.
    best_decrease : float
        Largest decrease found (zero or negative when nothing helped).
    """

    def __init__(self, message, error=float("nan"), best_decrease=0.0):
        super().__init__(message)
        self.error = error
        self.best_decrease = best_decrease


class ImprovementCase(str, Enum):
    LOW_RANK_FILL = "LowRankFill"
    EPS1 = "Eps1"
    EPS2 = "Eps2"
    EPS3 = "Eps3"
    GAUSS_NEWTON = "GaussNewton"
    TANGENT_ESCAPE = "TangentEscape"
    TANGENT_RESTART = "TangentRestart"

    def __str__(self):
        return self.value


# --------------------------------------------------------------------------
# low-rank fill


def _rank_one_factors(t: DenseTensor) -> tuple:
    """Factors of a tensor known to have rank at most one."""
    data = t.data
    if not np.any(data):
        return tuple(np.zeros(n) for n in data.shape)
    vecs = []
    for mode in (1, 2, 3):
        u, _, _ = np.linalg.svd(flatten(t, mode).matrix, full_matrices=False)
        vecs.append(u[:, 0])
    lam = float(np.einsum("ijk,i,j,k->", data, *vecs))
    return (lam * vecs[0], vecs[1], vecs[2])


def strict_improve_lowrank(tau, upsilon, r: int) -> DenseTensor:
    """Fill the largest differing coordinate of ``upsilon`` with ``tau``'s value.

    Adding a single basis tensor raises the rank by at most one, so when
    ``rank(upsilon) < r`` the result still has rank at most ``r``, and its
    error drops by the square of the filled difference.

    Raises
    ------
    ValueError
        If ``tau == upsilon``, or (for 2×2×2 inputs) ``rank(upsilon) >= r``.
    """
    tau, upsilon = as_tensor(tau), as_tensor(upsilon)
    if tau.data.shape != upsilon.data.shape:
        raise ValueError("tau and upsilon have different shapes")
    if upsilon.data.shape == (2, 2, 2):
        rank = classify_rank(upsilon).rank
        if rank >= r:
            raise ValueError(f"upsilon has rank {rank}, need rank < {r}")
    diff = tau.data - upsilon.data
    idx = np.unravel_index(int(np.argmax(np.abs(diff))), diff.shape)
    if diff[idx] == 0.0:
        raise ValueError("tau equals upsilon; no coordinate to fill")
    out = upsilon.data.copy()
    out[idx] = tau.data[idx]
    return DenseTensor(out)


def _lowrank_fill_candidate(tau: DenseTensor, c: Rank2Candidate) -> Rank2Candidate:
    ups = c.dense()
    filled = strict_improve_lowrank(tau, ups, 2)
    diff = filled.data - ups.data
    idx = np.unravel_index(int(np.argmax(np.abs(diff))), diff.shape)
    first = _rank_one_factors(ups)
    eye = [np.eye(n)[i] for n, i in zip(tau.data.shape, idx)]
    second = (diff[idx] * eye[0], eye[1], eye[2])
    return Rank2Candidate(first, second)


# --------------------------------------------------------------------------
# deficient candidates


def shared_mode(c: Rank2Candidate, tol: float = DEFICIENCY_TOL):
    """Modes (1-based) in which the two terms' factors are collinear."""
    return [m + 1 for m in range(3)
            if line_distance(c.first[m], c.second[m]) < tol]


def _perm_for(mode: int) -> tuple:
    """Axis order placing ``mode`` last while keeping the other two in order."""
    others = [m for m in range(3) if m != mode - 1]
    return (others[0], others[1], mode - 1)


@dataclass(frozen=True, eq=False)
class DeficientCandidate:
    """Rank-two candidate whose terms share their last-mode direction.

    In the working frame (modes reordered by ``perm`` so that the shared mode
    is last) the candidate equals

        e0 ⊗ (a*u1 + b*u2) ⊗ w + e1 ⊗ (c*u1 + d*u2) ⊗ w

    with ``u1 = second_mode[0]``, ``u2 = second_mode[1]``, ``w = shared`` a
    unit vector and ``complement`` the unit vector orthogonal to it.
    ``perm[m]`` is the original axis that became working axis ``m``.
    """

    a: float
    b: float
    c: float
    d: float
    second_mode: tuple
    shared: np.ndarray
    complement: np.ndarray
    perm: tuple = (0, 1, 2)

    def working_candidate(self) -> Rank2Candidate:
        u1, u2 = self.second_mode
        return Rank2Candidate((np.array([self.a, self.c]), u1, self.shared),
                              (np.array([self.b, self.d]), u2, self.shared))

    def dense(self) -> DenseTensor:
        """Dense form in the original mode order."""
        w = self.working_candidate().dense()
        return DenseTensor(np.transpose(w.data, np.argsort(self.perm)))

    def u_ab(self) -> np.ndarray:
        return self.a * self.second_mode[0] + self.b * self.second_mode[1]

    def u_cd(self) -> np.ndarray:
        return self.c * self.second_mode[0] + self.d * self.second_mode[1]

    def with_coefficients(self, a, b, c, d) -> "DeficientCandidate":
        return DeficientCandidate(a, b, c, d, self.second_mode, self.shared,
                                  self.complement, self.perm)


def normalize_deficient(c: Rank2Candidate, tol: float = DEFICIENCY_TOL) -> DeficientCandidate:
    """Rewrite a deficient 2×2×2 candidate in the shared-last-mode normal form.

    Raises
    ------
    NotDeficient
        If no mode, or more than one mode, has collinear factors (two shared
        modes mean the dense form has rank at most one).
    DegenerateSecondMode
        If the working-frame second-mode factors are dependent.
    """
    if tuple(c.shape) != (2, 2, 2):
        raise ValueError("normal form is defined for 2x2x2 candidates")
    if not all(np.any(v) for v in c.first + c.second):
        raise DegenerateSecondMode("a candidate term is zero")
    modes = shared_mode(c, tol)
    if len(modes) != 1:
        raise NotDeficient(
            f"expected exactly one mode with collinear factors, found {modes}"
        )
    perm = _perm_for(modes[0])
    f = [c.first[p] for p in perm]
    s = [c.second[p] for p in perm]
    w_norm = np.linalg.norm(f[2])
    if w_norm == 0.0 or not np.any(s[2]):
        raise DegenerateSecondMode("a candidate term is zero")
    shared = f[2] / w_norm
    k = float(np.dot(s[2], shared))
    n1, n2 = np.linalg.norm(f[1]), np.linalg.norm(s[1])
    if n1 == 0.0 or n2 == 0.0:
        raise DegenerateSecondMode("a candidate term is zero")
    u1, u2 = f[1] / n1, s[1] / n2
    if line_distance(u1, u2) < tol:
        raise DegenerateSecondMode("second-mode factors are dependent")
    x1 = w_norm * n1 * f[0]
    x2 = k * n2 * s[0]
    complement = np.array([-shared[1], shared[0]])
    return DeficientCandidate(float(x1[0]), float(x2[0]), float(x1[1]), float(x2[1]),
                              (u1, u2), shared, complement, perm)


@dataclass(frozen=True)
class TargetExpansion:
    """Coordinates of a target in the frame of a deficient candidate.

    ``r, s`` (resp. ``p, q``) are the coefficients on ``u1, u2`` of the first
    (resp. second) working-mode slice along the complement direction.
    ``abcd`` are the target's own coefficients along the shared direction;
    ``abcd_mismatch`` is their largest deviation from the candidate's, which
    vanishes exactly when the candidate satisfies the projection condition.
    """

    r: float
    s: float
    p: float
    q: float
    abcd: tuple
    abcd_mismatch: float
    reconstruction_residual: float


def _working_target(tau, d: DeficientCandidate) -> np.ndarray:
    tau = as_tensor(tau)
    if tau.data.shape != (2, 2, 2):
        raise ValueError("target must be 2x2x2")
    return np.transpose(tau.data, d.perm)


def target_expansion(tau, d: DeficientCandidate) -> TargetExpansion:
    tp = _working_target(tau, d)
    x2 = np.column_stack(d.second_mode)
    x3 = np.column_stack([d.shared, d.complement])
    if abs(np.linalg.det(x2)) < 1e-14:
        raise DegenerateSecondMode("second-mode basis is singular")
    coeffs = [np.linalg.solve(x2, tp[i] @ x3) for i in (0, 1)]
    (a, r), (b, s) = coeffs[0]
    (c, p), (dd, q) = coeffs[1]
    recon = np.stack([x2 @ coeffs[i] @ x3.T for i in (0, 1)])
    resid = float(np.linalg.norm(recon - tp))
    mismatch = max(abs(a - d.a), abs(b - d.b), abs(c - d.c), abs(dd - d.d))
    return TargetExpansion(float(r), float(s), float(p), float(q),
                           (float(a), float(b), float(c), float(dd)),
                           float(mismatch), resid)


def orthogonality_residuals(te: TargetExpansion, d: DeficientCandidate) -> tuple:
    """Inner products that all vanish when no first-order improvement exists.

    Returns ``(E1, E2, E3)``: ``<u_cd, v_rs>``, ``<u_ab, v_pq>`` and
    ``<u_ab, v_rs>``, where ``u_ab = a*u1 + b*u2`` and ``v_rs = r*u1 + s*u2``
    and so on.
    """
    u1, u2 = d.second_mode
    u_ab, u_cd = d.u_ab(), d.u_cd()
    v_rs = te.r * u1 + te.s * u2
    v_pq = te.p * u1 + te.q * u2
    return (float(np.dot(u_cd, v_rs)), float(np.dot(u_ab, v_pq)), float(np.dot(u_ab, v_rs)))


def projection_condition_residual(tau, c, mode: int) -> float:
    """Largest gap between the projected target slices and the candidate slices.

    For each dual basis covector ``e*_j`` of ``mode``, the target's contraction
    is projected onto the image of the candidate's contraction and compared with
    the candidate's own contraction. Any Frobenius-optimal candidate gives zero.
    """
    tau = as_tensor(tau)
    ups = c.dense() if isinstance(c, Rank2Candidate) else as_tensor(c)
    if tau.data.shape != ups.data.shape:
        raise ValueError("shape mismatch")
    ft, fu = flatten(tau, mode), flatten(ups, mode)
    worst = 0.0
    for j in range(ft.matrix.shape[0]):
        proj = image_project(ft.row_matrix(j), fu)
        worst = max(worst, float(np.linalg.norm(proj - fu.row_matrix(j))))
    return worst


# --------------------------------------------------------------------------
# improvement step


@dataclass(frozen=True)
class ImprovementOutcome:
    """Result of one strict-improvement step.

    ``predicted_decrease`` is the error decrease promised by the first-order
    model of the chosen case (``nan`` where no closed form applies);
    ``achieved`` is the exactly evaluated ``old_error - new_error``.
    """

    new_candidate: Rank2Candidate
    case: ImprovementCase
    epsilon: float
    predicted_decrease: float
    achieved: float
    old_error: float
    new_error: float
    border_index: float = float("nan")
    residuals: tuple = ()


def _unpermute(c: Rank2Candidate, perm) -> Rank2Candidate:
    inv = np.argsort(perm)
    return Rank2Candidate(tuple(c.first[i] for i in inv), tuple(c.second[i] for i in inv))


def _unpermute_form(f: TangentForm, perm) -> TangentForm:
    return f.permuted(tuple(np.argsort(perm)))


def _escape(tau, f: TangentForm, old_error: float, form_error: float):
    """Rank-two point of the border sequence of ``f`` beating ``old_error``.

    Starts from the index guaranteed by the border bound and doubles it while
    the exactly evaluated error fails to improve (float rounding of very large
    factors can spoil the guarantee).
    """
    gap = old_error - form_error
    if not gap > 0:
        return None
    n = escape_index(f, gap)
    for _ in range(8):
        cand = border_sequence(f, n)
        err = cand.error(tau)
        if err < old_error:
            return cand, err, n
        n *= 2
    return None


def _deficient_step(tau, c, old_error):
    """Fill the projection condition, then apply the best first-order case."""
    d = normalize_deficient(c)
    te = target_expansion(tau, d)
    d = d.with_coefficients(*te.abcd)
    res = orthogonality_residuals(te, d)
    u_ab, u_cd = d.u_ab(), d.u_cd()
    nab, ncd = float(np.dot(u_ab, u_ab)), float(np.dot(u_cd, u_cd))
    if nab == 0.0 or ncd == 0.0:
        return None
    # squared-error change for each case at its optimal epsilon
    options = [
        (ImprovementCase.EPS1, res[0] / ncd, -res[0] ** 2 / ncd),
        (ImprovementCase.EPS2, res[1] / nab, -res[1] ** 2 / nab),
        (ImprovementCase.EPS3, res[2] / (2.0 * nab), -res[2] ** 2 / (2.0 * nab)),
    ]
    case, eps, change = min(options, key=lambda o: o[2])
    if not change < 0:
        return None
    u1, u2 = d.second_mode
    # after the fill, the residual is exactly the complement-direction part
    fill_err = math.hypot(np.linalg.norm(te.r * u1 + te.s * u2),
                          np.linalg.norm(te.p * u1 + te.q * u2))
    predicted = old_error - math.sqrt(max(fill_err ** 2 + change, 0.0))

    e0, e1 = np.eye(2)
    x3, y3 = d.shared, d.complement
    if case is ImprovementCase.EPS3:
        work = Rank2Candidate((e0, u_ab, x3 + eps * (x3 + y3)), (e1, u_cd, x3))
        new = _unpermute(work, d.perm)
        new_err = new.error(tau)
        n = float("nan")
    else:
        if case is ImprovementCase.EPS1:
            form = TangentForm((e0, u_cd, x3), (e1, u_ab, eps * y3))
        else:
            form = TangentForm((e1, u_ab, x3), (e0, u_cd, eps * y3))
        form = _unpermute_form(form, d.perm)
        form_err = p_norm(as_tensor(tau) - tangent_form_dense(form), 2)
        esc = _escape(tau, form, old_error, form_err)
        if esc is None:
            return None
        new, new_err, n = esc
    if not new_err < old_error:
        return None
    return ImprovementOutcome(new, case, float(eps), float(predicted),
                              old_error - new_err, old_error, new_err,
                              float(n), tuple(res))


def candidate_jacobian(c: Rank2Candidate) -> np.ndarray:
    """Derivative of ``vec(c.dense())`` with respect to ``c.to_params()``."""
    cols = []
    for u, v, w in c.terms:
        cols.append(np.einsum("ai,j,k->ijka", np.eye(u.size), v, w).reshape(-1, u.size))
        cols.append(np.einsum("i,aj,k->ijka", u, np.eye(v.size), w).reshape(-1, v.size))
        cols.append(np.einsum("i,j,ak->ijka", u, v, np.eye(w.size)).reshape(-1, w.size))
    return np.concatenate(cols, axis=1)


def _gauss_newton_step(tau, c, old_error, max_halvings=60):
    r = c.residual(tau).coeffs
    jac = candidate_jacobian(c)
    mu = 1e-2 * old_error ** 2
    # augmented least squares: the normal matrix loses rank once factors blow up
    n = jac.shape[1]
    aug = np.vstack([jac, np.sqrt(mu) * np.eye(n)])
    step = np.linalg.lstsq(aug, np.concatenate([r, np.zeros(n)]), rcond=None)[0]
    p0 = c.to_params()
    predicted = old_error - float(np.linalg.norm(r - jac @ step))
    t = 1.0
    for _ in range(max_halvings + 1):
        cand = Rank2Candidate.from_params(p0 + t * step, c.shape)
        err = cand.error(tau)
        if err < old_error:
            return ImprovementOutcome(cand, ImprovementCase.GAUSS_NEWTON, t, predicted,
                                      old_error - err, old_error, err)
        t *= 0.5
    return None


def _lift(c: Rank2Candidate, which: int) -> TangentForm:
    """Tangent form at one term's factor directions, fitted to the candidate."""
    base = tuple(f / np.linalg.norm(f) for f in c.terms[which])
    basis = tangent_space_matrix(base)
    y = np.linalg.lstsq(basis, c.dense().coeffs, rcond=None)[0]
    cuts = np.cumsum([b.size for b in base])[:2]
    return TangentForm(base, tuple(np.split(y, cuts)))


def _tangent_escape_step(tau, c, old_error, max_halvings=60):
    """Damped step on the tangential variety, then back out along the border."""
    tau = as_tensor(tau)
    best = None
    for which in (0, 1):
        if not all(np.any(f) for f in c.terms[which]):
            continue
        form = _lift(c, which)
        r = tau.coeffs - tangent_form_dense(form).coeffs
        e0 = float(np.linalg.norm(r))
        jac = tangent_form_jacobian(form)
        u, s, vt = np.linalg.svd(jac, full_matrices=False)
        mu = 1e-6 * s[0] ** 2
        step = vt.T @ (s * (u.T @ r) / (s * s + mu))
        p0 = form.to_params()
        t, moved = 1.0, None
        for _ in range(max_halvings + 1):
            trial = TangentForm.from_params(p0 + t * step, tau.data.shape)
            e = p_norm(tau - tangent_form_dense(trial), 2)
            if e < e0:
                moved = (trial, e)
                break
            t *= 0.5
        if moved is None:
            moved = (form, e0)
        esc = _escape(tau, moved[0], old_error, moved[1])
        if esc is None:
            continue
        cand, err, n = esc
        if best is None or err < best.new_error:
            best = ImprovementOutcome(cand, ImprovementCase.TANGENT_ESCAPE, t,
                                      old_error - moved[1], old_error - err,
                                      old_error, err, float(n))
    return best


def _tangent_restart_step(tau, old_error, restarts=RESTART_FITS, seed=RESTART_SEED):
    """Escape from a multi-start tangent fit when local steps are exhausted.

    Local steps converge to a locally nearest tangent form, which need not be
    the globally nearest one; a fresh fit can find a closer form elsewhere.
    """
    res = nearest_tangent_form(tau, restarts=restarts, seed=seed)
    esc = _escape(tau, res.nearest, old_error, res.distance)
    if esc is None:
        return None
    cand, err, n = esc
    return ImprovementOutcome(cand, ImprovementCase.TANGENT_RESTART, float("nan"),
                              old_error - res.distance, old_error - err,
                              old_error, err, float(n))


def _require_three_generic(tau):
    report = classify_rank(tau)
    if report.class_tag is not ClassTag.THREE_GENERIC:
        raise NotThreeGeneric(
            f"target must have negative hyperdeterminant; got {report.class_tag.value} "
            f"(Δ = {report.delta:.3e})"
        )


def improve_candidate(tau, c: Rank2Candidate, check_target: bool = True) -> ImprovementOutcome:
    """Return a rank-two candidate strictly closer to ``tau`` than ``c``.

    Dispatch:

    * ``c`` of rank below two: fill one coordinate (``LowRankFill``).
    * ``c`` deficient (terms collinear in exactly one mode): satisfy the
      projection condition, then perturb along the violated orthogonality
      relation (``Eps1``/``Eps2`` leave the rank-two set onto a tangent form
      and return through its border sequence; ``Eps3`` stays rank two).
    * otherwise: the better of a damped Gauss-Newton step on the factors and
      a tangent-chart step followed by a border escape.

    When none of these improves by more than the stall threshold, a
    multi-start tangent fit is tried before giving up (``TangentRestart``):
    the local steps can settle next to a tangent form that is only locally
    nearest.

    Raises
    ------
    NotThreeGeneric
        If ``tau`` does not have negative hyperdeterminant.
    NumericalStall
        If the best decrease found is at most ``1e-14 * ||tau||``.
    """
    tau = as_tensor(tau)
    if check_target:
        _require_three_generic(tau)
    if tuple(c.shape) != (2, 2, 2):
        raise ValueError("candidate must be 2x2x2")
    old = c.error(tau)
    floor = 1e-14 * tau.norm()

    if classify_rank(c.dense()).rank < 2:
        new = _lowrank_fill_candidate(tau, c)
        err = new.error(tau)
        out = ImprovementOutcome(new, ImprovementCase.LOW_RANK_FILL, float("nan"),
                                 old - err, old - err, old, err)
    else:
        out = None
        if len(shared_mode(c)) == 1:
            try:
                out = _deficient_step(tau, c, old)
            except (NotDeficient, DegenerateSecondMode):
                out = None
        if out is None:
            found = [o for o in (_gauss_newton_step(tau, c, old),
                                 _tangent_escape_step(tau, c, old)) if o is not None]
            out = min(found, key=lambda o: o.new_error) if found else None

    if out is None or not out.achieved > floor:
        restart = _tangent_restart_step(tau, old)
        if restart is not None and restart.achieved > floor:
            return restart
        best = 0.0 if out is None else out.achieved
        raise NumericalStall(
            f"no candidate improves error {old:.6e} by more than {floor:.1e}",
            error=old, best_decrease=best,
        )
    return out


@dataclass(frozen=True)
class ChainResult:
    """Sequence of candidates from repeated improvement.

    ``errors[0]`` is the starting error. ``stalled`` records whether the chain
    ended early because floating point could not represent a better candidate.
    """

    candidates: tuple
    errors: tuple
    cases: tuple
    stalled: bool

    @property
    def final(self) -> Rank2Candidate:
        return self.candidates[-1]


def improvement_chain(tau, c: Rank2Candidate, steps: int = 50) -> ChainResult:
    """Apply :func:`improve_candidate` up to ``steps`` times.

    The first step must succeed (a stall there propagates). A later stall ends
    the chain and keeps the last candidate.
    """
    tau = as_tensor(tau)
    _require_three_generic(tau)
    cands, errors, cases = [c], [c.error(tau)], []
    stalled = False
    for k in range(steps):
        try:
            out = improve_candidate(tau, cands[-1], check_target=False)
        except NumericalStall:
            if k == 0:
                raise
            stalled = True
            break
        cands.append(out.new_candidate)
        errors.append(out.new_error)
        cases.append(out.case)
    return ChainResult(tuple(cands), tuple(errors), tuple(cases), stalled)


# --------------------------------------------------------------------------
# alternating least squares


@dataclass(frozen=True)
class AlsRecord:
    iteration: int
    error: float
    factor_norm_max: float
    delta_candidate: float
    proj_residual: float
    perturbed: bool = False

    def row(self) -> tuple:
        return (self.iteration, self.error, self.factor_norm_max,
                self.delta_candidate, self.proj_residual)


@dataclass
class AlsTrace:
    records: list = field(default_factory=list)
    converged: bool = False

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.records])

    @property
    def perturbed(self) -> bool:
        return any(r.perturbed for r in self.records)

    def rows(self) -> list:
        return [r.row() for r in self.records]


def _khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("jr,kr->jkr", a, b).reshape(-1, a.shape[1])


def _record(tau, c, it, err, perturbed, diagnostics):
    if not diagnostics:
        return AlsRecord(it, err, c.term_norm_max(), float("nan"), float("nan"), perturbed)
    dense = c.dense()
    delta = hyperdeterminant(dense) if dense.data.shape == (2, 2, 2) else float("nan")
    proj = max(projection_condition_residual(tau, c, m) for m in (1, 2, 3))
    return AlsRecord(it, err, c.term_norm_max(), delta, proj, perturbed)


def als_rank2(tau, init: Rank2Candidate, sweeps: int = 200, tol: float = 1e-12,
              seed: int = 0, diagnostics: bool = True):
    """Alternating least squares for a rank-two fit.

    Each sweep replaces, mode by mode, both factor vectors of that mode by the
    exact least-squares solution with the other modes fixed. An update that
    would raise the (exactly evaluated) error is rejected, so the error is
    non-increasing. A near-singular normal system is handled by adding a small
    random perturbation; the sweep is flagged in the trace.

    Parameters
    ----------
    tau : DenseTensor or array_like
    init : Rank2Candidate
    sweeps : int
        Maximum number of sweeps (at least one).
    tol : float
        Stop when the relative error change over a sweep is below ``tol`` or
        the error falls below ``tol * ||tau||``.
    seed : int
        Seed for the perturbation generator.
    diagnostics : bool
        Record the projection residual and hyperdeterminant per sweep (these
        cost more than the sweep itself).

    Returns
    -------
    (Rank2Candidate, AlsTrace)
    """
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    tau = as_tensor(tau)
    if tuple(init.shape) != tau.data.shape:
        raise ValueError("init shape does not match tau")
    rng = np.random.default_rng(seed)
    facs = [np.column_stack([init.first[m], init.second[m]]) for m in range(3)]
    unfold = [flatten(tau, m + 1).matrix for m in range(3)]
    exact = tau.data.shape == (2, 2, 2)

    def candidate(fs):
        return Rank2Candidate(tuple(f[:, 0] for f in fs), tuple(f[:, 1] for f in fs))

    def error_of(fs):
        if exact:
            return candidate(fs).error(tau)
        dense = np.einsum("ir,jr,kr->ijk", *fs)
        return float(np.linalg.norm(tau.data - dense))

    err = error_of(facs)
    trace = AlsTrace()
    trace.records.append(_record(tau, candidate(facs), 0, err, False, diagnostics))
    scale = max(tau.norm(), 1e-300)
    for it in range(1, sweeps + 1):
        perturbed = False
        prev, before = err, [f.copy() for f in facs]
        for m in range(3):
            o = [k for k in range(3) if k != m]
            kr = _khatri_rao(facs[o[0]], facs[o[1]])
            snapshot = [f.copy() for f in facs]
            if np.linalg.cond(kr.T @ kr) > 1e13:
                perturbed = True
                for k in o:
                    facs[k] = facs[k] + 1e-6 * np.linalg.norm(facs[k]) * rng.standard_normal(facs[k].shape)
                kr = _khatri_rao(facs[o[0]], facs[o[1]])
            facs[m] = np.linalg.lstsq(kr, unfold[m].T, rcond=None)[0].T
            trial_err = error_of(facs)
            if trial_err <= err:
                err = trial_err
            else:
                facs = snapshot
        # extrapolate along the sweep's displacement; kept only if it helps
        step = it ** (1.0 / 3.0)
        if step > 1.0:
            jump = [b + step * (f - b) for f, b in zip(facs, before)]
            jump_err = error_of(jump)
            if jump_err < err:
                facs, err = jump, jump_err
        trace.records.append(_record(tau, candidate(facs), it, err, perturbed, diagnostics))
        if err <= tol * scale or abs(prev - err) <= tol * max(prev, 1e-300):
            trace.converged = True
            break
    cur = candidate(facs)
    return cur, trace


# --------------------------------------------------------------------------
# random search and boundary distance


def random_candidate(shape=(2, 2, 2), seed: int = 0) -> Rank2Candidate:
    rng = np.random.default_rng(seed)
    n = 2 * sum(shape)
    return Rank2Candidate.from_params(rng.standard_normal(n), shape)


def random_rank2_search(tau, samples: int, seed: int = 0, chunk: int = 100_000,
                        scale: float | None = None):
    """Best of ``samples`` Gaussian rank-two candidates for a 2×2×2 target.

    Factor entries are drawn with standard deviation ``scale`` (default
    ``||tau||**(1/3)``, so candidate norms match the target's). Returns
    ``(error, candidate)``; the error is re-evaluated exactly.
    """
    tau = as_tensor(tau)
    if tau.data.shape != (2, 2, 2):
        raise ValueError("random search is implemented for 2x2x2 targets")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    sd = tau.norm() ** (1.0 / 3.0) if scale is None else scale
    target = tau.coeffs
    best_err, best_p = np.inf, None
    left = samples
    while left > 0:
        m = min(chunk, left)
        p = sd * rng.standard_normal((m, 12))
        dense = (np.einsum("ni,nj,nk->nijk", p[:, 0:2], p[:, 2:4], p[:, 4:6])
                 + np.einsum("ni,nj,nk->nijk", p[:, 6:8], p[:, 8:10], p[:, 10:12]))
        errs = np.linalg.norm(dense.reshape(m, 8) - target, axis=1)
        i = int(np.argmin(errs))
        if errs[i] < best_err:
            best_err, best_p = float(errs[i]), p[i].copy()
        left -= m
    cand = Rank2Candidate.from_params(best_p, (2, 2, 2))
    return cand.error(tau), cand


@dataclass(frozen=True)
class BoundaryResult:
    distance: float
    nearest: TangentForm
    nearest_dense: DenseTensor
    delta_nearest: float
    class_tag: ClassTag
    restarts: int


def _fit_tangent_form(tau: DenseTensor, p0: np.ndarray):
    target = tau.coeffs

    def fun(p):
        return tangent_form_dense(TangentForm.from_params(p)).coeffs - target

    def jac(p):
        return tangent_form_jacobian(TangentForm.from_params(p))

    res = least_squares(fun, p0, jac=jac, method="trf",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=5000)
    return res.x


def nearest_tangent_form(tau, restarts: int = 20, seed: int = 0) -> BoundaryResult:
    """Closest tangent form to any 2×2×2 tensor (multi-restart local fits).

    Minimizes ``||tau - dense(TangentForm)||`` over the twelve base and offset
    coordinates, restarting from ``restarts`` independent Gaussian starts
    (per-restart seeds are spawned from ``seed``) and keeping the best.
    """
    tau = as_tensor(tau)
    if tau.data.shape != (2, 2, 2):
        raise ValueError("target must be 2x2x2")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    sd = max(tau.norm(), 1e-300) ** (1.0 / 3.0)
    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        p0 = sd * np.random.default_rng(child).standard_normal(12)
        x = _fit_tangent_form(tau, p0)
        d = p_norm(tau - tangent_form_dense(TangentForm.from_params(x)), 2)
        if best is None or d < best[0]:
            best = (d, x)
    form = TangentForm.from_params(best[1])
    dense = tangent_form_dense(form)
    report = classify_rank(dense)
    return BoundaryResult(best[0], form, dense, hyperdeterminant(dense),
                          report.class_tag, restarts)


def boundary_distance(tau, restarts: int = 20, seed: int = 0) -> BoundaryResult:
    """Distance from a negative-hyperdeterminant tensor to the rank-two closure.

    For such tensors the infimum over rank-two candidates is attained only on
    the tangential variety, so it equals the distance to the nearest tangent
    form (see :func:`nearest_tangent_form`).

    Raises
    ------
    NotThreeGeneric
        If ``tau`` does not have negative hyperdeterminant.
    """
    tau = as_tensor(tau)
    _require_three_generic(tau)
    return nearest_tangent_form(tau, restarts, seed)


# --------------------------------------------------------------------------
# traces


def write_trace_csv(path, rows) -> None:
    """Write per-iteration diagnostics with a header row.

    ``rows`` holds tuples ordered as :data:`TRACE_COLUMNS` (or objects with a
    ``row()`` method).
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for r in rows:
            writer.writerow(r.row() if hasattr(r, "row") else tuple(r))
