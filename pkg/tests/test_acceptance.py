"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run under pytest (``pytest tests/test_acceptance.py -s``) or directly
(``python tests/test_acceptance.py``) for the summary lines alone.
"""

from __future__ import annotations

import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from border222.approx import (  # noqa: E402
    als_rank2,
    boundary_distance,
    improve_candidate,
    improvement_chain,
    projection_condition_residual,
    random_candidate,
    random_rank2_search,
)
from border222.classify import (  # noqa: E402
    ClassTag,
    classify_rank,
    delta_scaling_check,
    hyperdeterminant,
)
from border222.contraction import contraction_norm_identity_check  # noqa: E402
from border222.geometry import (  # noqa: E402
    border_bound,
    border_distance,
    tangency_point,
    uniqueness_witness,
    NotTangentClass,
)
from border222.tensor import DenseTensor, frobenius_inner, rank_one  # noqa: E402

from builders import (  # noqa: E402
    CLASS_BUILDERS,
    gaussian_three_generic,
    line_angle,
    make_tangent_form,
    pencil_split_example,
    random_gl,
    rotation_example,
    superdiagonal,
    w_form,
)


SUMMARY_LINES = []


def report(number, title, ok, detail, elapsed, limit=None):
    """Print the criterion's summary line and fail the test if it did not pass."""
    in_time = limit is None or elapsed < limit
    passed = bool(ok) and in_time
    budget = "" if limit is None else f" / {limit:g} s"
    line = (f"{'PASS' if passed else 'FAIL'} criterion {number:2d} {title}: {detail} "
            f"[{elapsed:.2f} s{budget}]")
    SUMMARY_LINES.append(line)
    print(line, flush=True)
    assert ok, detail
    assert in_time, f"took {elapsed:.2f} s, limit {limit} s"


def test_criterion_01_hyperdeterminant_exactness():
    cases = [(pencil_split_example(), 0.0), (superdiagonal(), 1.0), (rotation_example(), -4.0)]
    start = time.perf_counter()
    got = [hyperdeterminant(t) for t, _ in cases]
    per_call = (time.perf_counter() - start) / len(cases)
    ok = all(abs(g - want) <= 4 * np.finfo(float).eps * max(1.0, abs(want))
             for g, (_, want) in zip(got, cases))
    report(1, "hyperdeterminant exactness", ok and per_call < 1e-3,
           f"values {got}, {per_call * 1e6:.1f} us per call", per_call, 1e-3)


def test_criterion_02_classification_soundness():
    start = time.perf_counter()
    misses = {}
    for i, (tag, build) in enumerate(CLASS_BUILDERS.items()):
        rng = np.random.default_rng(2000 + i)
        misses[tag.value] = sum(classify_rank(build(rng)).class_tag is not tag for _ in range(1000))
    elapsed = time.perf_counter() - start
    report(2, "classification soundness", sum(misses.values()) == 0,
           f"misclassified per class {misses}", elapsed, 5.0)


def test_criterion_03_norm_identity():
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        shape = tuple(int(rng.integers(1, m + 1)) for m in (4, 3, 5))
        t = DenseTensor(rng.standard_normal(shape))
        for p in (1, 2, 3, 4):
            total = float(np.sum(np.abs(t.data) ** p))
            worst = max(worst, contraction_norm_identity_check(t, p) / total)
    elapsed = time.perf_counter() - start
    report(3, "contraction norm identity", worst < 1e-10,
           f"largest relative discrepancy {worst:.2e}", elapsed, 5.0)


def test_criterion_04_rank_one_inner_product():
    rng = np.random.default_rng(4)
    worst = 0.0
    start = time.perf_counter()
    for _ in range(1000):
        shape = tuple(int(rng.integers(1, 6)) for _ in range(3))
        x = [rng.standard_normal(n) for n in shape]
        y = [rng.standard_normal(n) for n in shape]
        lhs = frobenius_inner(rank_one(*x), rank_one(*y))
        rhs = np.prod([np.dot(a, b) for a, b in zip(x, y)])
        scale = np.prod([np.linalg.norm(a) * np.linalg.norm(b) for a, b in zip(x, y)])
        worst = max(worst, abs(lhs - rhs) / scale)
    elapsed = time.perf_counter() - start
    report(4, "rank-one inner product factorization", worst < 1e-12,
           f"largest relative error {worst:.2e}", elapsed)


def test_criterion_05_border_bound():
    start = time.perf_counter()
    w = w_form()
    worst_w = 0.0
    for k in range(7):
        n = 10**k
        exact = np.sqrt(3.0 / n**2 + 1.0 / n**4)
        worst_w = max(worst_w, abs(border_distance(w, n) - exact) / exact)
    rng = np.random.default_rng(5)
    ns = np.unique(np.round(np.geomspace(1, 10**6, 25)).astype(int))
    violations = 0
    for _ in range(100):
        f = make_tangent_form(rng)
        violations += sum(border_distance(f, int(n)) > border_bound(f, int(n)) for n in ns)
    elapsed = time.perf_counter() - start
    report(5, "border sequence bound", worst_w < 1e-12 and violations == 0,
           f"W relative error {worst_w:.1e}, bound violations {violations}", elapsed, 10.0)


@pytest.mark.slow
def test_criterion_06_non_existence_witness():
    rng = np.random.default_rng(6)
    start = time.perf_counter()
    first_fail = non_monotone = far = big_delta = small_growth = 0
    worst_gap = worst_delta = 0.0
    growths = []
    for i in range(200):
        tau = gaussian_three_generic(rng)
        _, c0 = random_rank2_search(tau, 10**4, seed=6000 + i)
        first = improve_candidate(tau, c0)
        first_fail += not (first.achieved > 0 and first.new_error < c0.error(tau))
        chain = improvement_chain(tau, c0, steps=50)
        errs = np.array(chain.errors)
        non_monotone += not np.all(np.diff(errs) < 0)
        gap = errs[-1] - boundary_distance(tau, seed=i).distance
        worst_gap = max(worst_gap, abs(gap))
        far += abs(gap) > 1e-3
        final = chain.final.dense()
        dhat = abs(hyperdeterminant(final)) / final.norm() ** 4
        worst_delta = max(worst_delta, dhat)
        big_delta += dhat >= 1e-6
        growth = chain.final.factor_norm_max() / c0.factor_norm_max()
        growths.append(growth)
        small_growth += growth < 10
    elapsed = time.perf_counter() - start
    ok = first_fail == non_monotone == far == big_delta == small_growth == 0
    report(6, "non-existence witness", ok,
           f"first-step failures {first_fail}, non-monotone {non_monotone}, "
           f"off boundary {far} (worst {worst_gap:.1e}), |delta| too large {big_delta} "
           f"(worst {worst_delta:.1e}), growth < 10x {small_growth} "
           f"(min {min(growths):.1f}x)", elapsed, 300.0)


@pytest.mark.slow
def test_criterion_07_nearest_point_is_tangent():
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    not_tangent = beaten = 0
    worst_margin = np.inf
    for i in range(50):
        tau = gaussian_three_generic(rng)
        res = boundary_distance(tau, seed=i)
        not_tangent += res.class_tag is not ClassTag.THREE_TANGENT
        err, _ = random_rank2_search(tau, 10**6, seed=7000 + i)
        margin = err - res.distance
        worst_margin = min(worst_margin, margin)
        beaten += margin < -1e-4
    elapsed = time.perf_counter() - start
    report(7, "nearest point lies on the tangential variety", not_tangent == 0 and beaten == 0,
           f"not tangent {not_tangent}, beaten by random search {beaten}, "
           f"smallest margin {worst_margin:.2e}", elapsed, 600.0)


def test_criterion_08_tangency_recovery():
    rng = np.random.default_rng(8)
    start = time.perf_counter()
    worst_angle = worst_resid = worst_pair = 0.0
    for _ in range(500):
        f = make_tangent_form(rng)
        t = f.dense()
        got = tangency_point(t)
        worst_angle = max(worst_angle, max(line_angle(a, b) for a, b in zip(got.base, f.base)))
        worst_resid = max(worst_resid, (got.dense() - t).norm() / t.norm())
        worst_pair = max(worst_pair, uniqueness_witness(t).max_distance)
    rejected = 0
    for _ in range(50):
        try:
            tangency_point(gaussian_three_generic(rng))
        except NotTangentClass:
            rejected += 1
    elapsed = time.perf_counter() - start
    ok = worst_pair < 1e-7 and worst_resid < 1e-8 and rejected == 50
    report(8, "tangency recovery and uniqueness", ok,
           f"pairwise mode distance {worst_pair:.1e}, base angle {worst_angle:.1e}, "
           f"round trip {worst_resid:.1e}, generic rejected {rejected}/50", elapsed, 30.0)


def test_criterion_09_projection_condition():
    rng = np.random.default_rng(9)
    start = time.perf_counter()
    shapes = [(3, 3, 3), (2, 3, 4)]
    converged = diverged = failures = attempts = 0
    worst = 0.0
    while converged < 100:
        shape = shapes[attempts % 2]
        tau = DenseTensor(rng.standard_normal(shape))
        cand, trace = als_rank2(tau, random_candidate(shape, seed=9000 + attempts),
                                sweeps=2000, diagnostics=False)
        attempts += 1
        if not trace.converged:
            diverged += 1
            continue
        converged += 1
        r = max(projection_condition_residual(tau, cand, m) for m in (1, 2, 3)) / tau.norm()
        worst = max(worst, r)
        failures += r >= 1e-6
    elapsed = time.perf_counter() - start
    report(9, "projection condition at ALS limits", failures == 0,
           f"{converged} converged runs, worst relative residual {worst:.1e}, "
           f"{diverged} runs without a limit skipped", elapsed)


def test_criterion_10_delta_transformation_law():
    rng = np.random.default_rng(10)
    start = time.perf_counter()
    worst = 0.0
    sign_flips = 0
    for _ in range(500):
        t = DenseTensor(rng.standard_normal((2, 2, 2)))
        g = [random_gl(rng) for _ in range(3)]
        ref = np.prod([np.linalg.det(x) for x in g]) ** 2 * hyperdeterminant(t)
        worst = max(worst, delta_scaling_check(t, *g) / abs(ref))
        moved = hyperdeterminant(np.einsum("ai,bj,ck,ijk->abc", *g, t.data))
        sign_flips += np.sign(moved) != np.sign(hyperdeterminant(t))
    elapsed = time.perf_counter() - start
    report(10, "hyperdeterminant transformation law", worst < 1e-8 and sign_flips == 0,
           f"largest relative error {worst:.1e}, sign changes {sign_flips}", elapsed)


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
