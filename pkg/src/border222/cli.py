"""Command-line front end.

Every command writes a JSON report to stdout (``border-demo`` writes CSV).
Exit status: 0 success, 1 usage or domain error, 2 unreadable input,
3 numerical stall.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import approx, classify, geometry
from .tensor import (
    TensorFormatError,
    candidate_from_json,
    candidate_to_json,
    load_tensor,
    tensor_to_json,
)

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_NUMERICAL = 0, 1, 2, 3
DEFAULT_SEED = 20240607


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    seed: int = DEFAULT_SEED
    iters: int = 0
    tol: float = 1e-12
    output: str | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise UsageError("tolerances must be positive")


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, allow_nan=True)
    print(text)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")


def _read_candidate(path):
    try:
        with open(path) as fh:
            return candidate_from_json(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise TensorFormatError(f"{path}: {exc}") from exc


# --------------------------------------------------------------------------
# commands


def cmd_classify(args) -> int:
    t = load_tensor(args.file)
    report = classify.classify_rank(t, tol_rel=args.tol)
    _emit(report.to_dict())
    return EXIT_OK


def cmd_approximate(args) -> int:
    cfg = RunConfig("approximate", [args.file], args.seed, args.sweeps, args.tol, args.trace)
    tau = load_tensor(args.file)
    if cfg.iters < 1:
        raise UsageError("--sweeps must be >= 1")
    init = approx.random_candidate(tuple(tau.shape), seed=cfg.seed)
    cand, trace = approx.als_rank2(tau, init, sweeps=cfg.iters, tol=cfg.tol, seed=cfg.seed)
    if cfg.output:
        approx.write_trace_csv(cfg.output, trace.records)
    last = trace.records[-1]
    _emit({
        "error": last.error,
        "sweeps": last.iteration,
        "converged": trace.converged,
        "factor_norms": cand.factor_norms().tolist(),
        "term_norm_max": cand.term_norm_max(),
        "initial_term_norm_max": init.term_norm_max(),
        "delta_candidate": last.delta_candidate,
        "proj_residual": last.proj_residual,
        "perturbed": trace.perturbed,
        "candidate": candidate_to_json(cand),
    }, args.out)
    return EXIT_OK


def _trace_row(k, tau, c):
    proj = max(approx.projection_condition_residual(tau, c, m) for m in (1, 2, 3))
    return (k, c.error(tau), c.term_norm_max(), classify.hyperdeterminant(c.dense()), proj)


def cmd_improve(args) -> int:
    tau = load_tensor(args.file)
    cand = _read_candidate(args.candidate)
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    rows, steps = [], []
    current = cand
    rows.append(_trace_row(0, tau, current))
    for k in range(1, args.steps + 1):
        try:
            out = approx.improve_candidate(tau, current, check_target=(k == 1))
        except approx.NumericalStall:
            if k == 1:
                raise
            break
        current = out.new_candidate
        steps.append({
            "case": out.case.value,
            "epsilon": out.epsilon,
            "predicted_decrease": out.predicted_decrease,
            "achieved": out.achieved,
            "old_error": out.old_error,
            "new_error": out.new_error,
            "border_index": out.border_index,
        })
        rows.append(_trace_row(k, tau, current))
    if args.trace:
        approx.write_trace_csv(args.trace, rows)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(candidate_to_json(current), fh, indent=2)
    _emit({"steps": steps, "candidate": candidate_to_json(current)})
    return EXIT_OK


def border_demo_rows(n_max: int, points: int):
    """Rows ``(n, ||tau_n - beta||, bound)`` for the standard-basis tangent form."""
    e0, e1 = np.eye(2)
    form = geometry.TangentForm((e0, e0, e0), (e1, e1, e1))
    ns = np.unique(np.round(np.geomspace(1, n_max, points)).astype(np.int64))
    return [(int(n), geometry.border_distance(form, int(n)),
             geometry.border_bound(form, int(n))) for n in ns]


def cmd_border_demo(args) -> int:
    if args.n_max < 1 or args.points < 1:
        raise UsageError("--n-max and --points must be >= 1")
    rows = border_demo_rows(args.n_max, args.points)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(("n", "distance", "bound"))
        writer.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_distance(args) -> int:
    tau = load_tensor(args.file)
    if args.restarts < 1:
        raise UsageError("--restarts must be >= 1")
    res = approx.boundary_distance(tau, restarts=args.restarts, seed=args.seed)
    _emit({
        "distance": res.distance,
        "nearest": tensor_to_json(res.nearest_dense),
        "delta_nearest": res.delta_nearest,
        "class_tag": res.class_tag.value,
    })
    return EXIT_OK


def sample_fractions(count: int, seed: int, tol: float = classify.DEFAULT_DELTA_TOL) -> dict:
    """Sign statistics of the normalized hyperdeterminant of Gaussian tensors."""
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((count, 2, 2, 2))
    dhat = np.array([classify.normalized_delta(d) for d in data])
    neg = int(np.sum(dhat < -tol))
    pos = int(np.sum(dhat > tol))
    return {
        "count": count,
        "frac_delta_neg": neg / count,
        "frac_delta_pos": pos / count,
        "frac_near_zero": (count - neg - pos) / count,
    }


def cmd_sample(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    _emit(sample_fractions(args.count, args.seed))
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="border222", description="Rank and border rank of small real tensors.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("classify", help="rank, border rank and hyperdeterminant")
    c.add_argument("file")
    c.add_argument("--tol", type=float, default=classify.DEFAULT_DELTA_TOL)
    c.set_defaults(func=cmd_classify)

    a = sub.add_parser("approximate", help="rank-two ALS fit with a per-sweep trace")
    a.add_argument("file")
    a.add_argument("--sweeps", type=int, default=500)
    a.add_argument("--tol", type=float, default=1e-12)
    a.add_argument("--seed", type=int, default=DEFAULT_SEED)
    a.add_argument("--trace", help="CSV trace path")
    a.add_argument("--out", help="also write the JSON report here")
    a.set_defaults(func=cmd_approximate)

    i = sub.add_parser("improve", help="strictly improve a rank-two candidate")
    i.add_argument("file")
    i.add_argument("--candidate", required=True)
    i.add_argument("--steps", type=int, default=1)
    i.add_argument("--trace", help="CSV trace path")
    i.add_argument("--out", help="write the improved candidate JSON here")
    i.set_defaults(func=cmd_improve)

    b = sub.add_parser("border-demo", help="border sequence distance against its bound")
    b.add_argument("--n-max", type=int, default=10**6)
    b.add_argument("--points", type=int, default=61)
    b.add_argument("--out", help="CSV path (default stdout)")
    b.set_defaults(func=cmd_border_demo)

    d = sub.add_parser("distance", help="distance to the rank-two closure")
    d.add_argument("file")
    d.add_argument("--restarts", type=int, default=20)
    d.add_argument("--seed", type=int, default=DEFAULT_SEED)
    d.set_defaults(func=cmd_distance)

    s = sub.add_parser("sample", help="hyperdeterminant sign frequencies")
    s.add_argument("--count", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.set_defaults(func=cmd_sample)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (TensorFormatError, OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except approx.NumericalStall as exc:
        print(f"error: numerical stall: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, geometry.NotTangentClass) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
