"""Command-line entry point: ``lloydspp <command> [flags]``.

Every command writes CSV data plus a ``<out>.manifest.json`` that echoes the
full configuration. Exit codes: 0 success, 1 runtime failure, 2 usage or
validation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .breakpoints import (DEFAULT_EPS, AlphaInterval, BreakpointSet, breakpoint_histogram,
                          count_intervals_vs_n, enumerate_execution_tree)
from .core import hamming_distance, lp_cost
from .datagen import (DatasetFormatError, DistributionConfig, draw_sample, load_labeled_csv,
                      read_instance, seed_vector)
from .lloyds import LloydsConfig, lloyds_iterate
from .parallel import ordered_map
from .seeding import seed
from .tuner import TunerConfig, split_sample, sweep_surface, train_test_report


class UsageError(Exception):
    """Bad flag values; reported with exit code 2."""


# -- flag parsing ----------------------------------------------------------------

def parse_range(text: str) -> AlphaInterval:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"expected LO:HI, got {text!r}") from None
    return AlphaInterval(lo, hi, True)


def parse_grid(text: str) -> tuple:
    """``a,b,c`` lists values; ``LO:HI:POINTS`` spaces POINTS values evenly."""
    try:
        if ":" in text:
            lo, hi, pts = text.split(":")
            return tuple(float(v) for v in np.linspace(float(lo), float(hi), int(pts)))
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"bad grid {text!r}") from None


def parse_int_grid(text: str) -> tuple:
    """``a,b,c`` or ``LO:HI:STEP`` (inclusive)."""
    try:
        if ":" in text:
            lo, hi, step = (int(v) for v in text.split(":"))
            return tuple(range(lo, hi + 1, step))
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"bad integer grid {text!r}") from None


def _add_distribution(p):
    p.add_argument("--dist", choices=["gaussian-grid", "label-subset"], default="gaussian-grid")
    p.add_argument("--dataset", help="labeled CSV (f0..f{d-1},label) for label-subset")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--N", type=int, default=120, help="points per cluster")
    p.add_argument("--m", type=int, default=100, help="number of sampled instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)


def _add_lloyds(p, beta=True):
    if beta:
        p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--T", type=int, default=3)
    p.add_argument("--center-rule", choices=["medoid", "mean"], default=None,
                   help="default: mean when beta is 2, medoid otherwise")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lloydspp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="seed + Lloyd's on one instance file")
    p.add_argument("instance", help="labeled CSV with optional JSON sidecar")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0, help="seed for the vector Z")
    p.add_argument("--k", type=int, default=None, help="override the sidecar's k")
    _add_lloyds(p)
    p.add_argument("--out", default="assignment.csv")

    p = sub.add_parser("sweep", help="mean cost over an alpha x beta grid")
    _add_distribution(p)
    p.add_argument("--alpha-range", default="0:20")
    p.add_argument("--alpha-points", type=int, default=50)
    p.add_argument("--beta-grid", default=None, help="default 1:10:25 (just 2 under the mean rule)")
    _add_lloyds(p, beta=False)
    p.add_argument("--out", default="sweep.csv")

    p = sub.add_parser("tune-alpha", help="exact alpha tuning with a train/test split")
    _add_distribution(p)
    p.add_argument("--alpha-range", default="0:20")
    p.add_argument("--alpha-points", type=int, default=50)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    _add_lloyds(p)
    p.add_argument("--out", default="tune.csv")

    p = sub.add_parser("count-intervals", help="mean leaf count as n grows")
    _add_distribution(p)
    p.add_argument("--n-grid", default="50:1000:50")
    p.add_argument("--alpha-range", default="0:20")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--out", default="counts.csv")

    p = sub.add_parser("histogram", help="histogram of breakpoints over the sample")
    _add_distribution(p)
    p.add_argument("--alpha-range", default="0:20")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--bins", type=int, default=40)
    p.add_argument("--out", default="histogram.csv")
    return parser


def _distribution(args) -> DistributionConfig:
    if args.dist == "label-subset":
        if not args.dataset:
            raise UsageError("--dist label-subset needs --dataset")
        ds = load_labeled_csv(args.dataset)
        return DistributionConfig("label_subset", k=args.k, N=args.N, dataset=ds)
    return DistributionConfig("gaussian_grid", k=args.k, N=args.N)


def _rule(args, betas) -> str:
    if args.center_rule is not None:
        return args.center_rule
    return "mean" if set(betas) == {2.0} else "medoid"


def _check_common(args):
    if getattr(args, "m", 1) < 1:
        raise UsageError("--m must be at least 1")
    if getattr(args, "threads", 1) < 1:
        raise UsageError("--threads must be at least 1")


# -- output helpers --------------------------------------------------------------

def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def manifest_path(out: Path) -> Path:
    return out.with_name(out.stem + ".manifest.json")


def write_manifest(out: Path, args, started: float, extra: dict) -> Path:
    config = {k: v for k, v in vars(args).items() if k not in ("func",)}
    man = {
        "command": args.command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "wall_clock_s": round(time.perf_counter() - started, 3),
        "outputs": [str(out)],
        **extra,
    }
    path = manifest_path(out)
    path.write_text(json.dumps(man, indent=2, default=str) + "\n", encoding="utf-8")
    return path


# -- commands --------------------------------------------------------------------

def cmd_cluster(args, started):
    inst, meta = read_instance(args.instance, k=args.k)
    rule = _rule(args, [args.beta])
    cfg = LloydsConfig(beta=args.beta, T=args.T, center_rule=rule)
    Z = seed_vector(args.seed, 0, inst.k)
    centers = seed(inst, Z, args.alpha)
    clustering, _ = lloyds_iterate(inst, centers, cfg)
    out = Path(args.out)
    write_csv(out, ["point_index", "cluster"], enumerate(clustering.assignment.tolist()))
    ham = hamming_distance(clustering, inst.target, inst.k)
    cost = lp_cost(inst, clustering, args.beta)
    print(f"hamming_cost={ham!r} lbeta_cost={cost!r}")
    write_manifest(out, args, started, {"centers": list(centers), "hamming_cost": ham,
                                        "lbeta_cost": cost, "center_rule": rule})


def cmd_sweep(args, started):
    _check_common(args)
    rng = parse_range(args.alpha_range)
    alphas = tuple(float(a) for a in np.linspace(rng.lo, rng.hi, args.alpha_points))
    rule = args.center_rule or "medoid"
    if args.beta_grid is None:
        betas = (2.0,) if rule == "mean" else tuple(float(b) for b in np.linspace(1, 10, 25))
    else:
        betas = parse_grid(args.beta_grid)
    if rule == "mean" and set(betas) != {2.0}:
        raise UsageError("the mean rule only supports beta = 2")
    cfg = TunerConfig(m=args.m, alpha_range=rng, alpha_grid=alphas, beta_grid=betas, T=args.T,
                      seed=args.seed, center_rule=rule, threads=args.threads)
    sample = draw_sample(_distribution(args), args.m, args.seed)
    surf = sweep_surface(sample, alphas, betas, cfg)
    out = Path(args.out)
    write_csv(out, ["alpha", "beta", "mean_cost", "stderr"], surf.rows())
    a, b = surf.argmin()
    best = {"alpha": float(surf.alphas[a]), "beta": float(surf.betas[b]),
            "mean_cost": float(surf.mean[a, b]), "stderr": float(surf.stderr[a, b])}
    print(f"argmin alpha={best['alpha']!r} beta={best['beta']!r} mean_cost={best['mean_cost']!r}")
    write_manifest(out, args, started, {"argmin": best, "center_rule": rule})


def cmd_tune_alpha(args, started):
    _check_common(args)
    if args.m < 2:
        raise UsageError("tune-alpha needs --m >= 2 for the train/test split")
    rng = parse_range(args.alpha_range)
    rule = _rule(args, [args.beta])
    cfg = TunerConfig(m=args.m, alpha_range=rng,
                      alpha_grid=tuple(float(a) for a in np.linspace(rng.lo, rng.hi, args.alpha_points)),
                      eps=args.eps, T=args.T, seed=args.seed, center_rule=rule, threads=args.threads)
    LloydsConfig(beta=args.beta, T=args.T, center_rule=rule)  # validate early
    train, test = split_sample(_distribution(args), args.m, args.seed)
    rep = train_test_report(train, test, args.beta, cfg)
    out = Path(args.out)
    write_csv(out, ["alpha_candidate", "train_cost", "test_cost"],
              zip(rep.candidates.tolist(), rep.train_costs.tolist(), rep.test_costs.tolist()))
    print(f"alpha={rep.alpha!r} train_cost={rep.train_cost!r} test_cost={rep.test_cost!r}")
    if rep.flagged:
        print(f"warning: train/test gap {rep.max_gap:.4f} exceeds 0.05", file=sys.stderr)
    write_manifest(out, args, started, {"chosen": rep.summary(), "center_rule": rule})


def cmd_count_intervals(args, started):
    _check_common(args)
    rng = parse_range(args.alpha_range)
    grid = parse_int_grid(args.n_grid)
    if not grid:
        raise UsageError("--n-grid is empty")
    rows = count_intervals_vs_n(_distribution(args), grid, args.m, args.seed, rng, args.eps,
                                args.threads)
    out = Path(args.out)
    write_csv(out, ["n", "mean_intervals", "stderr"], rows)
    write_manifest(out, args, started, {"rows": len(rows)})


def cmd_histogram(args, started):
    _check_common(args)
    if args.bins < 1:
        raise UsageError("--bins must be positive")
    rng = parse_range(args.alpha_range)
    sample = draw_sample(_distribution(args), args.m, args.seed)
    trees = ordered_map(lambda it: enumerate_execution_tree(it[1][0], it[1][1], rng, args.eps,
                                                            source=it[0]),
                        list(enumerate(sample)), args.threads)
    bps = BreakpointSet.merge([t.breakpoints for t in trees], args.eps)
    rows = breakpoint_histogram(bps, args.bins, rng)
    out = Path(args.out)
    write_csv(out, ["bin_lo", "bin_hi", "count"], rows)
    write_manifest(out, args, started, {"breakpoints": len(bps),
                                        "mean_intervals": float(np.mean([len(t.leaves) for t in trees]))})


COMMANDS = {"cluster": cmd_cluster, "sweep": cmd_sweep, "tune-alpha": cmd_tune_alpha,
            "count-intervals": cmd_count_intervals, "histogram": cmd_histogram}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    started = time.perf_counter()
    try:
        COMMANDS[args.command](args, started)
    except (UsageError, DatasetFormatError, ValueError, FileNotFoundError) as exc:
        print(f"lloydspp {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and fail with 1
        print(f"lloydspp {args.command}: failed: {exc!r}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
