"""Command line entry point.

Exit codes: 0 success, 1 I/O failure, 2 usage or validation error, 3 the
l1 solver failed on every cluster.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, graphmodel
from .cluster import SpectralConfig, indicators_to_partition, l1_spectral, spectral_clustering
from .svgplot import render_curves_svg

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"p must lie in [0, 1], got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="l1spectral",
                                     description="l1-spectral graph clustering toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a perturbed block-model graph")
    g.add_argument("--sizes", type=_int_list, required=True, help="block sizes, e.g. 10,12,15")
    g.add_argument("--p", type=_probability, default=0.0, help="perturbation probability")
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("--shuffle", action="store_true", help="randomly permute node ids")
    g.add_argument("--out", help="edge-list output (default: stdout)")
    g.add_argument("--dense", help="also write the dense 0/1 matrix here")
    g.add_argument("--labels-out", help="write ground-truth node<TAB>block lines here")

    c = sub.add_parser("cluster", help="cluster a graph file")
    c.add_argument("--input", required=True, help="edge-list or dense matrix file")
    c.add_argument("--n", type=_positive_int, help="node count for edge lists")
    c.add_argument("--algo", choices=["l1", "l1spectral", "spectral"], default="l1")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--reps", type=_int_list, help="representative node ids (l1 only)")
    c.add_argument("--reps-mode", choices=["greedy", "adaptive"], default="greedy",
                   help="how to choose representatives when --reps is absent")
    c.add_argument("--laplacian", default="unnormalized",
                   help="unnormalized | symmetric | randomwalk (spectral only)")
    c.add_argument("--threshold", type=float, default=0.5)
    c.add_argument("--seed", type=_seed, default=0)
    c.add_argument("--out", help="labels output (default: stdout)")
    c.add_argument("--raw-out", help="raw indicator matrix output (l1 only; "
                                     "defaults to <out>.raw.tsv when --out is given)")

    b = sub.add_parser("bench", help="run the robustness sweep")
    b.add_argument("--plan", help="key=value plan file; flags override it")
    b.add_argument("--quick", action="store_true", help=f"{bench.QUICK_TRIALS} trials per level")
    b.add_argument("--p-grid", help="comma list or start:stop:step")
    b.add_argument("--trials", type=_positive_int)
    b.add_argument("--k-range")
    b.add_argument("--size-range")
    b.add_argument("--algorithms")
    b.add_argument("--laplacian")
    b.add_argument("--reps", choices=["adaptive", "greedy"])
    b.add_argument("--seed", type=_seed)
    b.add_argument("--jobs", type=_positive_int, help="worker processes (default: all cores)")
    b.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
    b.add_argument("--plot", action="store_true", help="also write curves.svg")
    b.add_argument("--out-dir", "--out", dest="out_dir", default="bench_out")

    pl = sub.add_parser("plot", help="render a curves CSV as SVG")
    pl.add_argument("--curves", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("--title", default="")
    return parser


def cmd_generate(args) -> int:
    if not args.sizes:
        raise UsageError("--sizes must list at least one block")
    try:
        spec = graphmodel.BlockSpec.from_unsorted(args.sizes)
    except ValueError as exc:
        raise UsageError(str(exc))
    rng = np.random.default_rng(args.seed)
    a = graphmodel.perturb(graphmodel.generate_ideal(spec),
                           graphmodel.generate_er(spec.n, args.p, rng))
    labels = spec.labels()
    if args.shuffle:
        a, perm = graphmodel.shuffle_nodes(a, rng)
        labels = labels[perm]
    if args.out:
        graphmodel.write_edge_list(a, args.out)
    else:
        us, vs = np.nonzero(np.triu(a, k=1))
        sys.stdout.writelines(f"{u}\t{v}\n" for u, v in zip(us.tolist(), vs.tolist()))
    if args.dense:
        graphmodel.write_dense(a, args.dense)
    if args.labels_out:
        _write_labels(labels, args.labels_out)
    summary = f"n={spec.n} k={spec.k} edges={graphmodel.edge_count(a)}"
    print(summary, file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def _write_labels(labels, path=None) -> None:
    lines = [f"{i}\t{int(lab)}\n" for i, lab in enumerate(labels)]
    if path is None:
        sys.stdout.writelines(lines)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.writelines(lines)


def cmd_cluster(args) -> int:
    a = graphmodel.read_graph(args.input, n=args.n)
    n = a.shape[0]
    if not 1 <= args.k <= n:
        raise UsageError(f"--k must be in [1, {n}], got {args.k}")
    if args.algo == "spectral":
        try:
            cfg = SpectralConfig(k=args.k, laplacian=args.laplacian, seed=args.seed)
            labels = spectral_clustering(a, cfg)
        except ValueError as exc:
            raise UsageError(str(exc))
        _write_labels(labels, args.out)
        print(f"spectral: n={n} k={args.k} clusters={len(set(labels.tolist()))}",
              file=sys.stderr)
        return EXIT_OK

    reps = args.reps if args.reps else ("adaptive" if args.reps_mode == "adaptive" else None)
    try:
        f = l1_spectral(a, args.k, reps=reps, threshold=args.threshold, on_failure="fallback")
    except ValueError as exc:
        raise UsageError(str(exc))
    for j, report in f.failures:
        print(f"warning: cluster {j} (representative {f.representatives[j]}): "
              f"solver status {report.status.value}", file=sys.stderr)
    if len(f.failures) == args.k:
        print("error: the l1 solver failed on every cluster", file=sys.stderr)
        return EXIT_SOLVER
    labels = indicators_to_partition(f)
    _write_labels(labels, args.out)
    raw_out = args.raw_out or (f"{args.out}.raw.tsv" if args.out else None)
    if raw_out:
        np.savetxt(raw_out, f.raw, fmt="%.10g", delimiter="\t")
    print(f"l1spectral: n={n} k={args.k} representatives={f.representatives.tolist()} "
          f"failures={len(f.failures)}", file=sys.stderr)
    return EXIT_OK


def resolve_plan(args) -> bench.ExperimentPlan:
    pairs = bench.read_plan_file(args.plan) if args.plan else {}
    flag_values = {"p_grid": args.p_grid, "k_range": args.k_range,
                   "size_range": args.size_range, "algorithms": args.algorithms,
                   "laplacian": args.laplacian, "reps": args.reps,
                   "trials": None if args.trials is None else str(args.trials),
                   "seed": None if args.seed is None else str(args.seed)}
    pairs.update({k: v for k, v in flag_values.items() if v is not None})
    fields = bench.plan_overrides(pairs)
    if args.quick and args.trials is None:
        fields["trials"] = bench.QUICK_TRIALS
    return bench.build_plan(**fields)


def cmd_bench(args) -> int:
    try:
        plan = resolve_plan(args)
    except ValueError as exc:
        raise UsageError(str(exc))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = bench.run_experiment(plan, jobs=args.jobs)
    curves = bench.aggregate(records)
    bench.write_trials_csv(records, out_dir / "trials.csv", timing=args.timing)
    bench.write_curves_csv(curves, out_dir / "curves.csv")
    if args.plot:
        (out_dir / "curves.svg").write_text(render_curves_svg(curves))
    for c in curves:
        print(f"p={c.p:<5g} {c.algorithm:<11} mean={c.mean_correct:.3f} "
              f"ci=[{c.ci95_low:.3f}, {c.ci95_high:.3f}] n={c.n_trials}")
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        curves = bench.read_curves_csv(args.curves)
    except (ValueError, StopIteration) as exc:
        raise UsageError(str(exc))
    Path(args.out).write_text(render_curves_svg(curves, title=args.title))
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "cluster": cmd_cluster, "bench": cmd_bench,
            "plot": cmd_plot}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # malformed input files
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
