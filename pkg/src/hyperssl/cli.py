"""Command-line entry point: ``hyperssl {generate-sbm,solve,bench,aggregate}``.

Exit status is 0 on success, 2 on usage errors and 1 on runtime failures.
Every output file starts with ``#`` comment lines holding the resolved
configuration; identical flags produce byte-identical files.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .bench import (
    BUDGET_MULTIPLIER,
    DEFAULT_GATES,
    aggregate_tables,
    derive_seed,
    format_report,
    gate_stats,
    run_experiment,
    sbm_instances,
)
from .errors import HypersslError
from .io import (
    load_hypergraph,
    read_labels,
    read_observed,
    read_traces,
    write_curves,
    write_labels,
    write_layer,
    write_traces,
)
from .objective import Problem, build_label_matrix
from .sbm import SbmSpec, generate_sbm, sample_observed
from .solvers import METHODS, Checkpoint, SolverTrace, solve

log = logging.getLogger("hyperssl")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _methods(text: str) -> list[str]:
    out = [m.strip().lower() for m in text.split(",") if m.strip()]
    bad = [m for m in out if m not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {','.join(METHODS)}")
    return out


def _seeds(text: str) -> list[int]:
    """``N`` means seeds ``0..N-1``; a comma list is taken verbatim."""
    vals = _ints(text)
    if "," not in text and len(vals) == 1:
        return list(range(vals[0]))
    return vals


def _config_lines(args: argparse.Namespace) -> list[str]:
    items = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "verbose")}
    return [f"hyperssl {__version__} {args.command}"] + [f"{k} = {v}" for k, v in items.items()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperssl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate-sbm", help="write a planted-partition graph and its ground truth")
    g.add_argument("--blocks", type=_ints, required=True, help="block sizes, e.g. 125,125,125,125")
    g.add_argument("--p-in", type=float, required=True)
    pout = g.add_mutually_exclusive_group(required=True)
    pout.add_argument("--ratio", type=float, help="p_in / p_out")
    pout.add_argument("--p-out", type=float)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", type=Path, required=True, help="layer file to write")
    g.add_argument("--labels-out", type=Path, help="ground-truth CSV (default: <out stem>_labels.csv)")
    g.set_defaults(func=cmd_generate_sbm)

    s = sub.add_parser("solve", help="run one method on a hypergraph")
    _add_problem_args(s)
    s.add_argument("--method", choices=METHODS, required=True)
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--seed", type=int, default=0, help="seed for ccd/rcd and label sampling")
    s.add_argument("--budget", type=float, default=BUDGET_MULTIPLIER, help="budget in multiples of n flops")
    s.add_argument("--stride", type=int, help="checkpoint stride in flops (default ceil(n/100))")
    s.add_argument("--stepsize", type=float, help="override the default stepsize")
    s.add_argument("--out-dir", type=Path, required=True)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="multi-seed sweep with gate tables")
    src = b.add_argument_group("synthetic instances")
    src.add_argument("--blocks", type=_ints, help="SBM block sizes (synthetic sweep)")
    src.add_argument("--p-in", type=float, default=0.2)
    src.add_argument("--ratios", type=_floats, default=[2.0, 2.5, 3.0, 3.5])
    b.add_argument("--manifest", type=Path, help="hypergraph manifest (dataset sweep)")
    b.add_argument("--labels", type=Path, help="ground-truth CSV (dataset sweep)")
    b.add_argument("--lambda", dest="lambdas", type=_floats)
    b.add_argument("--perc", type=_floats, default=[3.0, 6.0, 9.0, 12.0])
    b.add_argument("--seeds", type=_seeds, default=list(range(5)), help="N (=0..N-1) or a comma list")
    b.add_argument("--methods", type=_methods, default=list(METHODS))
    b.add_argument("--p", dest="ps", type=_floats, default=[2.0])
    b.add_argument("--gates", type=_floats, default=list(DEFAULT_GATES))
    b.add_argument("--accuracy-mode", choices=("relative", "absolute"), default="relative")
    b.add_argument("--budget", type=float, default=BUDGET_MULTIPLIER)
    b.add_argument("--stride", type=int)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out-dir", type=Path, required=True)
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("aggregate", help="rebuild gate tables from trace CSVs (one file per instance)")
    a.add_argument("traces", type=Path, nargs="+")
    a.add_argument("--gates", type=_floats, default=list(DEFAULT_GATES))
    a.add_argument("--accuracy-mode", choices=("relative", "absolute"), default="relative")
    a.add_argument("--out-dir", type=Path, required=True)
    a.set_defaults(func=cmd_aggregate)
    return parser


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", type=Path, required=True, help="manifest or single layer file")
    p.add_argument("--labels", type=Path, required=True, help="ground-truth CSV node_id,class_id")
    p.add_argument("--observed", type=Path, help="CSV of observed node ids")
    p.add_argument("--perc", type=float, help="sample this percentage per class instead of --observed")
    p.add_argument("--lambda", dest="lambdas", type=_floats, help="per-layer weights (default: manifest, else 1)")
    p.add_argument("--classes", type=int, help="class count (default: max class id + 1)")


def _validate(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    ps = getattr(args, "ps", None) or ([args.p] if hasattr(args, "p") else [])
    if any(not p >= 1 for p in ps):
        parser.error("p must be >= 1")
    if args.command == "generate-sbm":
        if args.ratio is not None and not args.ratio > 0:
            parser.error("--ratio must be positive")
        if any(b < 1 for b in args.blocks):
            parser.error("block sizes must be positive")
    if args.command == "bench":
        if any(not r > 0 for r in args.ratios):
            parser.error("--ratios must be positive")
        if (args.blocks is None) == (args.manifest is None):
            parser.error("bench needs exactly one of --blocks (synthetic) or --manifest (dataset)")
        if args.manifest is not None and args.labels is None:
            parser.error("--manifest requires --labels")
        if args.jobs < 1:
            parser.error("--jobs must be >= 1")
    if args.command == "solve" and (args.observed is None) == (args.perc is None):
        parser.error("solve needs exactly one of --observed or --perc")
    if getattr(args, "budget", 1) <= 0:
        parser.error("--budget must be positive")
    if getattr(args, "stride", None) is not None and args.stride < 1:
        parser.error("--stride must be >= 1")


def cmd_generate_sbm(args) -> int:
    p_out = args.p_in / args.ratio if args.ratio is not None else args.p_out
    try:
        spec = SbmSpec(tuple(args.blocks), args.p_in, p_out, args.seed)
    except ValueError as exc:
        raise _Usage(str(exc)) from None
    hg, gt = generate_sbm(spec)
    header = _config_lines(args) + [
        f"sbm blocks={list(spec.block_sizes)} p_in={spec.p_in!r} p_out={spec.p_out!r} seed={spec.seed}"
    ]
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_layer(args.out, hg.layers[0], hg.n, header=header)
    labels_out = args.labels_out or args.out.with_name(args.out.stem + "_labels.csv")
    write_labels(labels_out, gt, header=header)
    log.info("wrote %s (%d edges) and %s", args.out, len(hg.layers[0]), labels_out)
    return 0


def _load_problem(args, p: float, seed: int) -> tuple[Problem, list[float]]:
    hg, lambdas = load_hypergraph(args.manifest)
    if args.lambdas is not None:
        if len(args.lambdas) != hg.num_layers:
            raise _Usage(f"--lambda has {len(args.lambdas)} values but the manifest lists {hg.num_layers} layer(s)")
        lambdas = args.lambdas
    gt = read_labels(args.labels, hg.n)
    m = args.classes or int(gt.max()) + 1
    if args.observed is not None:
        observed = read_observed(args.observed, hg.n)
    else:
        observed = sample_observed(gt, args.perc, derive_seed(seed, 1))
    return Problem(hg, build_label_matrix(gt, observed, m, hg.n), p=p, lambdas=lambdas), lambdas


def cmd_solve(args) -> int:
    problem, _ = _load_problem(args, args.p, args.seed)
    budget = int(args.budget * problem.n)
    trace = solve(problem, args.method, budget, seed=args.seed, checkpoint_stride=args.stride, stepsize=args.stepsize)
    header = _config_lines(args) + [f"stepsize = {trace.stepsize!r}", f"observed = {problem.labels.observed.tolist()}"]
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_traces(args.out_dir / "trace.csv", [trace], header=header)
    write_labels(args.out_dir / "assignment.csv", trace.assignment, header=header)
    last = trace.checkpoints[-1]
    print(f"{trace.method}: flops={last.flops} objective={last.objective:.10g} accuracy={last.accuracy:.4f}")
    return 0


def _bench_instances(args) -> list[tuple[str, int, Problem]]:
    """``(tag, seed, problem)`` for every instance of the sweep and every p."""
    out = []
    for p in args.ps:
        if args.blocks is not None:
            for inst in sbm_instances(args.blocks, args.p_in, args.ratios, args.perc, args.seeds, p=p):
                tag = f"p{p:g}_ratio{inst.ratio:g}_perc{inst.perc:g}_seed{inst.seed}"
                out.append((tag, inst.seed, inst.problem))
        else:
            hg, lambdas = load_hypergraph(args.manifest)
            if args.lambdas is not None:
                if len(args.lambdas) != hg.num_layers:
                    raise _Usage(f"--lambda has {len(args.lambdas)} values for {hg.num_layers} layer(s)")
                lambdas = args.lambdas
            gt = read_labels(args.labels, hg.n)
            m = int(gt.max()) + 1
            for b, perc in enumerate(args.perc):
                for seed in args.seeds:
                    observed = sample_observed(gt, perc, derive_seed(seed, 1, 0, b))
                    problem = Problem(hg, build_label_matrix(gt, observed, m, hg.n), p=p, lambdas=lambdas)
                    out.append((f"p{p:g}_perc{perc:g}_seed{seed}", seed, problem))
    return out


def cmd_bench(args) -> int:
    instances = _bench_instances(args)
    header = _config_lines(args)
    out = args.out_dir
    (out / "traces").mkdir(parents=True, exist_ok=True)
    groups = []
    all_traces = []
    for tag, seed, problem in instances:
        traces = run_experiment(
            problem, args.methods, [seed], budget_multiplier=args.budget, jobs=args.jobs, checkpoint_stride=args.stride
        )
        write_traces(out / "traces" / f"{tag}.csv", traces, header=header + [f"instance = {tag}"])
        groups.append(traces)
        all_traces.extend(traces)
        log.info("instance %s done", tag)
    write_curves(out / "curves.dat", all_traces, header=header)
    for kind in ("objective", "accuracy"):
        report = gate_stats(groups, args.gates, kind=kind, accuracy_mode=args.accuracy_mode)
        aggregate_tables(report, out / f"{kind}_gates.csv", header=header)
        print(format_report(report))
    return 0


def _traces_from_rows(rows) -> list[SolverTrace]:
    grouped: dict[tuple, list[dict]] = {}
    for r in rows:
        grouped.setdefault((r["method"], r["p"], r["seed"]), []).append(r)
    traces = []
    for (method, p, seed), rs in grouped.items():
        sized = [r for r in rs if r["flops"] > 0]
        n = round(sized[0]["flops"] / sized[0]["normalized_flops"]) if sized else 1
        t = SolverTrace(method, p, n, seed=seed)
        t.checkpoints = [Checkpoint(r["flops"], r["normalized_flops"], r["objective"], r["accuracy"]) for r in rs]
        traces.append(t)
    return traces


def cmd_aggregate(args) -> int:
    groups = [_traces_from_rows(read_traces(path)) for path in args.traces]
    header = _config_lines(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for kind in ("objective", "accuracy"):
        report = gate_stats(groups, args.gates, kind=kind, accuracy_mode=args.accuracy_mode)
        aggregate_tables(report, args.out_dir / f"{kind}_gates.csv", header=header)
        print(format_report(report))
    return 0


class _Usage(Exception):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    _validate(parser, args)
    try:
        return args.func(args)
    except _Usage as exc:
        parser.error(str(exc))
    except (HypersslError, OSError, ValueError) as exc:
        print(f"hyperssl: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
