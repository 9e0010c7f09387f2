"""Multi-seed experiments and gate/failure aggregation.

A *gate* ``g`` is a relative tolerance. A run reaches the objective gate at
the first checkpoint where ``(theta_k - theta*) / (theta_0 - theta*) <= g``,
with ``theta*`` the best objective any method reached on that instance
within the budget. Accuracy gates use ``(a* - a_k) / (a* - a_0) <= g`` with
``a*`` the best accuracy reached by any method, or, in ``absolute`` mode,
``a_k >= 1 - g``. Runs that never reach a gate count as failures for it.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .objective import Problem, build_label_matrix
from .sbm import SbmSpec, generate_sbm, sample_observed
from .solvers import SolverTrace, solve

DEFAULT_GATES = (0.75, 0.5, 0.25, 0.1, 0.05)
BUDGET_MULTIPLIER = 4


def derive_seed(*keys) -> int:
    """Deterministic 63-bit seed from integer keys (via ``numpy.random.SeedSequence``)."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(2, np.uint64)[0] >> np.uint64(1))


def run_experiment(
    problem: Problem,
    methods: Sequence[str],
    seeds: Sequence[int],
    budget_multiplier: float = BUDGET_MULTIPLIER,
    jobs: int = 1,
    **solver_kwargs,
) -> list[SolverTrace]:
    """One trace per ``(method, seed)`` with a budget of ``budget_multiplier * n`` flops."""
    budget = int(budget_multiplier * problem.n)
    tasks = [(method, seed) for method in methods for seed in seeds]

    def work(task):
        method, seed = task
        return solve(problem, method, budget, seed=seed, **solver_kwargs)

    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(work, tasks))
    return [work(t) for t in tasks]


@dataclass(frozen=True)
class SbmInstance:
    ratio: float
    perc: float
    seed: int
    problem: Problem

    @property
    def key(self) -> tuple:
        return (self.ratio, self.perc, self.seed)


def sbm_instances(
    block_sizes: Sequence[int],
    p_in: float,
    ratios: Iterable[float],
    percs: Iterable[float],
    seeds: Iterable[int],
    p: float = 2.0,
) -> list[SbmInstance]:
    """Synthetic sweep: for every (ratio, perc, seed) a fresh graph and label sample.

    The graph is drawn from ``derive_seed(seed, 0, k_ratio)`` and the observed
    set from ``derive_seed(seed, 1, k_ratio, k_perc)``.
    """
    out = []
    ratios, percs, seeds = list(ratios), list(percs), list(seeds)
    for a, ratio in enumerate(ratios):
        for seed in seeds:
            spec = SbmSpec(tuple(block_sizes), p_in, p_in / ratio, derive_seed(seed, 0, a))
            hg, gt = generate_sbm(spec)
            for b, perc in enumerate(percs):
                observed = sample_observed(gt, perc, derive_seed(seed, 1, a, b))
                labels = build_label_matrix(gt, observed, len(block_sizes), spec.n)
                out.append(SbmInstance(ratio, perc, seed, Problem(hg, labels, p=p)))
    return out


def _first_hit(x: np.ndarray, residual: np.ndarray, gate: float) -> float | None:
    hit = np.flatnonzero(residual <= gate)
    return float(x[hit[0]]) if hit.size else None


def gate_hits(
    traces: Sequence[SolverTrace],
    gates: Sequence[float] = DEFAULT_GATES,
    kind: str = "objective",
    accuracy_mode: str = "relative",
) -> list[dict[float, float | None]]:
    """Per trace, the normalized flop at which each gate is first reached.

    All ``traces`` must belong to the same instance; the reference value is
    the best one reached across them.
    """
    if kind == "objective":
        values = [t.objectives for t in traces]
        best = min(float(v.min()) for v in values) if values else 0.0

        def residual(v):
            span = v[0] - best
            return np.zeros_like(v) if span <= 0 else (v - best) / span

    elif kind == "accuracy":
        values = [t.accuracies for t in traces]
        if accuracy_mode == "absolute":
            # Compare a_k >= 1 - g directly: 1 - a_k picks up rounding (1 - 0.95 > 0.05).
            out = []
            for t, v in zip(traces, values):
                v = np.nan_to_num(np.asarray(v, dtype=float), nan=-np.inf)
                out.append({g: _first_hit(t.normalized_flops, -v, -(1.0 - g)) for g in gates})
            return out

        elif accuracy_mode == "relative":
            finite = [x for v in values for x in np.asarray(v, dtype=float) if np.isfinite(x)]
            best = max(finite) if finite else np.nan

            def residual(v):
                span = best - v[0]
                return np.zeros_like(v) if span <= 0 else (best - v) / span

        else:
            raise ValueError(f"unknown accuracy mode {accuracy_mode!r}")
    else:
        raise ValueError(f"unknown gate kind {kind!r}")

    out = []
    for t, v in zip(traces, values):
        r = np.nan_to_num(residual(np.asarray(v, dtype=float)), nan=np.inf)
        out.append({g: _first_hit(t.normalized_flops, r, g) for g in gates})
    return out


@dataclass
class GateCell:
    hits: list[float] = field(default_factory=list)
    runs: int = 0

    @property
    def failures(self) -> int:
        return self.runs - len(self.hits)

    @property
    def fail(self) -> float:
        return self.failures / self.runs if self.runs else 0.0

    @property
    def mean(self) -> float | None:
        return float(np.mean(self.hits)) if self.hits else None

    @property
    def std(self) -> float | None:
        if not self.hits:
            return None
        return float(np.std(self.hits, ddof=1)) if len(self.hits) > 1 else 0.0


@dataclass
class GateReport:
    kind: str
    gates: tuple[float, ...]
    methods: tuple[str, ...]
    cells: dict[tuple[str, float], GateCell]

    def cell(self, method: str, gate: float) -> GateCell:
        return self.cells[(method, gate)]


def gate_stats(
    instances: Sequence[Sequence[SolverTrace]],
    gates: Sequence[float] = DEFAULT_GATES,
    kind: str = "objective",
    accuracy_mode: str = "relative",
) -> GateReport:
    """Aggregate gate hits over instances (each a list of traces on one problem).

    Means and standard deviations are taken over successful runs only.
    """
    gates = tuple(gates)
    methods: list[str] = []
    cells: dict[tuple[str, float], GateCell] = {}
    for traces in instances:
        for t, hits in zip(traces, gate_hits(traces, gates, kind, accuracy_mode)):
            if t.method not in methods:
                methods.append(t.method)
            for g in gates:
                c = cells.setdefault((t.method, g), GateCell())
                c.runs += 1
                if hits[g] is not None:
                    c.hits.append(hits[g])
    return GateReport(kind, gates, tuple(methods), cells)


def _cell_text(x: float | None, digits: int) -> str:
    return "-" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.{digits}f}"


def aggregate_tables(report: GateReport, path, header: Sequence[str] | None = None, digits: int = 4) -> None:
    """CSV with one row per gate and ``flop_mean``, ``flop_std``, ``fail`` per method."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header or ():
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        cols = ["gate"]
        for m in report.methods:
            cols += [f"{m}_flop_mean", f"{m}_flop_std", f"{m}_fail"]
        w.writerow(cols)
        if not report.methods:
            return
        for g in report.gates:
            row = [repr(g)]
            for m in report.methods:
                c = report.cell(m, g)
                row += [_cell_text(c.mean, digits), _cell_text(c.std, digits), f"{c.fail:.{digits}f}"]
            w.writerow(row)


def format_report(report: GateReport) -> str:
    """Plain-text rendering in the ``mean±std fail`` layout."""
    lines = [f"{report.kind} gates", "gate  " + "  ".join(f"{m.upper():>18s}" for m in report.methods)]
    for g in report.gates:
        parts = []
        for m in report.methods:
            c = report.cell(m, g)
            flop = "-" if c.mean is None else f"{c.mean:.2f}±{c.std:.2f}"
            parts.append(f"{flop:>12s} {c.fail:4.2f}")
        lines.append(f"{g:<5g} " + "  ".join(parts))
    return "\n".join(lines)
