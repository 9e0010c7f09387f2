"""Readers and writers for the on-disk formats.

Layer file (one per layer)::

    #nodes 5
    # free-form comment lines start with '#'
    1.0 0 1 2
    2.5 3 4

Manifest: one ``<layer-path> [<lambda>]`` per line, paths relative to the
manifest. Labels: CSV ``node_id,class_id``. Observed set: CSV of node ids.
Traces: CSV ``method,p,seed,flops,normalized_flops,objective,accuracy``.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import HypersslError, ParseError
from .hypergraph import Layer, MultilayerHypergraph, build_layer

TRACE_COLUMNS = ("method", "p", "seed", "flops", "normalized_flops", "objective", "accuracy")


def _comment_block(header: Iterable[str] | None) -> str:
    if not header:
        return ""
    return "".join(f"# {line}\n" for line in header)


def _content_lines(path: Path):
    """Yield ``(lineno, stripped)`` for non-blank, non-comment lines."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(path, 0, f"cannot read file: {exc.strerror or exc}") from exc
    for k, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield k, line


def read_layer(path) -> tuple[int, Layer]:
    path = Path(path)
    try:
        first = path.read_text(encoding="utf-8").splitlines()[:1]
    except OSError as exc:
        raise ParseError(path, 0, f"cannot read file: {exc.strerror or exc}") from exc
    parts = first[0].split() if first else []
    if len(parts) != 2 or parts[0] != "#nodes":
        raise ParseError(path, 1, "first line must be '#nodes <n>'")
    try:
        n = int(parts[1])
    except ValueError:
        raise ParseError(path, 1, f"bad node count {parts[1]!r}") from None
    if n < 1:
        raise ParseError(path, 1, "node count must be >= 1")
    raw = []
    lines = []
    for k, line in _content_lines(path):
        tokens = line.split()
        try:
            weight = float(tokens[0])
            nodes = [int(t) for t in tokens[1:]]
        except ValueError:
            raise ParseError(path, k, f"expected '<weight> <u1> <u2> ...', got {line!r}") from None
        raw.append((weight, nodes))
        lines.append(k)
    for (weight, nodes), k in zip(raw, lines):
        try:
            build_layer([(weight, nodes)], n)
        except (HypersslError, ValueError) as exc:
            raise ParseError(path, k, str(exc)) from None
    return n, build_layer(raw, n)


def write_layer(path, layer: Layer, n: int, header: Sequence[str] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#nodes {n}\n")
        fh.write(_comment_block(header))
        for w, nodes in layer.hyperedges:
            fh.write(f"{w!r} " + " ".join(map(str, nodes)) + "\n")


def read_manifest(path) -> tuple[list[Path], list[float]]:
    path = Path(path)
    paths, lambdas = [], []
    for k, line in _content_lines(path):
        tokens = line.rsplit(maxsplit=1)
        lam = 1.0
        if len(tokens) == 2:
            try:
                lam = float(tokens[1])
                line = tokens[0]
            except ValueError:
                pass
        if lam < 0:
            raise ParseError(path, k, f"lambda must be nonnegative, got {lam}")
        paths.append((path.parent / line).resolve())
        lambdas.append(lam)
    if not paths:
        raise ParseError(path, 0, "manifest lists no layers")
    return paths, lambdas


def write_manifest(path, layer_paths: Sequence, lambdas: Sequence[float], header=None) -> None:
    base = Path(path).parent
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_comment_block(header))
        for lp, lam in zip(layer_paths, lambdas):
            lp = Path(lp)
            try:
                lp = lp.resolve().relative_to(base.resolve())
            except ValueError:
                pass
            fh.write(f"{lp} {lam!r}\n")


def load_hypergraph(manifest) -> tuple[MultilayerHypergraph, list[float]]:
    """Load every layer listed in a manifest, or a single layer file."""
    manifest = Path(manifest)
    first = manifest.read_text(encoding="utf-8").lstrip().split(maxsplit=1)[:1] if manifest.exists() else []
    if first == ["#nodes"]:
        n, layer = read_layer(manifest)
        return MultilayerHypergraph(n, (layer,)), [1.0]
    paths, lambdas = read_manifest(manifest)
    sizes, layers = [], []
    for lp in paths:
        n, layer = read_layer(lp)
        sizes.append(n)
        layers.append(layer)
    if len(set(sizes)) != 1:
        raise ParseError(manifest, 0, f"layers disagree on the node count: {sizes}")
    return MultilayerHypergraph(sizes[0], tuple(layers)), lambdas


def _csv_rows(path: Path, width: int):
    first = True
    for k, line in _content_lines(path):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != width:
            raise ParseError(path, k, f"expected {width} comma-separated fields, got {len(cells)}")
        try:
            values = [int(c) for c in cells]
        except ValueError:
            if first and not any(c.lstrip("-").isdigit() for c in cells):
                first = False
                continue  # header row
            raise ParseError(path, k, f"expected integers, got {line!r}") from None
        first = False
        yield k, values


def read_labels(path, n: int | None = None) -> np.ndarray:
    """Ground truth per node; nodes absent from the file get ``-1``."""
    path = Path(path)
    pairs = {}
    for k, (u, c) in _csv_rows(path, 2):
        if u < 0 or (n is not None and u >= n):
            raise ParseError(path, k, f"node id {u} out of range")
        if c < 0:
            raise ParseError(path, k, f"class id must be nonnegative, got {c}")
        pairs[u] = c
    size = n if n is not None else (max(pairs) + 1 if pairs else 0)
    gt = np.full(size, -1, dtype=np.int64)
    for u, c in pairs.items():
        gt[u] = c
    return gt


def write_labels(path, labels, header=None, column="class_id") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_comment_block(header))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", column])
        for u, c in enumerate(np.asarray(labels).tolist()):
            w.writerow([u, c])


def read_observed(path, n: int | None = None) -> np.ndarray:
    path = Path(path)
    nodes = []
    for k, (u,) in _csv_rows(path, 1):
        if u < 0 or (n is not None and u >= n):
            raise ParseError(path, k, f"node id {u} out of range")
        nodes.append(u)
    return np.array(sorted(set(nodes)), dtype=np.int64)


def write_observed(path, observed, header=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_comment_block(header))
        fh.write("node_id\n")
        for u in np.asarray(observed).tolist():
            fh.write(f"{u}\n")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def trace_rows(trace):
    for c in trace.checkpoints:
        yield (trace.method, trace.p, trace.seed, c.flops, c.normalized_flops, c.objective, c.accuracy)


def write_traces(path, traces, header=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_comment_block(header))
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for trace in traces:
            for row in trace_rows(trace):
                fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_traces(path) -> list[dict]:
    path = Path(path)
    rows = []
    header = None
    for k, line in _content_lines(path):
        cells = line.split(",")
        if header is None:
            header = cells
            if tuple(header) != TRACE_COLUMNS:
                raise ParseError(path, k, f"unexpected trace header {line!r}")
            continue
        if len(cells) != len(header):
            raise ParseError(path, k, "wrong number of fields")
        rec = dict(zip(header, cells))
        try:
            rows.append(
                {
                    "method": rec["method"],
                    "p": float(rec["p"]),
                    "seed": int(rec["seed"]) if rec["seed"] not in ("", "None") else None,
                    "flops": int(rec["flops"]),
                    "normalized_flops": float(rec["normalized_flops"]),
                    "objective": float(rec["objective"]),
                    "accuracy": float(rec["accuracy"]),
                }
            )
        except ValueError:
            raise ParseError(path, k, f"malformed trace row {line!r}") from None
    return rows


def write_curves(path, traces, header=None) -> None:
    """Gnuplot data: one indexed block per trace (``plot ... index k``)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_comment_block(header))
        for k, trace in enumerate(traces):
            if k:
                fh.write("\n\n")
            fh.write(f"# {trace.method} p={trace.p!r} seed={trace.seed}\n")
            fh.write("# normalized_flops objective accuracy\n")
            for c in trace.checkpoints:
                fh.write(f"{c.normalized_flops!r} {c.objective!r} {c.accuracy!r}\n")
