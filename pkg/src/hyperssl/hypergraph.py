"""Multilayer hypergraphs and their per-layer clique expansions.

Each layer is a weighted hyperedge list over a common node set ``0..n-1``.
Clique expansion turns a hyperedge ``e`` of weight ``w`` into a clique whose
pairs each receive ``w / |e|``; pairs shared by several hyperedges have their
weights summed, so every unordered node pair appears at most once.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .errors import InvalidNode, InvalidWeight

logger = logging.getLogger(__name__)

Hyperedge = tuple[float, tuple[int, ...]]


@dataclass(frozen=True)
class Layer:
    """Validated hyperedge list of one layer.

    ``warnings`` records hyperedges dropped at construction (singletons).
    """

    hyperedges: tuple[Hyperedge, ...]
    warnings: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.hyperedges)


def build_layer(raw_hyperedges: Iterable[tuple[float, Sequence[int]]], n: int) -> Layer:
    """Validate raw ``(weight, nodes)`` pairs and return a :class:`Layer`.

    Node lists are sorted and deduplicated. Hyperedges that collapse to a
    single node are dropped with a warning; empty ones are rejected.
    """
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    kept: list[Hyperedge] = []
    notes: list[str] = []
    for k, (weight, nodes) in enumerate(raw_hyperedges):
        weight = float(weight)
        if not weight > 0 or not np.isfinite(weight):
            raise InvalidWeight(f"hyperedge {k}: weight must be positive, got {weight}")
        ids = sorted({int(v) for v in nodes})
        if not ids:
            raise ValueError(f"hyperedge {k} is empty")
        if ids[0] < 0 or ids[-1] >= n:
            bad = ids[0] if ids[0] < 0 else ids[-1]
            raise InvalidNode(f"hyperedge {k}: node id {bad} outside [0, {n})")
        if len(ids) == 1:
            msg = f"hyperedge {k}: singleton {{{ids[0]}}} dropped"
            logger.warning(msg)
            notes.append(msg)
            continue
        kept.append((weight, tuple(ids)))
    return Layer(tuple(kept), tuple(notes))


@dataclass(frozen=True)
class MultilayerHypergraph:
    n: int
    layers: tuple[Layer, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a hypergraph needs at least one node")
        if len(self.layers) < 1:
            raise ValueError("a hypergraph needs at least one layer")
        object.__setattr__(self, "layers", tuple(self.layers))
        for ell, layer in enumerate(self.layers):
            for _, nodes in layer.hyperedges:
                if nodes[0] < 0 or nodes[-1] >= self.n:
                    raise InvalidNode(f"layer {ell} references a node outside [0, {self.n})")

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @cached_property
    def clique_layers(self) -> tuple["CliqueLayer", ...]:
        return tuple(clique_expand(layer, self.n) for layer in self.layers)


@dataclass(frozen=True, eq=False)
class CliqueLayer:
    """Clique-expanded weighted graph of one layer.

    Edge ``e`` is oriented ``src[e] -> dst[e]``; the signed incidence matrix
    has ``+1`` at the source and ``-1`` at the tip. ``indptr``/``inc_edge``/
    ``inc_sign``/``inc_nbr`` form a CSR index: for node ``u`` the slice
    ``indptr[u]:indptr[u+1]`` lists its incident edges, the sign of ``u`` in
    each, and the node at the other end.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray
    indptr: np.ndarray = field(repr=False)
    inc_edge: np.ndarray = field(repr=False)
    inc_sign: np.ndarray = field(repr=False)
    inc_nbr: np.ndarray = field(repr=False)

    @property
    def num_edges(self) -> int:
        return len(self.weights)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(int(u), int(v)) for u, v in zip(np.minimum(self.src, self.dst), np.maximum(self.src, self.dst))]

    @cached_property
    def inv_sqrt_degrees(self) -> np.ndarray:
        """``D^{-1/2}`` diagonal with 0 for isolated nodes."""
        out = np.zeros(self.n)
        pos = self.degrees > 0
        out[pos] = 1.0 / np.sqrt(self.degrees[pos])
        return out

    @cached_property
    def incidence(self) -> sparse.csr_matrix:
        """Signed incidence matrix ``B`` (edges x nodes)."""
        m = self.num_edges
        rows = np.concatenate([np.arange(m), np.arange(m)])
        cols = np.concatenate([self.src, self.dst])
        vals = np.concatenate([np.ones(m), -np.ones(m)])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(m, self.n))

    @cached_property
    def scaled_incidence(self) -> sparse.csr_matrix:
        """``B D^{-1/2}``: maps scores to per-edge scaled differences."""
        return sparse.csr_matrix(self.incidence @ sparse.diags(self.inv_sqrt_degrees))

    def adjacency(self) -> sparse.csr_matrix:
        a = sparse.coo_matrix((self.weights, (self.src, self.dst)), shape=(self.n, self.n))
        return sparse.csr_matrix(a + a.T)

    def normalized_laplacian(self) -> sparse.csr_matrix:
        """``(B D^{-1/2})^T W (B D^{-1/2})``.

        Equals ``I - D^{-1/2} A D^{-1/2}`` on non-isolated nodes and has a
        zero row/column for isolated ones.
        """
        s = self.scaled_incidence
        return sparse.csr_matrix(s.T @ sparse.diags(self.weights) @ s)

    def reoriented(self, flip: np.ndarray) -> "CliqueLayer":
        """Copy with the orientation of edges where ``flip`` is true reversed."""
        flip = np.asarray(flip, dtype=bool)
        src = np.where(flip, self.dst, self.src)
        dst = np.where(flip, self.src, self.dst)
        return _assemble(self.n, src, dst, self.weights, self.degrees)


def _assemble(n, src, dst, weights, degrees) -> CliqueLayer:
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    m = len(src)
    ends = np.concatenate([src, dst])
    edge_ids = np.concatenate([np.arange(m), np.arange(m)])
    signs = np.concatenate([np.ones(m), -np.ones(m)])
    nbrs = np.concatenate([dst, src])
    order = np.lexsort((edge_ids, ends))
    counts = np.bincount(ends, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return CliqueLayer(
        n=n,
        src=src,
        dst=dst,
        weights=np.asarray(weights, dtype=float),
        degrees=np.asarray(degrees, dtype=float),
        indptr=indptr,
        inc_edge=edge_ids[order],
        inc_sign=signs[order],
        inc_nbr=nbrs[order],
    )


def clique_expand(layer: Layer, n: int) -> CliqueLayer:
    """Expand every hyperedge into a clique with pair weight ``w/|e|``.

    Shared pairs are aggregated. Edges are oriented from the smaller to the
    larger node id and sorted lexicographically.
    """
    pair_weight: dict[tuple[int, int], float] = {}
    for w, nodes in layer.hyperedges:
        share = w / len(nodes)
        for pair in combinations(nodes, 2):
            pair_weight[pair] = pair_weight.get(pair, 0.0) + share
    pairs = sorted(pair_weight)
    src = np.array([u for u, _ in pairs], dtype=np.int64)
    dst = np.array([v for _, v in pairs], dtype=np.int64)
    weights = np.array([pair_weight[p] for p in pairs], dtype=float)
    degrees = np.bincount(src, weights=weights, minlength=n) + np.bincount(dst, weights=weights, minlength=n)
    return _assemble(n, src, dst, weights, degrees)


def hyperedge_degrees(layer: Layer, n: int) -> np.ndarray:
    """Degrees from the hyperedge list: ``sum_{e ∋ u} w(e)(|e|-1)/|e|``."""
    deg = np.zeros(n)
    for w, nodes in layer.hyperedges:
        k = len(nodes)
        deg[list(nodes)] += w * (k - 1) / k
    return deg


def isolated_nodes(clique_layer: CliqueLayer) -> list[int]:
    return [int(u) for u in np.flatnonzero(clique_layer.degrees == 0)]
