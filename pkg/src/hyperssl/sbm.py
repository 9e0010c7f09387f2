"""Planted-partition (stochastic block model) graphs and label sampling.

All randomness comes from ``numpy.random.default_rng(seed)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import EmptyClassSample
from .hypergraph import Layer, MultilayerHypergraph


@dataclass(frozen=True)
class SbmSpec:
    block_sizes: tuple[int, ...]
    p_in: float
    p_out: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "block_sizes", tuple(int(b) for b in self.block_sizes))
        if not self.block_sizes or any(b < 1 for b in self.block_sizes):
            raise ValueError("block sizes must be positive")
        for name in ("p_in", "p_out"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def n(self) -> int:
        return sum(self.block_sizes)


def block_labels(block_sizes: Sequence[int]) -> np.ndarray:
    return np.repeat(np.arange(len(block_sizes)), block_sizes)


def sample_edges(spec: SbmSpec) -> np.ndarray:
    """Sample each unordered pair once; returns a (k, 2) array with ``u < v``."""
    labels = block_labels(spec.block_sizes)
    u, v = np.triu_indices(spec.n, k=1)
    prob = np.where(labels[u] == labels[v], spec.p_in, spec.p_out)
    keep = np.random.default_rng(spec.seed).random(u.size) < prob
    return np.column_stack([u[keep], v[keep]])


def generate_sbm(spec: SbmSpec) -> tuple[MultilayerHypergraph, np.ndarray]:
    """Single-layer graph with unit-weight 2-node hyperedges, plus block labels."""
    edges = sample_edges(spec)
    layer = Layer(tuple((1.0, (int(a), int(b))) for a, b in edges))
    return MultilayerHypergraph(spec.n, (layer,)), block_labels(spec.block_sizes)


def per_class_count(perc, size: int) -> int:
    """``floor(perc% * size)`` computed exactly (``perc`` in percent)."""
    return int(Fraction(str(perc)) * size // 100)


def sample_observed(ground_truth, perc, seed: int) -> np.ndarray:
    """Sample ``floor(perc% * |class|)`` nodes per class without replacement.

    Returns the sorted observed node ids.
    """
    gt = np.asarray(ground_truth)
    rng = np.random.default_rng(seed)
    picked = []
    for c in np.unique(gt[gt >= 0]):
        members = np.flatnonzero(gt == c)
        k = per_class_count(perc, members.size)
        if k == 0:
            raise EmptyClassSample(f"{perc}% of class {c} (size {members.size}) rounds down to 0 nodes")
        picked.append(rng.choice(members, size=k, replace=False))
    return np.sort(np.concatenate(picked))
