"""Label matrix and the regularized multilayer objective.

For scores ``Z`` (n x m) the objective is

    theta(Z) = ||Z - Y||^2 + sum_l lambda_l sum_{(u,v)} w_uv |Z_u/sqrt(d_u) - Z_v/sqrt(d_v)|^p

with one term per unordered clique edge of each layer. Nodes with zero degree
in a layer get a zero scale factor there, so they only feel the fidelity term.

Functions that take a ``cache`` only read ``cache.Z`` and ``cache.U``, the
per-layer scaled differences ``U_l = B_l D_l^{-1/2} Z`` kept by the solvers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DimensionError, EmptyObservation, MissingLabel, WrongMode
from .hypergraph import CliqueLayer, MultilayerHypergraph

UNKNOWN = -1

# floor applied to the level-set bound inside M**(p-2) when p < 2
LEVEL_SET_FLOOR = 1e-3


@dataclass(frozen=True, eq=False)
class LabelData:
    """Ground truth, observed node set and the derived label matrix ``Y``.

    ``ground_truth`` uses ``-1`` for nodes whose class is unknown.
    """

    m: int
    ground_truth: np.ndarray
    observed: np.ndarray
    Y: np.ndarray

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @cached_property
    def unlabeled(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.observed] = False
        return np.flatnonzero(mask)


def build_label_matrix(ground_truth, observed, m: int, n: int) -> LabelData:
    """Build ``Y`` with ``Y[u, j] = 1/|C_j ∩ O|`` for observed ``u`` of class ``j``.

    Examples
    --------
    >>> build_label_matrix([0, 0, 1], [0, 1], m=2, n=3).Y
    array([[0.5, 0. ],
           [0.5, 0. ],
           [0. , 0. ]])
    """
    gt = np.full(n, UNKNOWN, dtype=np.int64)
    given = np.asarray(ground_truth, dtype=np.int64)
    if given.shape != (n,):
        raise DimensionError(f"ground truth has shape {given.shape}, expected ({n},)")
    gt[:] = given
    obs = np.unique(np.asarray(observed, dtype=np.int64))
    if obs.size == 0:
        raise EmptyObservation("observed set is empty")
    if obs[0] < 0 or obs[-1] >= n:
        raise MissingLabel(f"observed node outside [0, {n})")
    cls = gt[obs]
    bad = obs[(cls < 0) | (cls >= m)]
    if bad.size:
        raise MissingLabel(f"observed node {int(bad[0])} has no class in [0, {m})")
    counts = np.bincount(cls, minlength=m)
    Y = np.zeros((n, m))
    Y[obs, cls] = 1.0 / counts[cls]
    return LabelData(m=m, ground_truth=gt, observed=obs, Y=Y)


def phi_p(y, p: float):
    """``|y|**(p-1) * sign(y)``, elementwise. ``phi_p(0) = 0``."""
    y = np.asarray(y, dtype=float)
    if p == 2:
        return y.copy() if y.ndim else float(y)
    out = np.abs(y) ** (p - 1) * np.sign(y)
    return out if out.ndim else float(out)


def _abs_pow(x: np.ndarray, p: float) -> np.ndarray:
    return x * x if p == 2 else np.abs(x) ** p


@dataclass(frozen=True, eq=False)
class Problem:
    hypergraph: MultilayerHypergraph
    labels: LabelData
    p: float = 2.0
    lambdas: Sequence[float] | None = None

    def __post_init__(self):
        L = self.hypergraph.num_layers
        lam = np.ones(L) if self.lambdas is None else np.asarray(self.lambdas, dtype=float)
        if lam.shape != (L,):
            raise DimensionError(f"expected {L} lambdas, got {lam.size}")
        if np.any(lam < 0):
            raise ValueError("lambdas must be nonnegative")
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.labels.n != self.hypergraph.n:
            raise DimensionError("labels and hypergraph disagree on the node count")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "p", float(self.p))

    @property
    def n(self) -> int:
        return self.hypergraph.n

    @property
    def m(self) -> int:
        return self.labels.m

    @property
    def Y(self) -> np.ndarray:
        return self.labels.Y

    @property
    def layers(self) -> tuple[CliqueLayer, ...]:
        return self.hypergraph.clique_layers

    def scaled_differences(self, Z) -> list[np.ndarray]:
        return [layer.scaled_incidence @ Z for layer in self.layers]


def _check_shape(problem: Problem, Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.shape != (problem.n, problem.m):
        raise DimensionError(f"Z has shape {Z.shape}, expected {(problem.n, problem.m)}")
    return Z


def regularizer(problem: Problem, Z) -> float:
    Z = _check_shape(problem, Z)
    total = 0.0
    for lam, layer, U in zip(problem.lambdas, problem.layers, problem.scaled_differences(Z)):
        if lam:
            total += lam * float(np.sum(layer.weights[:, None] * _abs_pow(U, problem.p)))
    return total


def evaluate(problem: Problem, Z) -> float:
    Z = _check_shape(problem, Z)
    return float(np.sum((Z - problem.Y) ** 2)) + regularizer(problem, Z)


def regularizer_gradient(problem: Problem, Z) -> np.ndarray:
    Z = _check_shape(problem, Z)
    p = problem.p
    G = np.zeros_like(Z)
    for lam, layer, U in zip(problem.lambdas, problem.layers, problem.scaled_differences(Z)):
        if lam:
            G += (p * lam) * (layer.scaled_incidence.T @ (layer.weights[:, None] * phi_p(U, p)))
    return G


def gradient(problem: Problem, Z) -> np.ndarray:
    Z = _check_shape(problem, Z)
    return 2.0 * (Z - problem.Y) + regularizer_gradient(problem, Z)


def _check_index(problem: Problem, i, j=None):
    if not 0 <= i < problem.n:
        raise IndexError(f"node {i} outside [0, {problem.n})")
    if j is not None and np.any((np.asarray(j) < 0) | (np.asarray(j) >= problem.m)):
        raise IndexError(f"class {j} outside [0, {problem.m})")


def coordinate_gradient(problem: Problem, cache, i: int, j):
    """Gradient entries ``(i, j)`` from the cached scaled differences.

    ``j`` may be an int or an array of class ids.
    """
    _check_index(problem, i, j)
    p = problem.p
    g = 2.0 * (cache.Z[i, j] - problem.Y[i, j])
    for lam, layer, U in zip(problem.lambdas, problem.layers, cache.U):
        lo, hi = layer.indptr[i], layer.indptr[i + 1]
        if not lam or lo == hi:
            continue
        e = layer.inc_edge[lo:hi]
        coef = layer.inc_sign[lo:hi] * layer.weights[e]
        g = g + (p * lam * layer.inv_sqrt_degrees[i]) * (coef @ phi_p(U[e][:, j], p))
    return g


def delta_objective(problem: Problem, cache, i: int, j, s):
    """``theta(Z + s e_ij) - theta(Z)`` from row ``i``'s incident edges only.

    Vectorizes over ``j``/``s`` when both are arrays of the same length.
    """
    _check_index(problem, i, j)
    p = problem.p
    d = cache.Z[i, j] - problem.Y[i, j]
    delta = s * (2.0 * d + s)
    for lam, layer, U in zip(problem.lambdas, problem.layers, cache.U):
        lo, hi = layer.indptr[i], layer.indptr[i + 1]
        if not lam or lo == hi:
            continue
        e = layer.inc_edge[lo:hi]
        old = U[e][:, j]
        shift = np.multiply.outer(layer.inc_sign[lo:hi] * layer.inv_sqrt_degrees[i], s)
        change = _abs_pow(old + shift, p) - _abs_pow(old, p)
        delta = delta + lam * (layer.weights[e] @ change)
    return delta


def coordinate_lipschitz(problem: Problem, i: int) -> float:
    """Diagonal Hessian entry ``2 + 2 sum_l lambda_l [d_l(i) > 0]`` (p = 2 only)."""
    if problem.p != 2:
        raise WrongMode(f"coordinate Lipschitz constants are defined for p = 2, got p = {problem.p}")
    _check_index(problem, i)
    active = np.array([layer.degrees[i] > 0 for layer in problem.layers])
    return 2.0 + 2.0 * float(np.sum(problem.lambdas[active]))


def level_set_bound(problem: Problem, state=None) -> float:
    """``M = max(1, max |U_l|)`` over the given state's scaled differences."""
    if state is None:
        return 1.0
    peaks = [float(np.max(np.abs(U))) for U in state.U if U.size]
    return max([1.0] + peaks)


def global_stepsize(problem: Problem, state=None) -> float:
    """Fixed stepsize ``1/L`` from an upper bound ``L`` on the Lipschitz constant.

    For p = 2 the bound is ``2 + 4 sum(lambda)`` (normalized Laplacian
    spectrum lies in [0, 2]). Otherwise
    ``2 + p|p-1| sum_l lambda_l * max_w_l * 2 max_incident_l * M**(p-2)``
    with ``M`` the level-set bound of ``state`` (floored for p < 2).
    """
    p = problem.p
    if p == 2:
        return 1.0 / (2.0 + 4.0 * float(np.sum(problem.lambdas)))
    M = level_set_bound(problem, state)
    if p < 2:
        M = max(M, LEVEL_SET_FLOOR)
    scale = M ** (p - 2)
    bound = 2.0
    for lam, layer in zip(problem.lambdas, problem.layers):
        if layer.num_edges == 0:
            continue
        w_max = float(layer.weights.max())
        d_max = float(np.diff(layer.indptr).max())
        bound += p * abs(p - 1) * lam * w_max * d_max * 2.0 * scale
    return 1.0 / bound

