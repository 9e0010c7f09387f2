"""Gradient descent and coordinate descent solvers with flop accounting.

A *flop* is one node coordinate moved across all classes. Gradient descent
moves every node per iteration and so costs ``n`` flops; the coordinate
methods (cyclic, random, greedy) cost one flop per iteration.

Coordinate methods keep a :class:`ScoreState` whose caches (scaled
differences, gradient, objective, assignment, greedy heaps) are patched
locally after each move, touching only the moved node's incident edges.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, Undefined
from .heap import LazyMaxHeap
from .objective import (
    Problem,
    coordinate_lipschitz,
    delta_objective,
    evaluate,
    global_stepsize,
    gradient,
    phi_p,
)

logger = logging.getLogger(__name__)

METHODS = ("gd", "ccd", "rcd", "gcd")

# step halvings tried when a move would increase the objective (p != 2)
MAX_HALVINGS = 20


def assign_labels(Z) -> np.ndarray:
    """Per-row argmax; ``np.argmax`` already returns the lowest index on ties."""
    return np.argmax(np.asarray(Z), axis=1)


def accuracy(assignment, ground_truth, observed) -> float:
    """Fraction of unobserved nodes whose assigned class matches the ground truth."""
    assignment = np.asarray(assignment)
    mask = np.ones(len(assignment), dtype=bool)
    mask[np.asarray(observed, dtype=np.int64)] = False
    if not mask.any():
        raise Undefined("every node is observed; accuracy on unlabeled nodes is undefined")
    return float(np.mean(assignment[mask] == np.asarray(ground_truth)[mask]))


def default_stride(n: int) -> int:
    return max(1, math.ceil(n / 100))


class ScoreState:
    """Iterate ``Z`` together with the caches the coordinate methods patch.

    Attributes
    ----------
    Z : (n, m) scores
    U : list of (|E_l|, m) scaled differences ``B_l D_l^{-1/2} Z``
    G : (n, m) gradient
    theta : running objective value
    assignment : per-node argmax class
    correct : number of correctly assigned evaluation nodes
    heaps : per-class :class:`LazyMaxHeap` keyed by ``|G[:, j]|`` or None
    flops : flop counter (advanced by the solvers, not by updates)
    """

    def __init__(self, problem: Problem, Z0, heaps: bool = False):
        Z0 = np.array(Z0, dtype=float)
        if Z0.shape != (problem.n, problem.m):
            raise DimensionError(f"Z0 has shape {Z0.shape}, expected {(problem.n, problem.m)}")
        self.problem = problem
        labels = problem.labels
        self._eval_mask = np.zeros(problem.n, dtype=bool)
        self._eval_mask[labels.unlabeled] = True
        self._eval_mask &= labels.ground_truth >= 0
        self.num_eval = int(self._eval_mask.sum())
        self.flops = 0
        self.use_heaps = heaps
        self.reset(Z0)

    def reset(self, Z) -> None:
        """Recompute every cache from scratch at ``Z``."""
        problem = self.problem
        self.Z = np.array(Z, dtype=float)
        self.U = problem.scaled_differences(self.Z)
        self.G = gradient(problem, self.Z)
        self.theta = evaluate(problem, self.Z)
        self.assignment = assign_labels(self.Z)
        gt = problem.labels.ground_truth
        self.correct = int(np.sum((self.assignment == gt) & self._eval_mask))
        self.heaps = [LazyMaxHeap(np.abs(self.G[:, j])) for j in range(problem.m)] if self.use_heaps else None

    @property
    def accuracy(self) -> float:
        return self.correct / self.num_eval if self.num_eval else float("nan")

    def move(self, i: int, cols, steps) -> None:
        """Add ``steps`` to ``Z[i, cols]`` and patch every cache."""
        problem = self.problem
        p = problem.p
        cols = np.atleast_1d(np.asarray(cols, dtype=np.int64))
        steps = np.atleast_1d(np.asarray(steps, dtype=float))
        self.theta += float(np.sum(delta_objective(problem, self, i, cols, steps)))
        Z, G = self.Z, self.G
        Z[i, cols] += steps
        G[i, cols] += 2.0 * steps
        touched = [np.array([i])]
        for lam, layer, U in zip(problem.lambdas, problem.layers, self.U):
            lo, hi = layer.indptr[i], layer.indptr[i + 1]
            if lo == hi:
                continue
            e = layer.inc_edge[lo:hi]
            isd = layer.inv_sqrt_degrees
            src, dst = layer.src[e], layer.dst[e]
            rows = e[:, None]
            old = U[rows, cols]
            new = Z[src[:, None], cols] * isd[src, None] - Z[dst[:, None], cols] * isd[dst, None]
            U[rows, cols] = new
            if not lam:
                continue
            dphi = (phi_p(new, p) - phi_p(old, p)) * ((p * lam) * layer.weights[e])[:, None]
            sign = layer.inc_sign[lo:hi]
            G[i, cols] += isd[i] * (sign @ dphi)
            nbr = layer.inc_nbr[lo:hi]
            # neighbours are distinct within a layer, so fancy -= is safe
            G[nbr[:, None], cols] -= (sign * isd[nbr])[:, None] * dphi
            touched.append(nbr)
        row = int(np.argmax(Z[i]))
        if row != self.assignment[i]:
            if self._eval_mask[i]:
                truth = problem.labels.ground_truth[i]
                self.correct += int(row == truth) - int(self.assignment[i] == truth)
            self.assignment[i] = row
        if self.heaps is not None:
            nodes = np.unique(np.concatenate(touched)) if len(touched) > 2 else np.concatenate(touched)
            keys = np.abs(G[nodes[:, None], cols])
            node_list = nodes.tolist()
            for c, j in enumerate(cols.tolist()):
                self.heaps[j].update_many(node_list, keys[:, c].tolist())

    def check(self, rtol: float = 1e-8) -> dict[str, float]:
        """Discrepancies between the caches and a fresh recomputation."""
        problem = self.problem
        fresh_U = problem.scaled_differences(self.Z)
        fresh_G = gradient(problem, self.Z)
        fresh_theta = evaluate(problem, self.Z)
        out = {
            "U": max([float(np.max(np.abs(a - b))) for a, b in zip(self.U, fresh_U) if a.size] + [0.0]),
            "G": float(np.max(np.abs(self.G - fresh_G))),
            "theta": abs(self.theta - fresh_theta) / max(1.0, abs(fresh_theta)),
            "assignment": float(np.sum(self.assignment != assign_labels(self.Z))),
        }
        if self.heaps is not None:
            worst = 0.0
            for j, heap in enumerate(self.heaps):
                _, key = heap.top()
                worst = max(worst, abs(key - float(np.max(np.abs(self.G[:, j])))))
            out["heap"] = worst
        return out


def init_state(problem: Problem, Z0=None, heaps: bool = False) -> ScoreState:
    if Z0 is None:
        Z0 = np.zeros((problem.n, problem.m))
    return ScoreState(problem, Z0, heaps=heaps)


def apply_coordinate_update(state: ScoreState, i: int, j, alpha) -> ScoreState:
    """Move ``Z[i, j]`` by ``-alpha * G[i, j]``; ``j``/``alpha`` may be arrays."""
    cols = np.atleast_1d(np.asarray(j, dtype=np.int64))
    steps = -np.asarray(alpha, dtype=float) * state.G[i, cols]
    if np.any(steps != 0):
        state.move(i, cols, steps)
    return state


def _safeguarded_steps(state: ScoreState, i: int, cols, steps) -> np.ndarray:
    """Halve any step that would increase the objective; zero it after too many halvings."""
    steps = np.array(steps, dtype=float)
    pending = np.flatnonzero(steps)
    for _ in range(MAX_HALVINGS + 1):
        if pending.size == 0:
            return steps
        d = delta_objective(state.problem, state, i, cols[pending], steps[pending])
        pending = pending[np.atleast_1d(d) > 0]
        steps[pending] *= 0.5
    steps[pending] = 0.0
    return steps


@dataclass
class Checkpoint:
    flops: int
    normalized_flops: float
    objective: float
    accuracy: float


@dataclass
class SolverTrace:
    method: str
    p: float
    n: int
    seed: int | None = None
    stepsize: float | None = None
    checkpoints: list[Checkpoint] = field(default_factory=list)
    assignment: np.ndarray | None = None
    Z: np.ndarray | None = None
    converged: bool = False
    failure: bool = False

    def record(self, state_flops: int, objective: float, acc: float) -> None:
        self.checkpoints.append(Checkpoint(int(state_flops), state_flops / self.n, float(objective), float(acc)))

    @property
    def flops(self) -> np.ndarray:
        return np.array([c.flops for c in self.checkpoints])

    @property
    def normalized_flops(self) -> np.ndarray:
        return np.array([c.normalized_flops for c in self.checkpoints])

    @property
    def objectives(self) -> np.ndarray:
        return np.array([c.objective for c in self.checkpoints])

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([c.accuracy for c in self.checkpoints])


class _Recorder:
    def __init__(self, trace: SolverTrace, stride: int):
        self.trace = trace
        self.stride = max(1, int(stride))
        self.last = None

    def __call__(self, state: ScoreState, force: bool = False) -> None:
        if self.last is not None and state.flops == self.last:
            return
        if force or self.last is None or state.flops - self.last >= self.stride:
            self.trace.record(state.flops, state.theta, state.accuracy)
            self.last = state.flops

    def finish(self, state: ScoreState, converged: bool) -> SolverTrace:
        self(state, force=True)
        self.trace.assignment = state.assignment.copy()
        self.trace.Z = state.Z.copy()
        self.trace.converged = converged
        return self.trace


def _coordinate_steps(problem: Problem, stepsize: float | None, state: ScoreState) -> np.ndarray:
    """Per-node stepsizes: ``1/L_i`` for p = 2, the global bound otherwise."""
    if stepsize is not None:
        return np.full(problem.n, float(stepsize))
    if problem.p == 2:
        return np.array([1.0 / coordinate_lipschitz(problem, i) for i in range(problem.n)])
    return np.full(problem.n, global_stepsize(problem, state))


def run_gd(
    problem: Problem,
    budget_flops: int,
    checkpoint_stride: int | None = None,
    *,
    Z0=None,
    stepsize: float | None = None,
    tol: float | None = None,
) -> SolverTrace:
    """Full gradient steps ``Z <- Z - alpha grad(Z)``; each costs ``n`` flops.

    With ``tol`` set, iterate until ``max|grad| <= tol`` and ignore the budget.
    """
    n = problem.n
    state = init_state(problem, Z0)
    alpha = global_stepsize(problem, state) if stepsize is None else float(stepsize)
    stride = default_stride(n) if checkpoint_stride is None else checkpoint_stride
    rec = _Recorder(SolverTrace("gd", problem.p, n, stepsize=alpha), stride)
    rec(state)
    converged = tol is not None and np.max(np.abs(state.G)) <= tol
    while not converged and (tol is not None or state.flops + n <= budget_flops):
        step = alpha
        Z = state.Z - step * state.G
        if problem.p != 2:
            for _ in range(MAX_HALVINGS):
                if evaluate(problem, Z) <= state.theta:
                    break
                step *= 0.5
                Z = state.Z - step * state.G
            else:
                Z = state.Z
        state.reset(Z)
        state.flops += n
        rec(state)
        converged = tol is not None and np.max(np.abs(state.G)) <= tol
    return rec.finish(state, bool(converged))


def _run_shared_index(problem, method, budget_flops, stride, seed, Z0, stepsize, tol, next_index):
    n, m = problem.n, problem.m
    state = init_state(problem, Z0)
    alphas = _coordinate_steps(problem, stepsize, state)
    stride = default_stride(n) if stride is None else stride
    rec = _Recorder(SolverTrace(method, problem.p, n, seed=seed, stepsize=float(alphas.max())), stride)
    rec(state)
    cols = np.arange(m)
    converged = tol is not None and np.max(np.abs(state.G)) <= tol
    while not converged and (tol is not None or state.flops < budget_flops):
        i = next_index()
        steps = -alphas[i] * state.G[i]
        if problem.p != 2:
            steps = _safeguarded_steps(state, i, cols, steps)
        if np.any(steps != 0):
            state.move(i, cols, steps)
        state.flops += 1
        rec(state)
        if tol is not None and state.flops % n == 0:
            converged = np.max(np.abs(state.G)) <= tol
    return rec.finish(state, bool(converged))


def cyclic_indices(rng: np.random.Generator, n: int, shuffle: bool = True):
    """Endless node stream: passes over ``0..n-1``, each pass in a fresh random order."""
    while True:
        yield from rng.permutation(n).tolist() if shuffle else range(n)


def uniform_indices(rng: np.random.Generator, n: int, chunk: int = 1024):
    """Endless stream of i.i.d. uniform node ids."""
    while True:
        yield from rng.integers(0, n, size=chunk).tolist()


def run_ccd(
    problem: Problem,
    budget_flops: int,
    seed: int,
    checkpoint_stride: int | None = None,
    *,
    Z0=None,
    stepsize: float | None = None,
    tol: float | None = None,
    shuffle: bool = True,
) -> SolverTrace:
    """Cyclic coordinate descent; the node order is reshuffled before every pass."""
    stream = cyclic_indices(np.random.default_rng(seed), problem.n, shuffle)
    return _run_shared_index(
        problem, "ccd", budget_flops, checkpoint_stride, seed, Z0, stepsize, tol, stream.__next__
    )


def run_rcd(
    problem: Problem,
    budget_flops: int,
    seed: int,
    checkpoint_stride: int | None = None,
    *,
    Z0=None,
    stepsize: float | None = None,
    tol: float | None = None,
) -> SolverTrace:
    """Random coordinate descent with i.i.d. uniform node selection."""
    stream = uniform_indices(np.random.default_rng(seed), problem.n)
    return _run_shared_index(
        problem, "rcd", budget_flops, checkpoint_stride, seed, Z0, stepsize, tol, stream.__next__
    )


def run_gcd(
    problem: Problem,
    budget_flops: int,
    checkpoint_stride: int | None = None,
    *,
    Z0=None,
    stepsize: float | None = None,
    tol: float | None = None,
    on_select=None,
) -> SolverTrace:
    """Greedy (Gauss-Southwell) coordinate descent.

    Every flop picks, for each class separately, the node with the largest
    ``|G[:, j]|`` (lowest id on ties) and moves it. ``on_select(state, picks)``
    is called with the per-class picks before they are applied.
    """
    n, m = problem.n, problem.m
    state = init_state(problem, Z0, heaps=True)
    alphas = _coordinate_steps(problem, stepsize, state)
    stride = default_stride(n) if checkpoint_stride is None else checkpoint_stride
    rec = _Recorder(SolverTrace("gcd", problem.p, n, stepsize=float(alphas.max())), stride)
    rec(state)

    def tops():
        return [state.heaps[j].top() for j in range(m)]

    picks = tops()
    converged = tol is not None and max(k for _, k in picks) <= tol
    while not converged and (tol is not None or state.flops < budget_flops):
        if on_select is not None:
            on_select(state, [i for i, _ in picks])
        for j, (i, _) in enumerate(picks):
            step = -alphas[i] * state.G[i, j]
            if problem.p != 2:
                step = _safeguarded_steps(state, i, np.array([j]), [step])[0]
            if step != 0:
                state.move(i, [j], [step])
        state.flops += 1
        rec(state)
        picks = tops()
        converged = tol is not None and max(k for _, k in picks) <= tol
    return rec.finish(state, bool(converged))


def solve(problem: Problem, method: str, budget_flops: int, seed: int | None = None, **kwargs) -> SolverTrace:
    """Dispatch to one of :data:`METHODS`."""
    if method == "gd":
        trace = run_gd(problem, budget_flops, **kwargs)
    elif method == "ccd":
        trace = run_ccd(problem, budget_flops, seed, **kwargs)
    elif method == "rcd":
        trace = run_rcd(problem, budget_flops, seed, **kwargs)
    elif method == "gcd":
        trace = run_gcd(problem, budget_flops, **kwargs)
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    trace.seed = seed
    return trace
