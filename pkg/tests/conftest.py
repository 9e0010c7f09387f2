import numpy as np
import pytest

from hyperssl import MultilayerHypergraph, Problem, build_label_matrix, build_layer, evaluate


def random_hypergraph(rng, n, L, n_edges=None, max_size=5):
    layers = []
    for _ in range(L):
        k = n_edges if n_edges is not None else int(rng.integers(n, 3 * n))
        raw = []
        for _ in range(k):
            size = int(rng.integers(2, max_size + 1))
            raw.append((float(rng.uniform(0.5, 2.0)), rng.choice(n, size=min(size, n), replace=False).tolist()))
        layers.append(build_layer(raw, n))
    return MultilayerHypergraph(n, tuple(layers))


def random_problem(rng, n=20, L=2, m=3, p=2.0, n_obs=None, lambdas=None, n_edges=None):
    hg = random_hypergraph(rng, n, L, n_edges=n_edges)
    gt = rng.integers(0, m, size=n)
    gt[:m] = np.arange(m)  # every class present
    n_obs = n_obs if n_obs is not None else max(m, n // 4)
    observed = rng.choice(n, size=n_obs, replace=False)
    if lambdas is None:
        lambdas = rng.uniform(0.5, 1.5, size=L)
    return Problem(hg, build_label_matrix(gt, observed, m, n), p=p, lambdas=lambdas)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def two_node():
    """Single edge {0,1} of hyperedge weight 2 (clique weight 1, degrees 1, 1); node 0 observed."""
    hg = MultilayerHypergraph(2, (build_layer([(2.0, [0, 1])], 2),))
    return Problem(hg, build_label_matrix([0, 0], [0], 1, 2), p=2.0, lambdas=[1.0])


def dense_normalized_laplacian(layer, n):
    """I - D^{-1/2} A D^{-1/2} from the hyperedge list, zero rows/cols at isolated nodes."""
    A = np.zeros((n, n))
    for w, nodes in layer.hyperedges:
        for a in nodes:
            for b in nodes:
                if a != b:
                    A[a, b] += w / len(nodes)
    deg = A.sum(axis=1)
    s = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    return np.diag((deg > 0).astype(float)) - s[:, None] * A * s[None, :]


def direct_solution(problem):
    """Solve (I + sum_l lambda_l Lbar_l) Z = Y densely (the p = 2 optimality condition)."""
    M = np.eye(problem.n)
    for lam, layer in zip(problem.lambdas, problem.hypergraph.layers):
        M += lam * dense_normalized_laplacian(layer, problem.n)
    return np.linalg.solve(M, problem.Y)


def brute_force_pick(G_col, rtol=1e-12):
    """Lowest node id among entries whose |G| is within rtol of the maximum."""
    a = np.abs(G_col)
    top = a.max()
    return int(np.flatnonzero(a >= top - rtol * max(top, 1e-300))[0])


def fd_gradient(problem, Z):
    G = np.zeros_like(Z)
    for i in range(Z.shape[0]):
        for j in range(Z.shape[1]):
            h = 1e-6 * (1 + abs(Z[i, j]))
            Zp, Zm = Z.copy(), Z.copy()
            Zp[i, j] += h
            Zm[i, j] -= h
            G[i, j] = (evaluate(problem, Zp) - evaluate(problem, Zm)) / (2 * h)
    return G


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, passed, detail)``; printed in the terminal summary."""
    results = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(criterion, passed, detail=""):
        results[criterion] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(results):
        passed, detail = results[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
