"""Semi-supervised node classification on multilayer hypergraphs.

Scores minimize a squared label-fidelity term plus per-layer p-Laplacian
smoothness penalties over clique-expanded hypergraph layers. Gradient
descent and cyclic/random/greedy coordinate descent are provided with flop
accounting for benchmarking.
"""

__version__ = "0.1.0"

from .hypergraph import CliqueLayer, Layer, MultilayerHypergraph, build_layer, clique_expand, isolated_nodes
from .objective import (
    LabelData,
    Problem,
    build_label_matrix,
    coordinate_gradient,
    coordinate_lipschitz,
    delta_objective,
    evaluate,
    global_stepsize,
    gradient,
    phi_p,
)
from .solvers import (
    ScoreState,
    SolverTrace,
    accuracy,
    apply_coordinate_update,
    assign_labels,
    init_state,
    run_ccd,
    run_gcd,
    run_gd,
    run_rcd,
    solve,
)
