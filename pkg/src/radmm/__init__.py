"""Partition-based relaxed ADMM over lossy networks.

A simulator for multi-agent convex optimization where each node's cost
couples its own variable with its graph neighbors'. Nodes run synchronous
rounds of closed-form local minimization plus two-vector message exchange,
tolerate i.i.d. packet loss, and can be cross-checked against a centralized
stacked-vector reference of the same scheme.
"""

from .core import (
    DIVERGENCE_NORM,
    AlgorithmParams,
    Message,
    NodeState,
    QuadraticLocalSolver,
    RunTrace,
    SingularLocalSystemError,
    apply_message,
    compute_messages,
    consensus_residual,
    initial_states,
    local_x_update,
    make_local_solver,
    relative_error,
    run,
    sync_round,
    trace_to_csv,
)
from .graph import (
    Graph,
    generate_connected_rgg,
    generate_rgg,
    graph_from_text,
    graph_to_text,
    is_connected,
    neighbors,
)
from .lossy import DeliveryMask, LossModel, LossSchedule, sample_mask
from .problem import (
    IndefiniteHessianError,
    PartitionProblem,
    QuadraticLocalCost,
    Solution,
    evaluate_local,
    generate_instance,
    global_cost,
    problem_from_json,
    problem_to_json,
    solve_centralized,
)
from .reference import (
    ConstraintMatrices,
    ReferenceState,
    build_constraint_matrices,
    check_equivalence,
    node_states_from_stacked_z,
    reference_initial_state,
    reference_step,
)
from .experiments import (
    MonteCarloTrace,
    SweepResult,
    detect_convergence,
    monte_carlo,
    monte_carlo_to_csv,
    stability_sweep,
    sweep_to_csv,
)

__version__ = "0.1.0"
