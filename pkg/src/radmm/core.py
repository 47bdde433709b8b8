"""Node-local relaxed ADMM on partitioned problems, in synchronous rounds.

Every round has three barrier-separated phases, in this order:

1. each node minimizes its local cost plus the linear and quadratic coupling
   terms built from its stored auxiliary variables (the x-update),
2. each node computes, per neighbor, the pair of temporary vectors
   q = -z + 2*rho*x and transmits them (the message phase),
3. each node relaxes its stored auxiliary variables toward the received
   q-vectors, z <- (1-alpha)*z + alpha*q, skipping edges whose packet was
   lost this round (the gated z-update).

Loss realizations are pre-drawn by the schedule, never inside the round, so a
sequential sweep over nodes is bitwise identical to any concurrent execution.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .graph import Graph
from .lossy import DeliveryMask, LossSchedule, sample_mask
from .problem import PartitionProblem, QuadraticLocalCost, Solution

DIVERGENCE_NORM = 1e8
_Z_CHECK_EVERY = 64


class SingularLocalSystemError(ValueError):
    """The node-local subproblem has no unique minimizer.

    With a positive penalty this can only happen on an isolated node whose
    own cost is rank deficient.
    """


@dataclass(frozen=True)
class AlgorithmParams:
    """Step size and penalty of the relaxed scheme.

    rho must be positive. alpha in (0, 1) is the provably convergent region;
    values outside it are accepted (stability sweeps probe them) and are
    reported by `guaranteed_convergent`.
    """

    alpha: float
    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")

    @property
    def guaranteed_convergent(self) -> bool:
        return 0.0 < self.alpha < 1.0


@dataclass
class NodeState:
    """What one node stores: 3*deg + 1 vectors.

    x_self is the node's own iterate, x_neigh its local copies of each
    neighbor's variable. z_in_self[j] is the auxiliary vector about the
    node's own variable attached to the edge from j, z_in_neigh[j] the one
    about neighbor j's variable on that same edge.
    """

    x_self: np.ndarray
    x_neigh: dict[int, np.ndarray]
    z_in_self: dict[int, np.ndarray]
    z_in_neigh: dict[int, np.ndarray]

    def __post_init__(self):
        if not (self.x_neigh.keys() == self.z_in_self.keys() == self.z_in_neigh.keys()):
            raise ValueError("x_neigh, z_in_self and z_in_neigh must share one neighbor set")

    def neighbor_order(self) -> list[int]:
        return sorted(self.x_neigh)

    def stacked_x(self) -> np.ndarray:
        """[x_self; x_neigh[j] for j ascending], the node's full local iterate."""
        return np.concatenate([self.x_self] + [self.x_neigh[j] for j in sorted(self.x_neigh)])


@dataclass(frozen=True)
class Message:
    """The two vectors one node sends a neighbor each round.

    q_about_sender updates the receiver's copy about the sender's variable,
    q_about_receiver the receiver's own-variable auxiliary.
    """

    sender: int
    receiver: int
    q_about_sender: np.ndarray
    q_about_receiver: np.ndarray


class QuadraticLocalSolver:
    """Closed-form minimizer of the per-round node objective for quadratic costs.

    Minimizes f(v) - linear' v + (rho/2) v' D v over the stacked local vector
    v = [x_self; x_neigh...], where D weights the own-variable block by the
    node degree and each neighbor block by one. The system matrix is constant
    across rounds, so it is factored once here and each round costs a single
    matrix-vector product.

    Any object with the same `minimize`/`neighbor_order`/`dim` surface can
    stand in for non-quadratic local costs.
    """

    def __init__(self, cost: QuadraticLocalCost, rho: float):
        n = cost.dim
        order = cost.neighbor_order()
        deg = len(order)
        m = cost.stacked_map()
        d = np.ones(n * (deg + 1))
        d[:n] = deg
        system = 2.0 * (m.T @ cost.q @ m) + rho * np.diag(d)
        try:
            np.linalg.cholesky(system)
        except np.linalg.LinAlgError as exc:
            raise SingularLocalSystemError(
                "local subproblem is singular (isolated node with rank-deficient cost?)"
            ) from exc
        self._inv = np.linalg.inv(system)
        self._base = 2.0 * (m.T @ (cost.q @ cost.b))
        self.neighbor_order = order
        self.dim = n

    def minimize(self, linear: np.ndarray) -> np.ndarray:
        return self._inv @ (self._base + linear)


def make_local_solver(cost, params: AlgorithmParams):
    """Solver for one node's per-round subproblem.

    QuadraticLocalCost gets the closed form; other cost handles may supply
    their own via a `make_solver(params)` method.
    """
    if isinstance(cost, QuadraticLocalCost):
        return QuadraticLocalSolver(cost, params.rho)
    if hasattr(cost, "make_solver"):
        return cost.make_solver(params)
    raise TypeError(f"no local solver for cost of type {type(cost).__name__}")


def _stacked_linear(state: NodeState, order: list[int], n: int) -> np.ndarray:
    """Linear coefficients of the x-update: [sum_j z_in_self[j]; z_in_neigh[j]...]."""
    out = np.zeros(n * (len(order) + 1))
    head = out[:n]
    for j in order:
        head += state.z_in_self[j]
    for t, j in enumerate(order):
        out[n * (t + 1) : n * (t + 2)] = state.z_in_neigh[j]
    return out


def local_x_update(
    cost, state: NodeState, params: AlgorithmParams, solver=None
) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """One node's x-update: the unique minimizer of its round objective.

    Returns the new (x_self, x_neigh); the stored z variables are read only.
    Passing a prebuilt solver skips refactoring the constant system matrix.
    """
    if solver is None:
        solver = make_local_solver(cost, params)
    order = solver.neighbor_order
    n = solver.dim
    v = solver.minimize(_stacked_linear(state, order, n))
    x_self = v[:n]
    x_neigh = {j: v[n * (t + 1) : n * (t + 2)] for t, j in enumerate(order)}
    return x_self, x_neigh


def compute_messages(state: NodeState, params: AlgorithmParams, i: int) -> list[Message]:
    """The q-vector pairs node i sends this round, one message per neighbor."""
    two_rho = 2.0 * params.rho
    q_self_base = two_rho * state.x_self
    msgs = []
    for j in sorted(state.x_neigh):
        msgs.append(
            Message(
                sender=i,
                receiver=j,
                q_about_sender=q_self_base - state.z_in_self[j],
                q_about_receiver=two_rho * state.x_neigh[j] - state.z_in_neigh[j],
            )
        )
    return msgs


def apply_message(
    state: NodeState, m: Message, params: AlgorithmParams, delivered: bool
) -> NodeState:
    """Gated z-update at the receiving node.

    A delivered message relaxes the receiver's two auxiliary vectors for the
    sender's edge toward the received q values; a lost message leaves the
    state untouched. The caller is responsible for routing m to the state of
    node m.receiver.
    """
    j = m.sender
    if j not in state.z_in_self:
        raise ValueError(f"message from {j} does not match receiver's neighbor set")
    if not delivered:
        return state
    a = params.alpha
    keep = 1.0 - a
    z_self = dict(state.z_in_self)
    z_neigh = dict(state.z_in_neigh)
    z_self[j] = keep * z_self[j] + a * m.q_about_receiver
    z_neigh[j] = keep * z_neigh[j] + a * m.q_about_sender
    return replace(state, z_in_self=z_self, z_in_neigh=z_neigh)


def sync_round(
    states: list[NodeState],
    p: PartitionProblem,
    params: AlgorithmParams,
    delivery: DeliveryMask,
    solvers: list | None = None,
) -> list[NodeState]:
    """One synchronous round: all x-updates, then all messages, then all z-updates.

    Node i's result depends only on its own state and on messages from its
    neighbors. The input states are never mutated.
    """
    n_nodes = p.graph.node_count
    for e in p.graph.directed_edges():
        if e not in delivery.delivered:
            raise ValueError(f"delivery mask missing directed edge {e}")
    if solvers is None:
        solvers = [make_local_solver(c, params) for c in p.costs]

    mid = []
    for i, st in enumerate(states):
        x_self, x_neigh = local_x_update(p.costs[i], st, params, solver=solvers[i])
        mid.append(
            NodeState(
                x_self=x_self,
                x_neigh=x_neigh,
                z_in_self=st.z_in_self,
                z_in_neigh=st.z_in_neigh,
            )
        )

    inbox: list[list[Message]] = [[] for _ in range(n_nodes)]
    for i, st in enumerate(mid):
        for m in compute_messages(st, params, i):
            inbox[m.receiver].append(m)

    # batched form of apply_message: same relaxation, one state per node
    a = params.alpha
    keep = 1.0 - a
    out = []
    for i, st in enumerate(mid):
        delivered_msgs = [m for m in inbox[i] if delivery.delivered[(m.sender, i)]]
        if not delivered_msgs:
            out.append(st)
            continue
        z_self = dict(st.z_in_self)
        z_neigh = dict(st.z_in_neigh)
        for m in delivered_msgs:
            j = m.sender
            z_self[j] = keep * z_self[j] + a * m.q_about_receiver
            z_neigh[j] = keep * z_neigh[j] + a * m.q_about_sender
        out.append(replace(st, z_in_self=z_self, z_in_neigh=z_neigh))
    return out


def initial_states(p: PartitionProblem) -> list[NodeState]:
    """All-zero x and z, the canonical starting point."""
    n = p.dim
    states = []
    for cost in p.costs:
        order = cost.neighbor_order()
        states.append(
            NodeState(
                x_self=np.zeros(n),
                x_neigh={j: np.zeros(n) for j in order},
                z_in_self={j: np.zeros(n) for j in order},
                z_in_neigh={j: np.zeros(n) for j in order},
            )
        )
    return states


def relative_error(states: list[NodeState], sol: Solution) -> float:
    """Sum over nodes of ||local iterate - optimum block|| / ||optimum block||.

    The per-node block stacks the node's own optimum with its neighbors'
    (ascending), matching the layout of the node's local iterate. Raises on a
    zero-norm reference block, for which the ratio is undefined.
    """
    total = 0.0
    for i, st in enumerate(states):
        ref, nrm = sol.block_and_norm(i, tuple(sorted(st.x_neigh)))
        if nrm == 0.0:
            raise ValueError(f"optimum block of node {i} has zero norm")
        total += float(np.linalg.norm(st.stacked_x() - ref)) / nrm
    return total


def consensus_residual(states: list[NodeState], g: Graph) -> float:
    """Largest disagreement between a node's variable and any copy a neighbor holds."""
    worst = 0.0
    for i, j in g.directed_edges():
        d = float(np.linalg.norm(states[i].x_self - states[j].x_neigh[i]))
        if d > worst:
            worst = d
    return worst


@dataclass
class RunTrace:
    """Per-round record of one run.

    errors[t] is the relative error after round t+1 (None when no reference
    solution was supplied); diverged marks early termination on a non-finite
    or runaway state. snapshots, when recorded, hold each node's stacked
    local iterate per round.
    """

    errors: np.ndarray | None
    diverged: bool
    rounds_executed: int
    final_states: list[NodeState]
    snapshots: list[list[np.ndarray]] | None = None


def _round_metrics(
    states: list[NodeState], sol: Solution | None
) -> tuple[float | None, float]:
    """Relative error (same arithmetic as relative_error) and max |x| coordinate."""
    err = 0.0 if sol is not None else None
    mag = 0.0
    for i, st in enumerate(states):
        vec = st.stacked_x()
        v = float(np.max(np.abs(vec)))
        if not v <= mag:
            mag = v
        if sol is not None:
            ref, nrm = sol.block_and_norm(i, tuple(sorted(st.x_neigh)))
            if nrm == 0.0:
                raise ValueError(f"optimum block of node {i} has zero norm")
            err += float(np.linalg.norm(vec - ref)) / nrm
    return err, mag


def _z_magnitude(states: list[NodeState]) -> float:
    m = 0.0
    for st in states:
        for d in (st.z_in_self, st.z_in_neigh):
            for arr in d.values():
                v = float(np.max(np.abs(arr)))
                if not v <= m:
                    m = v
    return m


def run(
    p: PartitionProblem,
    params: AlgorithmParams,
    schedule: LossSchedule | None,
    k_max: int,
    init: list[NodeState] | None = None,
    solution: Solution | None = None,
    stop_tol: float | None = None,
    record_states: bool = False,
) -> RunTrace:
    """Iterate synchronous rounds and record the trajectory.

    schedule=None means every packet is delivered. The trace is a pure
    function of the arguments. A non-finite coordinate or a state magnitude
    beyond DIVERGENCE_NORM stops the run with the diverged flag instead of
    raising. When stop_tol is given (requires solution), the run ends at the
    first round whose relative error falls below it.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    if stop_tol is not None and solution is None:
        raise ValueError("stop_tol requires a reference solution")
    states = initial_states(p) if init is None else list(init)
    solvers = [make_local_solver(c, params) for c in p.costs]
    complete = DeliveryMask.complete(p.graph)

    errors: list[float] = []
    snapshots: list[list[np.ndarray]] | None = [] if record_states else None
    diverged = False
    rounds = 0
    for k in range(k_max):
        mask = complete if schedule is None else sample_mask(schedule, k)
        states = sync_round(states, p, params, mask, solvers)
        rounds = k + 1
        if snapshots is not None:
            snapshots.append([st.stacked_x() for st in states])
        err, mag = _round_metrics(states, solution)
        if err is not None:
            errors.append(err)
        if not mag < DIVERGENCE_NORM or (err is not None and not err < np.inf):
            diverged = True
            break
        if (k + 1) % _Z_CHECK_EVERY == 0 and not _z_magnitude(states) < DIVERGENCE_NORM:
            diverged = True
            break
        if stop_tol is not None and err < stop_tol:
            break
    return RunTrace(
        errors=np.array(errors) if solution is not None else None,
        diverged=diverged,
        rounds_executed=rounds,
        final_states=states,
        snapshots=snapshots,
    )


def trace_to_csv(trace: RunTrace) -> str:
    """CSV rows k, rel_error, diverged, plus per-node coordinates when recorded.

    The diverged column is 1 only on the terminal row of a diverged run.
    """
    lines = []
    header = "k,rel_error,diverged"
    if trace.snapshots is not None and trace.rounds_executed:
        n_nodes = len(trace.snapshots[0])
        cols = []
        for i in range(n_nodes):
            cols.extend(f"x{i}_{c}" for c in range(len(trace.snapshots[0][i])))
        header += "," + ",".join(cols)
    lines.append(header)
    for t in range(trace.rounds_executed):
        err = "" if trace.errors is None else repr(float(trace.errors[t]))
        div = 1 if (trace.diverged and t == trace.rounds_executed - 1) else 0
        row = f"{t},{err},{div}"
        if trace.snapshots is not None:
            row += "," + ",".join(repr(float(v)) for vec in trace.snapshots[t] for v in vec)
        lines.append(row)
    return "\n".join(lines) + "\n"
