"""Centralized stacked-vector form of the algorithm, used as an oracle.

The node-local scheme is a rearrangement of a four-iterate relaxed splitting
on stacked vectors: per round, with P the permutation pairing the two copies
each edge keeps of the same variable and A the map pinning local copies to
edge slots,

    y = (I + P) z / (2 rho)
    w = (I - P) z / 2
    x = argmin { f(x) + (Pz)' A x + (rho/2) ||A x||^2 }
    z <- (1 - alpha) z - alpha P z - 2 alpha rho A x.

This module builds A and P explicitly, iterates the four updates on dense
vectors, and exposes a lockstep comparison against the node-local rounds.
It is deliberately plain dense linear algebra: it is the oracle, not the
performance path.

Slot layout of the y/w/z space: slots are grouped by owning node (ascending),
within a node by ascending neighbor, and each (node, neighbor) pair
contributes the block for the node's own variable followed by the block for
the neighbor's variable, each of width n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    AlgorithmParams,
    NodeState,
    make_local_solver,
    sync_round,
)
from .graph import Graph, neighbors
from .lossy import DeliveryMask
from .problem import PartitionProblem


@dataclass
class ConstraintMatrices:
    """Constraint map a, slot permutation p, and the index bookkeeping.

    slot_base[(i, j)] is the offset of the (i owns, neighbor j) slot pair:
    the own-variable block starts there, the neighbor-variable block n later.
    x_base[i] is the offset of node i's stacked copy block.
    """

    a: np.ndarray
    p: np.ndarray
    slot_base: dict[tuple[int, int], int]
    x_base: list[int]
    n: int

    @property
    def y_dim(self) -> int:
        return self.a.shape[0]

    @property
    def x_dim(self) -> int:
        return self.a.shape[1]


def build_constraint_matrices(g: Graph, n: int) -> ConstraintMatrices:
    """A and P for graph g with per-node variable dimension n.

    Each slot row of A holds a single -I block: the own-variable slot of
    (i, j) pins node i's own variable (which therefore appears in deg(i)
    slots), the neighbor slot pins node i's copy of j's variable. P swaps
    the own slot of (i, j) with the neighbor slot of (j, i), i.e. the two
    copies of the same underlying variable on the two ends of an edge.
    """
    x_base = []
    off = 0
    for i in range(g.node_count):
        x_base.append(off)
        off += n * (g.degree(i) + 1)
    x_dim = off

    slot_base: dict[tuple[int, int], int] = {}
    off = 0
    for i in range(g.node_count):
        for j in neighbors(g, i):
            slot_base[(i, j)] = off
            off += 2 * n
    y_dim = off

    a = np.zeros((y_dim, x_dim))
    p = np.zeros((y_dim, y_dim))
    eye = np.eye(n)
    for i in range(g.node_count):
        nbrs = neighbors(g, i)
        for t, j in enumerate(nbrs):
            own = slot_base[(i, j)]
            nbr = own + n
            a[own : own + n, x_base[i] : x_base[i] + n] = -eye
            col = x_base[i] + n * (t + 1)
            a[nbr : nbr + n, col : col + n] = -eye
            mirror = slot_base[(j, i)]
            p[own : own + n, mirror + n : mirror + 2 * n] = eye
            p[nbr : nbr + n, mirror : mirror + n] = eye
    return ConstraintMatrices(a=a, p=p, slot_base=slot_base, x_base=x_base, n=n)


@dataclass
class ReferenceState:
    """Stacked iterates. After a step, x/y/w belong to the round the step
    consumed and z is the next round's auxiliary vector."""

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    z: np.ndarray


def reference_initial_state(cm: ConstraintMatrices, z0: np.ndarray) -> ReferenceState:
    if z0.shape != (cm.y_dim,):
        raise ValueError(f"z0 must have shape ({cm.y_dim},), got {z0.shape}")
    return ReferenceState(
        x=np.zeros(cm.x_dim),
        y=np.zeros(cm.y_dim),
        w=np.zeros(cm.y_dim),
        z=z0.copy(),
    )


def _stacked_cost_terms(p: PartitionProblem, cm: ConstraintMatrices) -> tuple[np.ndarray, np.ndarray]:
    """Hessian-half and linear term of f on the stacked copy vector."""
    h = np.zeros((cm.x_dim, cm.x_dim))
    lin = np.zeros(cm.x_dim)
    for i, cost in enumerate(p.costs):
        m = cost.stacked_map()
        base = cm.x_base[i]
        width = m.shape[1]
        mtq = m.T @ cost.q
        h[base : base + width, base : base + width] = mtq @ m
        lin[base : base + width] = mtq @ cost.b
    return h, lin


def reference_step(
    state: ReferenceState,
    p: PartitionProblem,
    cm: ConstraintMatrices,
    params: AlgorithmParams,
) -> ReferenceState:
    """One four-iterate round on stacked vectors.

    The x-argmin solves the assembled normal equations
    (2 H_f + rho A'A) x = 2 g_f - A'(Pz); A'A is diagonal with the node
    degree on own-variable coordinates and one elsewhere.
    """
    z = state.z
    pz = cm.p @ z
    y = (z + pz) / (2.0 * params.rho)
    w = (z - pz) / 2.0
    h, lin = _stacked_cost_terms(p, cm)
    system = 2.0 * h + params.rho * (cm.a.T @ cm.a)
    rhs = 2.0 * lin - cm.a.T @ pz
    try:
        x = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError("stacked x-update system is singular") from exc
    z_next = (1.0 - params.alpha) * z - params.alpha * pz - 2.0 * params.alpha * params.rho * (cm.a @ x)
    return ReferenceState(x=x, y=y, w=w, z=z_next)


def node_states_from_stacked_z(
    p: PartitionProblem, cm: ConstraintMatrices, z: np.ndarray
) -> list[NodeState]:
    """Node-local states holding the given stacked z, with zero x.

    Node i keeps the two blocks of every (j, i) slot pair: the neighbor block
    is its own-variable auxiliary for the edge from j, the own block is its
    copy about j's variable.
    """
    n = cm.n
    states = []
    for i in range(p.graph.node_count):
        nbrs = neighbors(p.graph, i)
        z_in_self = {}
        z_in_neigh = {}
        for j in nbrs:
            base = cm.slot_base[(j, i)]
            z_in_neigh[j] = z[base : base + n].copy()
            z_in_self[j] = z[base + n : base + 2 * n].copy()
        states.append(
            NodeState(
                x_self=np.zeros(n),
                x_neigh={j: np.zeros(n) for j in nbrs},
                z_in_self=z_in_self,
                z_in_neigh=z_in_neigh,
            )
        )
    return states


def stack_node_xs(states: list[NodeState], cm: ConstraintMatrices) -> np.ndarray:
    """Concatenate every node's local iterate in the reference x layout."""
    return np.concatenate([st.stacked_x() for st in states])


def check_equivalence(
    p: PartitionProblem, params: AlgorithmParams, k_max: int, seed: int
) -> float:
    """Max coordinate deviation between the stacked and node-local trajectories.

    Both start from the same Gaussian z (the node-local side reads its slots
    out of the stacked vector) and run loss-free in lockstep for k_max
    rounds. Agreement to numerical-identity level certifies that the
    node-local rearrangement reproduces the stacked scheme exactly.
    """
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    cm = build_constraint_matrices(p.graph, p.dim)
    z0 = np.random.default_rng(seed).standard_normal(cm.y_dim)
    ref = reference_initial_state(cm, z0)
    states = node_states_from_stacked_z(p, cm, z0)
    solvers = [make_local_solver(c, params) for c in p.costs]
    mask = DeliveryMask.complete(p.graph)
    max_dev = 0.0
    for _ in range(k_max):
        ref = reference_step(ref, p, cm, params)
        states = sync_round(states, p, params, mask, solvers)
        dev = float(np.max(np.abs(ref.x - stack_node_xs(states, cm)))) if cm.x_dim else 0.0
        if dev > max_dev:
            max_dev = dev
    return max_dev
