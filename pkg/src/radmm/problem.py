"""Partitioned quadratic costs, random instances, and the centralized optimum.

Each node i carries a cost of the form

    ||A_self x_i + sum_j A_neigh[j] x_j - b||^2_Q,    ||v||^2_M = v' M v,

so the global objective is a positive (semi)definite quadratic in the stacked
per-node variables. Instances are generated so the global Hessian is strictly
positive definite, which makes the optimizer unique and relative-error metrics
well defined.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, neighbors

SYMMETRY_TOL = 1e-12


class IndefiniteHessianError(ValueError):
    """The assembled global Hessian is not positive definite."""


@dataclass
class QuadraticLocalCost:
    """One node's quadratic cost data.

    a_self maps the node's own variable, a_neigh[j] the copy of neighbor j's
    variable, b is the target vector and q the positive-definite weight.
    """

    a_self: np.ndarray
    a_neigh: dict[int, np.ndarray]
    b: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        r, n = self.a_self.shape
        if self.b.shape != (r,):
            raise ValueError(f"b must have shape ({r},), got {self.b.shape}")
        if self.q.shape != (r, r):
            raise ValueError(f"q must have shape ({r}, {r}), got {self.q.shape}")
        for j, a in self.a_neigh.items():
            if a.shape != (r, n):
                raise ValueError(f"a_neigh[{j}] must have shape ({r}, {n}), got {a.shape}")
        asym = np.max(np.abs(self.q - self.q.T)) if r else 0.0
        if asym > SYMMETRY_TOL:
            raise ValueError(f"q must be symmetric within {SYMMETRY_TOL}, asymmetry {asym}")
        if r and np.min(np.linalg.eigvalsh(self.q)) <= 0:
            raise ValueError("q must be positive definite")

    @property
    def rows(self) -> int:
        return self.a_self.shape[0]

    @property
    def dim(self) -> int:
        return self.a_self.shape[1]

    def neighbor_order(self) -> list[int]:
        return sorted(self.a_neigh)

    def stacked_map(self) -> np.ndarray:
        """Horizontal stack [a_self, a_neigh[j1], a_neigh[j2], ...], neighbors ascending."""
        blocks = [self.a_self] + [self.a_neigh[j] for j in self.neighbor_order()]
        return np.hstack(blocks)


@dataclass
class PartitionProblem:
    """A graph plus one local cost per node, all with variable dimension `dim`."""

    graph: Graph
    costs: list[QuadraticLocalCost]
    dim: int

    def __post_init__(self):
        if len(self.costs) != self.graph.node_count:
            raise ValueError("one cost per node required")
        for i, cost in enumerate(self.costs):
            if cost.dim != self.dim:
                raise ValueError(f"cost {i} has dim {cost.dim}, expected {self.dim}")
            if set(cost.a_neigh) != set(neighbors(self.graph, i)):
                raise ValueError(
                    f"cost {i} neighbor keys {sorted(cost.a_neigh)} do not match "
                    f"graph neighbors {neighbors(self.graph, i)}"
                )


@dataclass
class Solution:
    """Per-node optimizer blocks and the optimal objective value."""

    x_star: list[np.ndarray]
    optimal_value: float
    _blocks: dict = field(default_factory=dict, repr=False)

    def block_and_norm(self, i: int, order: tuple[int, ...]) -> tuple[np.ndarray, float]:
        """Stacked block [x_i*; x_j* for j in order] and its Euclidean norm, cached."""
        key = (i, order)
        cached = self._blocks.get(key)
        if cached is None:
            ref = np.concatenate([self.x_star[i]] + [self.x_star[j] for j in order])
            cached = (ref, float(np.linalg.norm(ref)))
            self._blocks[key] = cached
        return cached

    def stacked_block(self, g: Graph, i: int) -> np.ndarray:
        """[x_i*; x_j* for j in neighbors(i) ascending], the block the node-local
        iterate of node i converges to."""
        return self.block_and_norm(i, tuple(neighbors(g, i)))[0]


def evaluate_local(
    cost: QuadraticLocalCost, x_self: np.ndarray, x_neigh: dict[int, np.ndarray]
) -> float:
    """Evaluate one node's cost at its own variable and its neighbors' values."""
    if x_self.shape != (cost.dim,):
        raise ValueError(f"x_self must have shape ({cost.dim},), got {x_self.shape}")
    v = cost.a_self @ x_self - cost.b
    for j, a in cost.a_neigh.items():
        if j not in x_neigh:
            raise ValueError(f"missing neighbor vector for node {j}")
        if x_neigh[j].shape != (cost.dim,):
            raise ValueError(f"x_neigh[{j}] must have shape ({cost.dim},)")
        v = v + a @ x_neigh[j]
    return float(v @ cost.q @ v)


def global_cost(p: PartitionProblem, x: list[np.ndarray]) -> float:
    """Sum of all local costs under a single global assignment."""
    if len(x) != p.graph.node_count:
        raise ValueError("one vector per node required")
    total = 0.0
    for i, cost in enumerate(p.costs):
        total += evaluate_local(cost, x[i], {j: x[j] for j in cost.a_neigh})
    return total


def assemble_normal_equations(p: PartitionProblem) -> tuple[np.ndarray, np.ndarray]:
    """Hessian and linear term of the global quadratic on the stacked variables.

    The global cost is x' H x / 2 - g' x + const with H = sum_i 2 S_i' M_i' Q_i M_i S_i
    where M_i is the node's stacked map and S_i selects [x_i; x_neighbors].
    """
    n = p.dim
    N = p.graph.node_count
    H = np.zeros((N * n, N * n))
    g = np.zeros(N * n)
    for i, cost in enumerate(p.costs):
        idx = [i] + cost.neighbor_order()
        m = cost.stacked_map()
        mtq = m.T @ cost.q
        h_loc = 2.0 * (mtq @ m)
        g_loc = 2.0 * (mtq @ cost.b)
        for a, ia in enumerate(idx):
            g[ia * n : (ia + 1) * n] += g_loc[a * n : (a + 1) * n]
            for c, ic in enumerate(idx):
                H[ia * n : (ia + 1) * n, ic * n : (ic + 1) * n] += h_loc[
                    a * n : (a + 1) * n, c * n : (c + 1) * n
                ]
    return H, g


def solve_centralized(p: PartitionProblem) -> Solution:
    """Exact minimizer of the global cost via a dense Cholesky solve.

    Raises IndefiniteHessianError when the Hessian is not positive definite
    (the optimizer would not be unique); there is no pseudo-inverse fallback.
    """
    H, g = assemble_normal_equations(p)
    try:
        c = np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise IndefiniteHessianError(
            "global Hessian is singular or indefinite; the optimizer is not unique"
        ) from exc
    u = np.linalg.solve(c.T, np.linalg.solve(c, g))
    n = p.dim
    blocks = [u[i * n : (i + 1) * n].copy() for i in range(p.graph.node_count)]
    return Solution(x_star=blocks, optimal_value=global_cost(p, blocks))


def _matrix_with_singular_values(
    rng: np.random.Generator, rows: int, cols: int, lo: float, hi: float
) -> np.ndarray:
    """Random rows x cols matrix with singular values i.i.d. uniform in [lo, hi]."""
    k = min(rows, cols)
    u, _ = np.linalg.qr(rng.standard_normal((rows, k)))
    v, _ = np.linalg.qr(rng.standard_normal((cols, k)))
    s = rng.uniform(lo, hi, size=k)
    return (u * s) @ v.T


def generate_instance(
    g: Graph,
    n: int,
    r_rows: int,
    seed: int,
    conditioning: float = 10.0,
    max_resamples: int = 50,
) -> PartitionProblem:
    """Random quadratic instance on graph g, resampled until the Hessian is PD.

    Per node: a_self has singular values in [1, conditioning], coupling blocks
    are scaled Gaussians, b is Gaussian, and q = M'M + I. Attempt t draws from
    the sub-seed (seed, t), so results are reproducible.
    """
    if n < 1 or r_rows < 1:
        raise ValueError("n and r_rows must be positive")
    if conditioning < 1:
        raise ValueError("conditioning must be >= 1")
    coupling_scale = 1.0 / np.sqrt(r_rows * n)
    for attempt in range(max_resamples):
        rng = np.random.default_rng(np.random.SeedSequence((seed, attempt)))
        costs = []
        for i in range(g.node_count):
            a_self = _matrix_with_singular_values(rng, r_rows, n, 1.0, conditioning)
            a_neigh = {
                j: coupling_scale * rng.standard_normal((r_rows, n))
                for j in neighbors(g, i)
            }
            b = rng.standard_normal(r_rows)
            m = rng.standard_normal((r_rows, r_rows))
            q = m.T @ m + np.eye(r_rows)
            q = 0.5 * (q + q.T)
            costs.append(QuadraticLocalCost(a_self=a_self, a_neigh=a_neigh, b=b, q=q))
        problem = PartitionProblem(graph=g, costs=costs, dim=n)
        H, _ = assemble_normal_equations(problem)
        eigs = np.linalg.eigvalsh(H)
        if eigs[0] > 1e-9 * max(1.0, eigs[-1]):
            return problem
    raise RuntimeError(
        f"no positive-definite instance within {max_resamples} resamples "
        "(degenerate graph/dimension configuration)"
    )


# --- serialization ----------------------------------------------------------
#
# Instances round-trip through JSON bit-exactly: floats are emitted with
# Python's shortest-repr encoding (at most 17 significant digits), which
# parses back to the identical IEEE-754 double.

SCHEMA_INSTANCE = "radmm-instance/1"


def _mat(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}


def _unmat(d: dict) -> np.ndarray:
    return np.array(d["data"], dtype=float).reshape(d["shape"])


def problem_to_json(p: PartitionProblem) -> str:
    doc = {
        "schema": SCHEMA_INSTANCE,
        "dim": p.dim,
        "graph": {
            "nodes": p.graph.node_count,
            "edges": sorted(list(e) for e in p.graph.edges),
            "positions": None
            if p.graph.positions is None
            else [[float(x), float(y)] for x, y in p.graph.positions],
        },
        "costs": [
            {
                "a_self": _mat(c.a_self),
                "a_neigh": {str(j): _mat(a) for j, a in sorted(c.a_neigh.items())},
                "b": _mat(c.b),
                "q": _mat(c.q),
            }
            for c in p.costs
        ],
    }
    return json.dumps(doc, indent=1)


def problem_from_json(text: str) -> PartitionProblem:
    doc = json.loads(text)
    if doc.get("schema") != SCHEMA_INSTANCE:
        raise ValueError(f"unsupported instance schema: {doc.get('schema')!r}")
    gdoc = doc["graph"]
    positions = None
    if gdoc.get("positions") is not None:
        positions = np.array(gdoc["positions"], dtype=float)
    g = Graph(
        node_count=gdoc["nodes"],
        edges=frozenset((int(i), int(j)) for i, j in gdoc["edges"]),
        positions=positions,
    )
    costs = [
        QuadraticLocalCost(
            a_self=_unmat(c["a_self"]),
            a_neigh={int(j): _unmat(a) for j, a in c["a_neigh"].items()},
            b=_unmat(c["b"]).reshape(-1),
            q=_unmat(c["q"]),
        )
        for c in doc["costs"]
    ]
    return PartitionProblem(graph=g, costs=costs, dim=doc["dim"])
