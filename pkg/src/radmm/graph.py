"""Undirected communication graphs: random geometric generation and queries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph on nodes 0..node_count-1 with optional planar positions.

    Edges are unordered pairs stored as (i, j) tuples with i < j. Positions,
    when present, are the points in the unit square that induced a geometric
    graph; they are kept only for serialization and inspection.
    """

    node_count: int
    edges: frozenset[tuple[int, int]]
    positions: np.ndarray | None = None
    _adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    _directed: tuple[tuple[int, int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError(f"node_count must be >= 1, got {self.node_count}")
        nbrs: list[list[int]] = [[] for _ in range(self.node_count)]
        for e in self.edges:
            i, j = e
            if i == j:
                raise ValueError(f"self-loop ({i}, {j}) not allowed")
            if not (0 <= i < j < self.node_count):
                raise ValueError(f"edge {e} must satisfy 0 <= i < j < {self.node_count}")
            nbrs[i].append(j)
            nbrs[j].append(i)
        if self.positions is not None and len(self.positions) != self.node_count:
            raise ValueError("positions must have one point per node")
        object.__setattr__(
            self, "_adjacency", tuple(tuple(sorted(ns)) for ns in nbrs)
        )
        directed = sorted(
            [(i, j) for i, j in self.edges] + [(j, i) for i, j in self.edges]
        )
        object.__setattr__(self, "_directed", tuple(directed))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degree(self, i: int) -> int:
        return len(self._adjacency[i])

    def directed_edges(self) -> tuple[tuple[int, int], ...]:
        """All directed instances of the edges, lexicographically sorted.

        This is the canonical edge enumeration used by loss schedules and by
        the stacked-vector reference, so its order must stay stable.
        """
        return self._directed


def neighbors(g: Graph, i: int) -> list[int]:
    """Ascending list of the neighbors of node i."""
    if not 0 <= i < g.node_count:
        raise IndexError(f"node index {i} out of range [0, {g.node_count})")
    return list(g._adjacency[i])


def is_connected(g: Graph) -> bool:
    """True iff the graph has a single connected component (BFS)."""
    if g.node_count == 1:
        return True
    seen = [False] * g.node_count
    seen[0] = True
    stack = [0]
    count = 1
    while stack:
        u = stack.pop()
        for v in g._adjacency[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                stack.append(v)
    return count == g.node_count


def generate_rgg(n: int, radius: float, seed: int) -> Graph:
    """Random geometric graph: n points uniform on the unit square.

    Nodes i and j are joined iff their Euclidean distance is strictly less
    than `radius` (ties at exactly the radius are excluded). Identical
    (n, radius, seed) always produce the identical graph, and for a fixed
    seed the edge set grows monotonically with the radius since the point
    draw does not depend on it.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    edges = set()
    for i in range(n):
        d = np.linalg.norm(pts[i + 1 :] - pts[i], axis=1)
        for off in np.nonzero(d < radius)[0]:
            edges.add((i, i + 1 + int(off)))
    return Graph(node_count=n, edges=frozenset(edges), positions=pts)


def generate_connected_rgg(
    n: int, radius: float, seed: int, max_resamples: int = 10000
) -> Graph:
    """Resample geometric graphs with fresh sub-seeds until one is connected.

    Attempt t uses the sub-seed derived from (seed, t), so the result is a
    pure function of the arguments. Raises RuntimeError when no connected
    graph appears within `max_resamples` attempts (radius too small for n).
    """
    for attempt in range(max_resamples):
        sub = np.random.SeedSequence((seed, attempt)).generate_state(1, np.uint64)[0]
        g = generate_rgg(n, radius, int(sub))
        if is_connected(g):
            return g
    raise RuntimeError(
        f"no connected geometric graph with n={n}, radius={radius} "
        f"within {max_resamples} resamples"
    )


def graph_to_text(g: Graph) -> str:
    """Plain-text adjacency list: node count, then 'i j' edge lines, then positions."""
    lines = [str(g.node_count)]
    for i, j in sorted(g.edges):
        lines.append(f"{i} {j}")
    if g.positions is not None:
        for i, (x, y) in enumerate(g.positions):
            lines.append(f"pos {i} {float(x)!r} {float(y)!r}")
    return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> Graph:
    """Inverse of graph_to_text."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty graph document")
    n = int(lines[0])
    edges = set()
    positions: np.ndarray | None = None
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "pos":
            if positions is None:
                positions = np.zeros((n, 2))
            positions[int(parts[1])] = [float(parts[2]), float(parts[3])]
        else:
            i, j = int(parts[0]), int(parts[1])
            edges.add((min(i, j), max(i, j)))
    return Graph(node_count=n, edges=frozenset(edges), positions=positions)
