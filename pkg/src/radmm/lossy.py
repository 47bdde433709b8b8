"""Bernoulli packet loss over directed edges, pre-drawable per round.

Masks are a pure function of (seed, round, edge) through a counter-based
Philox generator: round k owns the counter block k << 128, and within a round
one uniform is drawn per directed edge in the canonical sorted order. Any
round can therefore be re-queried in any order and always yields the same
mask, which is what makes full runs bitwise reproducible regardless of how
the simulation loop is executed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph


@dataclass(frozen=True)
class LossModel:
    """Per-directed-edge loss probabilities."""

    probs: dict[tuple[int, int], float]

    def __post_init__(self):
        for e, p in self.probs.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"loss probability for edge {e} must be in [0, 1], got {p}")

    @classmethod
    def uniform(cls, g: Graph, p: float) -> "LossModel":
        return cls(probs={e: p for e in g.directed_edges()})

    @classmethod
    def from_table(cls, g: Graph, table: dict[tuple[int, int], float]) -> "LossModel":
        directed = set(g.directed_edges())
        if set(table) != directed:
            missing = directed - set(table)
            extra = set(table) - directed
            raise ValueError(
                f"loss table must cover the directed edges exactly; "
                f"missing={sorted(missing)} extra={sorted(extra)}"
            )
        return cls(probs=dict(table))


@dataclass(frozen=True)
class DeliveryMask:
    """One round's delivery outcome per directed edge (True = delivered)."""

    delivered: dict[tuple[int, int], bool]

    def all_delivered(self) -> bool:
        return all(self.delivered.values())

    @classmethod
    def complete(cls, g: Graph) -> "DeliveryMask":
        return cls(delivered={e: True for e in g.directed_edges()})


@dataclass(frozen=True)
class LossSchedule:
    """Deterministic per-round mask source for one loss model."""

    model: LossModel
    seed: int

    def __post_init__(self):
        # fixed edge ordering so draw -> edge assignment never varies
        object.__setattr__(self, "_edges", tuple(sorted(self.model.probs)))
        object.__setattr__(
            self, "_probs", np.array([self.model.probs[e] for e in sorted(self.model.probs)])
        )

    @classmethod
    def lossless(cls, g: Graph, seed: int = 0) -> "LossSchedule":
        return cls(model=LossModel.uniform(g, 0.0), seed=seed)


def sample_mask(schedule: LossSchedule, k: int) -> DeliveryMask:
    """The delivery mask of round k; identical on every re-query.

    A packet on edge e is lost when its uniform draw falls below the edge's
    loss probability, so p = 0 delivers everything and p = 1 nothing.
    """
    if k < 0:
        raise ValueError(f"round index must be >= 0, got {k}")
    edges = schedule._edges
    if not edges:
        return DeliveryMask(delivered={})
    gen = np.random.Generator(np.random.Philox(key=schedule.seed, counter=k << 128))
    u = gen.random(len(edges))
    ok = u >= schedule._probs
    return DeliveryMask(delivered={e: bool(ok[t]) for t, e in enumerate(edges)})
