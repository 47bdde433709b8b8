"""Experiment harness: Monte Carlo error traces and stability sweeps.

Aggregation happens in the linear error domain; taking logs is left to
whoever renders the data, so traces from different settings stay comparable.
Every run's loss schedule is seeded from the experiment seed and the run's
grid coordinates, which makes results a pure function of the configuration
and lets parallel and serial execution agree bitwise.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import AlgorithmParams, RunTrace, relative_error, run
from .lossy import LossModel, LossSchedule
from .problem import PartitionProblem, Solution, solve_centralized

__all__ = [
    "RunTrace",
    "relative_error",
    "MonteCarloTrace",
    "SweepResult",
    "monte_carlo",
    "detect_convergence",
    "stability_sweep",
    "monte_carlo_to_csv",
    "sweep_to_csv",
]

DEFAULT_TOL_LOSSLESS = 1e-6
DEFAULT_TOL_LOSSY = 1e-4


def _sub_seed(*key: int) -> int:
    return int(np.random.SeedSequence(key).generate_state(1, np.uint64)[0])


@dataclass
class MonteCarloTrace:
    """Round-wise mean and min/max envelope of the relative error over runs."""

    mean: np.ndarray
    low: np.ndarray
    high: np.ndarray
    diverged: bool
    runs: int


def monte_carlo(
    p: PartitionProblem,
    params: AlgorithmParams,
    loss_p: float | LossModel,
    runs: int,
    k_max: int,
    seed: int,
    solution: Solution | None = None,
    stop_tol: float | None = None,
) -> MonteCarloTrace:
    """Average the relative-error trace over independently seeded loss schedules.

    loss_p is a uniform loss probability, or a full LossModel for per-edge
    tables. Run r draws its schedule from (seed, r). Aggregates cover the
    rounds all runs executed (they differ only when stop_tol or divergence
    ends a run early); any diverged run marks the whole aggregate diverged.
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    if solution is None:
        solution = solve_centralized(p)
    model = loss_p if isinstance(loss_p, LossModel) else LossModel.uniform(p.graph, loss_p)
    traces = []
    diverged = False
    for r in range(runs):
        schedule = LossSchedule(model=model, seed=_sub_seed(seed, r))
        tr = run(p, params, schedule, k_max, solution=solution, stop_tol=stop_tol)
        diverged = diverged or tr.diverged
        traces.append(tr.errors)
    rounds = min(len(e) for e in traces)
    stacked = np.stack([e[:rounds] for e in traces])
    return MonteCarloTrace(
        mean=stacked.mean(axis=0),
        low=stacked.min(axis=0),
        high=stacked.max(axis=0),
        diverged=diverged,
        runs=runs,
    )


def detect_convergence(trace: RunTrace, tol: float, window: int = 1) -> int | None:
    """First round index whose error is below tol (staying below for `window` rounds).

    Returns None for diverged traces, and None when the trace ends without
    such a crossing (the undecided case).
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if trace.diverged or trace.errors is None:
        return None
    below = trace.errors < tol
    for t in range(len(below) - window + 1):
        if below[t : t + window].all():
            return t
    return None


@dataclass
class SweepResult:
    """Outcome of a (rho, alpha, loss probability) grid sweep.

    outcomes maps each cell to 'converged' (every run reached tol),
    'diverged' (some run blew up) or 'undecided' (ran out of rounds).
    boundary[(rho, p)] is the last alpha of the convergent prefix of the
    alpha grid, None when even the first alpha failed. converged_at holds
    the median convergence round of converged cells.
    """

    grid: list[tuple[float, float, float]]
    outcomes: dict[tuple[float, float, float], str]
    boundary: dict[tuple[float, float], float | None]
    converged_at: dict[tuple[float, float, float], float | None]


def _sweep_cell(args) -> tuple[tuple[float, float, float], str, float | None]:
    p, rho, alpha, loss_p, indices, runs, k_max, seed, tol, solution = args
    params = AlgorithmParams(alpha=alpha, rho=rho)
    model = LossModel.uniform(p.graph, loss_p)
    rounds = []
    outcome = "converged"
    for r in range(runs):
        schedule = LossSchedule(model=model, seed=_sub_seed(seed, *indices, r))
        tr = run(p, params, schedule, k_max, solution=solution, stop_tol=tol)
        if tr.diverged:
            outcome = "diverged"
            break
        at = detect_convergence(tr, tol)
        if at is None:
            outcome = "undecided"
            break
        rounds.append(at)
    median = float(np.median(rounds)) if outcome == "converged" else None
    return (rho, alpha, loss_p), outcome, median


def stability_sweep(
    p: PartitionProblem,
    rho_grid: list[float],
    alpha_grid: list[float],
    loss_grid: list[float],
    runs: int,
    k_max: int,
    seed: int,
    tol: float = DEFAULT_TOL_LOSSY,
    jobs: int = 1,
) -> SweepResult:
    """Classify every (rho, alpha, p) cell by running `runs` seeded schedules.

    Cell (i_rho, i_alpha, i_p) derives its run seeds from the experiment seed
    and its grid indices, so the result does not depend on evaluation order;
    jobs > 1 distributes cells over processes and reassembles by key.
    """
    if not (rho_grid and alpha_grid and loss_grid):
        raise ValueError("all sweep grids must be nonempty")
    for rho in rho_grid:
        if rho <= 0:
            raise ValueError(f"rho grid must be positive, got {rho}")
    solution = solve_centralized(p)
    tasks = []
    grid = []
    for ir, rho in enumerate(rho_grid):
        for ia, alpha in enumerate(alpha_grid):
            for ip, loss_p in enumerate(loss_grid):
                grid.append((rho, alpha, loss_p))
                tasks.append(
                    (p, rho, alpha, loss_p, (ir, ia, ip), runs, k_max, seed, tol, solution)
                )
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_cell, tasks))
    else:
        results = [_sweep_cell(t) for t in tasks]

    outcomes = {cell: outcome for cell, outcome, _ in results}
    converged_at = {cell: median for cell, _, median in results}
    boundary: dict[tuple[float, float], float | None] = {}
    for rho in rho_grid:
        for loss_p in loss_grid:
            best = None
            for alpha in alpha_grid:
                if outcomes[(rho, alpha, loss_p)] == "converged":
                    best = alpha
                else:
                    break
            boundary[(rho, loss_p)] = best
    return SweepResult(
        grid=grid, outcomes=outcomes, boundary=boundary, converged_at=converged_at
    )


def monte_carlo_to_csv(trace: MonteCarloTrace) -> str:
    lines = ["k,mean_rel_error,min,max"]
    for k in range(len(trace.mean)):
        lines.append(
            f"{k},{float(trace.mean[k])!r},{float(trace.low[k])!r},{float(trace.high[k])!r}"
        )
    return "\n".join(lines) + "\n"


def sweep_to_csv(result: SweepResult) -> str:
    lines = ["rho,alpha,p,outcome,converged_at_median"]
    for cell in result.grid:
        rho, alpha, loss_p = cell
        at = result.converged_at[cell]
        at_txt = "" if at is None else repr(float(at))
        lines.append(f"{rho!r},{alpha!r},{loss_p!r},{result.outcomes[cell]},{at_txt}")
    return "\n".join(lines) + "\n"
