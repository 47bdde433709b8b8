"""Command-line entry point: generate instances, run, check, and sweep.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
4 equivalence check failure.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from .config import ConfigError, ExperimentConfig, build_graph, build_problem, load_config, override_seeds, parse_config
from .core import AlgorithmParams, run, trace_to_csv
from .experiments import monte_carlo, monte_carlo_to_csv, stability_sweep, sweep_to_csv
from .lossy import LossModel, LossSchedule
from .problem import PartitionProblem, problem_from_json, problem_to_json, solve_centralized
from .reference import check_equivalence

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_EQUIVALENCE = 4


def _load_preset(name: str) -> ExperimentConfig:
    import json

    ref = resources.files("radmm").joinpath("presets", f"{name}.json")
    try:
        text = ref.read_text()
    except FileNotFoundError as exc:
        raise ConfigError(f"unknown preset {name!r}") from exc
    return parse_config(json.loads(text))


def _resolve_config(args) -> ExperimentConfig:
    if bool(args.config) == bool(args.preset):
        raise ConfigError("exactly one of --config or --preset is required")
    cfg = load_config(args.config) if args.config else _load_preset(args.preset)
    if args.seed_override is not None:
        cfg = override_seeds(cfg, args.seed_override)
    return cfg


def _resolve_instance(cfg: ExperimentConfig, instance_path: str | None) -> PartitionProblem:
    if instance_path is not None:
        return problem_from_json(Path(instance_path).read_text())
    return build_problem(cfg, build_graph(cfg.graph))


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    return path


def cmd_generate(cfg: ExperimentConfig, out_dir: Path) -> int:
    problem = build_problem(cfg, build_graph(cfg.graph))
    path = _write(out_dir, f"{cfg.output_prefix}_instance.json", problem_to_json(problem))
    print(f"wrote {path}")
    return EXIT_OK


def _combo_suffix(cfg: ExperimentConfig, alpha: float, rho: float, loss_p: float | None) -> str:
    parts = []
    if len(cfg.params.alpha) > 1:
        parts.append(f"_a{alpha!r}")
    if len(cfg.params.rho) > 1:
        parts.append(f"_r{rho!r}")
    if cfg.loss.p is not None and len(cfg.loss.p) > 1 and loss_p is not None:
        parts.append(f"_p{loss_p!r}")
    return "".join(parts)


def cmd_run(cfg: ExperimentConfig, instance_path: str | None, out_dir: Path) -> int:
    problem = _resolve_instance(cfg, instance_path)
    solution = solve_centralized(problem)
    loss_values: list[float | None] = list(cfg.loss.p) if cfg.loss.p is not None else [None]
    any_diverged = False
    for alpha in cfg.params.alpha:
        for rho in cfg.params.rho:
            params = AlgorithmParams(alpha=alpha, rho=rho)
            for loss_p in loss_values:
                if loss_p is None:
                    model = LossModel.from_table(problem.graph, cfg.loss.table)
                    tol = cfg.run.resolved_tol(max(cfg.loss.table.values()))
                else:
                    model = LossModel.uniform(problem.graph, loss_p)
                    tol = cfg.run.resolved_tol(loss_p)
                suffix = _combo_suffix(cfg, alpha, rho, loss_p)
                if cfg.run.runs == 1:
                    schedule = LossSchedule(model=model, seed=cfg.loss.seed)
                    tr = run(
                        problem,
                        params,
                        schedule,
                        cfg.run.k_max,
                        solution=solution,
                        stop_tol=tol,
                    )
                    any_diverged = any_diverged or tr.diverged
                    text = trace_to_csv(tr)
                else:
                    mc = monte_carlo(
                        problem,
                        params,
                        model,
                        cfg.run.runs,
                        cfg.run.k_max,
                        cfg.loss.seed,
                        solution=solution,
                        stop_tol=tol,
                    )
                    any_diverged = any_diverged or mc.diverged
                    text = monte_carlo_to_csv(mc)
                path = _write(out_dir, f"{cfg.output_prefix}_trace{suffix}.csv", text)
                print(f"wrote {path}")
    return EXIT_DIVERGED if any_diverged else EXIT_OK


def cmd_check(cfg: ExperimentConfig, instance_path: str | None, out_dir: Path) -> int:
    if cfg.check is None:
        raise ConfigError("config has no 'check' section")
    problem = _resolve_instance(cfg, instance_path)
    lines = []
    worst = 0.0
    for alpha in cfg.params.alpha:
        for rho in cfg.params.rho:
            params = AlgorithmParams(alpha=alpha, rho=rho)
            dev = check_equivalence(problem, params, cfg.check.k_max, cfg.check.seed)
            worst = max(worst, dev)
            lines.append(f"alpha={alpha!r} rho={rho!r} k_max={cfg.check.k_max} max_deviation={dev!r}")
    verdict = "PASS" if worst < cfg.check.tol else "FAIL"
    lines.append(f"worst={worst!r} tol={cfg.check.tol!r} {verdict}")
    report = "\n".join(lines) + "\n"
    print(report, end="")
    _write(out_dir, f"{cfg.output_prefix}_check.txt", report)
    return EXIT_OK if verdict == "PASS" else EXIT_EQUIVALENCE


def cmd_sweep(cfg: ExperimentConfig, instance_path: str | None, out_dir: Path, jobs: int) -> int:
    if cfg.sweep is None:
        raise ConfigError("config has no 'sweep' section")
    problem = _resolve_instance(cfg, instance_path)
    result = stability_sweep(
        problem,
        rho_grid=cfg.sweep.rho,
        alpha_grid=cfg.sweep.alpha,
        loss_grid=cfg.sweep.p,
        runs=cfg.sweep.runs,
        k_max=cfg.sweep.k_max,
        seed=cfg.loss.seed,
        tol=cfg.sweep.tol,
        jobs=jobs,
    )
    path = _write(out_dir, f"{cfg.output_prefix}_sweep.csv", sweep_to_csv(result))
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radmm",
        description="Partition-based relaxed ADMM simulator over lossy networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("generate", "generate a graph + problem instance file"),
        ("run", "run the solver and write error-trace CSVs"),
        ("check", "compare node-local rounds against the stacked reference"),
        ("sweep", "classify a (rho, alpha, p) grid and write a sweep CSV"),
    ]:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="path to a config JSON")
        sp.add_argument("--preset", help="name of a bundled preset (fig1..fig4)")
        sp.add_argument("--instance", help="path to an instance JSON (default: generate from config)")
        sp.add_argument("--out", default="out", help="output directory (default: out)")
        sp.add_argument("--seed-override", type=int, default=None, help="replace every config seed (testing only)")
        sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes for sweeps")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out)
    try:
        cfg = _resolve_config(args)
        if args.command == "generate":
            return cmd_generate(cfg, out_dir)
        if args.command == "run":
            return cmd_run(cfg, args.instance, out_dir)
        if args.command == "check":
            return cmd_check(cfg, args.instance, out_dir)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.instance, out_dir, args.jobs)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
