#!/usr/bin/env python3
"""Run the four bundled figure presets and drop their CSVs under out/figures/.

fig1/fig3/fig4 are Monte Carlo error traces (vs loss probability, step size,
and penalty respectively); fig2 is the stability-boundary sweep. With the
default 100-run presets the whole thing takes a few minutes on one core;
pass --jobs to parallelize the sweep and --runs to thin the Monte Carlo.
"""

import argparse
import json
import sys
import tempfile
import time
from pathlib import Path

from radmm.cli import main as radmm_main

FIGDIR = Path("out/figures")


def run_preset(name: str, command: str, jobs: int, runs: int | None) -> int:
    out = FIGDIR / name
    argv = [command, "--preset", name, "--out", str(out), "--jobs", str(jobs)]
    if runs is not None and command == "run":
        # thin the preset's Monte Carlo runs without editing the bundled file
        from importlib import resources

        doc = json.loads(resources.files("radmm").joinpath("presets", f"{name}.json").read_text())
        doc["run"]["runs"] = runs
        tmp = Path(tempfile.mkstemp(suffix=".json")[1])
        tmp.write_text(json.dumps(doc))
        argv = [command, "--config", str(tmp), "--out", str(out), "--jobs", str(jobs)]
    t0 = time.perf_counter()
    rc = radmm_main(argv)
    print(f"{name}: exit {rc} in {time.perf_counter() - t0:.1f}s")
    return rc


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--runs", type=int, default=None, help="override Monte Carlo run count")
    args = parser.parse_args()

    worst = 0
    for name, command in [("fig1", "run"), ("fig2", "sweep"), ("fig3", "run"), ("fig4", "run")]:
        worst = max(worst, run_preset(name, command, args.jobs, args.runs))
    return worst


if __name__ == "__main__":
    sys.exit(main())
