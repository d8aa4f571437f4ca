#!/usr/bin/env python3
"""Offline demo: generate mock videos for the shipped corpus, evaluate each
run with the mock judge, then print the success, cumulative, score, and cost
tables.

Usage: python scripts/run_mock_benchmark.py [--workdir runs_demo]
"""
import argparse
import json
import sys
from pathlib import Path

from theoremcast.cli import main as cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="runs_demo")
    parser.add_argument("--corpus", default="data/corpus.json")
    args = parser.parse_args()

    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    config = {
        "paths": {
            "corpus": args.corpus,
            "runs": str(workdir / "runs"),
            "index": str(workdir / "index"),
        },
        "pipeline": {"stub_clip_seconds": 1.0},
    }
    config_path = workdir / "config.json"
    config_path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    base = ["--config", str(config_path), "--mock"]

    if cli(base + ["generate", "--all", "--run-id", "demo"]) != 0:
        return 1
    for record_path in sorted((workdir / "runs").rglob("run_record.json")):
        cli(base + ["evaluate", str(record_path.parent)])

    runs = str(workdir / "runs")
    for kind in ("success", "cumulative", "scores", "cost"):
        print()
        cli(base + ["report", kind, runs])
    return 0


if __name__ == "__main__":
    sys.exit(main())
