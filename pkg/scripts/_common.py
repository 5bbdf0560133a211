"""Shared helpers for the experiment scripts."""
import argparse
import logging
from pathlib import Path

from toposense.cli import ExperimentConfig, run, validate

QUICK = dict(n_grid=401, n_samples=10, n_realizations=3)


def parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out", default="results", help="output root directory")
    p.add_argument("--quick", action="store_true", help="small sizes for a smoke run")
    p.add_argument("--workers", type=int, default=1)
    return p


def execute(args, jobs):
    """Run ``(subdir, command, overrides)`` jobs in order."""
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    root = Path(args.out)
    for subdir, command, overrides in jobs:
        kw = dict(overrides, workers=args.workers)
        if args.quick:
            kw.update(QUICK)
            n = kw.get("N", 201)
            kw["N"] = min(n, 61 if n % 2 else 60)
        cfg = ExperimentConfig(**kw)
        validate(cfg)
        logging.info("%s -> %s", command, root / subdir)
        run(command, cfg, root / subdir)
