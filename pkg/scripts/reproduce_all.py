#!/usr/bin/env python3
"""Run every bundled preset and write one CSV per preset.

    python scripts/reproduce_all.py --out results --trials 100000
"""

from __future__ import annotations

import argparse
import logging
import time
from pathlib import Path

from hrelay.config import load_preset, preset_names
from hrelay.runner import emit_csv, run_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("presets", nargs="*", help="subset of presets (default: all)")
    ap.add_argument("--out", default="results", type=Path)
    ap.add_argument("--trials", type=int, help="override Monte Carlo trials per point")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--engines", help="comma list, e.g. closed_form,asymptotic")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    engines = tuple(args.engines.split(",")) if args.engines else None
    for name in args.presets or preset_names():
        t0 = time.perf_counter()
        rows = run_sweep(load_preset(name), engines=engines, trials=args.trials, seed=args.seed, workers=args.workers)
        emit_csv(rows, args.out / f"{name}.csv")
        failed = sum(1 for r in rows if r.error)
        logging.info("%s: %d rows, %d failed, %.1f s", name, len(rows), failed, time.perf_counter() - t0)


if __name__ == "__main__":
    main()
