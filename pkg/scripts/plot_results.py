#!/usr/bin/env python3
"""Plot CSVs written by reproduce_all.py (needs matplotlib).

One PNG per CSV; one curve per (metric@series, engine).  Outage and BEP
are drawn on a log axis.
"""

from __future__ import annotations

import argparse
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {"closed_form": "-", "asymptotic": "--", "monte_carlo": "o"}


def plot(path: Path, out: Path) -> None:
    curves = defaultdict(list)
    with path.open() as fh:
        for row in csv.DictReader(fh):
            if row["value"] in ("nan", "inf"):
                continue
            curves[(row["metric"], row["engine"])].append((float(row["axis"]), float(row["value"])))
    if not curves:
        return
    metrics = sorted({m.split("@")[0] for m, _ in curves})
    fig, axes = plt.subplots(1, len(metrics), figsize=(6 * len(metrics), 4.5), squeeze=False)
    for ax, metric in zip(axes[0], metrics):
        for (label, engine), pts in sorted(curves.items()):
            if label.split("@")[0] != metric:
                continue
            pts.sort()
            xs, ys = zip(*pts)
            ax.plot(xs, ys, STYLE.get(engine, "-"), mfc="none", label=f"{label} [{engine}]")
        if metric in ("op", "bep"):
            ax.set_yscale("log")
            ax.set_ylim(top=1.5)  # expansions overshoot at low SNR
        ax.set_title(f"{path.stem}: {metric}")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(out / f"{path.stem}.png", dpi=120)
    plt.close(fig)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv_dir", type=Path, nargs="?", default=Path("results"))
    args = ap.parse_args()
    for p in sorted(args.csv_dir.glob("*.csv")):
        plot(p, args.csv_dir)
        print(f"wrote {args.csv_dir / (p.stem + '.png')}")


if __name__ == "__main__":
    main()
