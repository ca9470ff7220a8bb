#!/usr/bin/env python3
"""Plot SQNR-versus-cost curves from a sweep CSV.

Usage: plot_sweep.py results.csv [out.png]

Reads the aggregate rows (trial == "mean") and draws, per (algorithm,
dmax) configuration, the total-cost curve solid and the adders-only curve
dashed.
"""

import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main() -> int:
    if len(sys.argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 1
    path = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else "sweep.png"

    curves = defaultdict(list)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["trial"] != "mean" or row["sqnr_db"] in ("inf", "nan"):
                continue
            key = row["algorithm"] if row["dmax"] == "inf" else f"{row['algorithm']}({row['dmax']})"
            curves[key].append(
                (float(row["cost_total"]), float(row["cost_adders"]), float(row["sqnr_db"]))
            )

    if not curves:
        print("no aggregate rows found", file=sys.stderr)
        return 1

    fig, ax = plt.subplots(figsize=(7, 5))
    colors = plt.cm.tab10.colors
    for i, (label, pts) in enumerate(sorted(curves.items())):
        pts.sort()
        total = [p[0] for p in pts]
        adders = [p[1] for p in pts]
        sqnr = [p[2] for p in pts]
        color = colors[i % len(colors)]
        ax.plot(total, sqnr, "-o", color=color, label=f"{label} (total)", markersize=3)
        ax.plot(sorted(adders), [s for _, s in sorted(zip(adders, sqnr))], "--", color=color,
                label=f"{label} (adders only)", alpha=0.7)
    ax.set_xlabel("hardware cost")
    ax.set_ylabel("SQNR [dB]")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
