#!/usr/bin/env python3
"""Report how much each node rank gains from the second (cooperative) step.

Reads the metrics CSV of an evaluated run and prints, for the best- and
worst-input node of each scene, the mean delta SIR at both steps and the
step-1 to step-2 improvement. The interesting spread is between the ranks:
nodes that start badly gain the most from the exchanged signals.
"""

import argparse
import sys
from pathlib import Path

from wasnlab.evaluation import aggregate, read_metrics_csv
from wasnlab.layout import metrics_csv


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--corpus", required=True)
    parser.add_argument("--run", required=True, help="an already evaluated run name")
    args = parser.parse_args()

    path = metrics_csv(Path(args.corpus), args.run)
    if not path.is_file():
        print(f"no metrics at {path}; run `wasnlab evaluate` first", file=sys.stderr)
        return 2
    rows = read_metrics_csv(path)

    print(f"{len({r.scene_id for r in rows})} scenes, run {args.run!r}")
    print(f"{'node rank':<12} {'step1 dSIR':>11} {'step2 dSIR':>11} {'gain dB':>8}")
    for rank in ("best_input", "worst_input"):
        agg = aggregate(rows, rank)
        if "step2" not in agg:
            print(f"run {args.run!r} has no step-2 rows; nothing to compare",
                  file=sys.stderr)
            return 2
        s1 = agg["step1"]["delta_sir_db"]["mean"]
        s2 = agg["step2"]["delta_sir_db"]["mean"]
        print(f"{rank:<12} {s1:>11.2f} {s2:>11.2f} {s2 - s1:>8.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
