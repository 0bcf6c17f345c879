#!/usr/bin/env python3
"""Build a desk corpus and compare the local and distant mask policies.

Runs oracle-mask enhancement twice over the same scenes, evaluates both runs,
and prints best-output-node delta SIR / SAR per step next to the exchanged
byte counts. An existing corpus at --out is reused, so repeated invocations
only pay for the enhancement runs.
"""

import argparse
import json
import sys
from pathlib import Path

from wasnlab import layout
from wasnlab.cli import main as wasnlab_main

POLICIES = ("local", "distant")


def run(argv) -> None:
    rc = wasnlab_main([str(a) for a in argv])
    if rc != 0:
        sys.exit(rc)


def best_output(summary: dict, metric: str, step: int) -> float:
    return summary["selectors"]["best_output"][f"step{step}"][metric]["mean"]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="corpus root (created if missing)")
    parser.add_argument("--config", default="random", choices=("random", "living", "meeting"))
    parser.add_argument("--n", type=int, default=50)
    parser.add_argument("--seed", type=int, default=20260825)
    parser.add_argument("--duration", type=float, default=8.0)
    parser.add_argument("--mu", type=float, default=1.0)
    parser.add_argument("--workers", type=int, default=4)
    args = parser.parse_args()

    root = Path(args.out)
    if not (root / "manifest.json").is_file():
        run(["generate", "--out", root, "--config", args.config, "--n", args.n,
             "--seed", args.seed, "--duration", args.duration, "--synthetic-fixtures"])

    rows = []
    for policy in POLICIES:
        name = f"oracle_{policy}"
        run(["enhance", "--corpus", root, "--run", name, "--mask-provider", "oracle",
             "--mask-policy", policy, "--mu", args.mu, "--workers", args.workers])
        run(["evaluate", "--corpus", root, "--run", name, "--workers", args.workers])
        summary = json.loads(layout.summary_json(root, name).read_text())
        manifest = json.loads(layout.run_manifest(root, name).read_text())
        for step in (1, 2):
            rows.append((policy, step,
                         best_output(summary, "delta_sir_db", step),
                         best_output(summary, "sar_cnv_db", step),
                         manifest["bytes"]["z"], manifest["bytes"]["mask"]))

    print(f"\n{args.n} x {args.config} scenes, oracle masks, mu={args.mu}, "
          "best output node per scene")
    print(f"{'policy':<8} {'step':>4} {'dSIR dB':>9} {'SAR dB':>8} "
          f"{'z bytes':>13} {'mask bytes':>11}")
    for policy, step, dsir, sar, z, mask in rows:
        print(f"{policy:<8} {step:>4} {dsir:>9.2f} {sar:>8.2f} {z:>13} {mask:>11}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
