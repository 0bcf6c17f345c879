"""Command line entry points.

``masknet train --manifest run.json`` fits a model from a small JSON recipe
file; ``masknet infer`` writes mask files that the enhancement CLI consumes
via its file mask provider. Exit code 0 on success, 2 on any input or
training problem.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from . import corpus
from .errors import InputError, MasknetError
from .train import TrainConfig, load_checkpoint, train


def _load_manifest(path: Path) -> TrainConfig:
    try:
        raw = json.loads(path.read_text())
    except OSError as err:
        raise InputError(f"cannot read manifest: {err}") from err
    except json.JSONDecodeError as err:
        raise InputError(f"manifest is not valid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise InputError("manifest must be a JSON object")
    known = {f.name for f in fields(TrainConfig)}
    unknown = set(raw) - known
    if unknown:
        raise InputError(f"unknown manifest keys: {sorted(unknown)}")
    for key in ("corpus", "out"):
        if key not in raw:
            raise InputError(f"manifest is missing {key!r}")
        raw[key] = Path(raw[key])
    return TrainConfig(**raw)


def _cmd_train(args) -> int:
    config = _load_manifest(Path(args.manifest))
    checkpoint = train(config)
    print(f"checkpoint {checkpoint}")
    return 0


def _parse_steps(text: str) -> tuple[int, ...]:
    try:
        steps = tuple(sorted({int(part) for part in text.split(",")}))
    except ValueError as err:
        raise InputError(f"bad --steps value {text!r}") from err
    if not steps or any(step not in (1, 2) for step in steps):
        raise InputError(f"steps must be within 1,2, got {text!r}")
    return steps


def _cmd_infer(args) -> int:
    from .infer import write_scene_masks

    root = Path(args.corpus)
    model, bundle = load_checkpoint(Path(args.model))
    scene_list = args.scenes or corpus.scene_ids(root)
    unknown = set(scene_list) - set(corpus.scene_ids(root))
    if unknown:
        raise InputError(f"scenes not in corpus: {sorted(unknown)}")
    steps = _parse_steps(args.steps)
    mask_root = Path(args.out)
    for scene_id in scene_list:
        write_scene_masks(model, bundle, root, mask_root, scene_id, steps,
                          args.z_run, args.batch_size)
    print(f"masks for {len(scene_list)} scenes in {mask_root}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="masknet",
                                     description="learned mask estimation")
    commands = parser.add_subparsers(dest="command", required=True)

    cmd = commands.add_parser("train", help="fit a model from a JSON manifest")
    cmd.add_argument("--manifest", required=True,
                     help="JSON file of TrainConfig fields")
    cmd.set_defaults(handler=_cmd_train)

    cmd = commands.add_parser("infer", help="write mask files for a corpus")
    cmd.add_argument("--model", required=True, help="checkpoint from train")
    cmd.add_argument("--corpus", required=True)
    cmd.add_argument("--out", required=True, help="mask directory to fill")
    cmd.add_argument("--scenes", nargs="*", default=None)
    cmd.add_argument("--steps", default="1,2",
                     help="comma-joined filter steps to cover (default 1,2)")
    cmd.add_argument("--z-run", default=None,
                     help="run name supplying compressed-signal channels")
    cmd.add_argument("--batch-size", type=int, default=256)
    cmd.set_defaults(handler=_cmd_infer)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (MasknetError, OSError) as err:
        print(f"masknet: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
