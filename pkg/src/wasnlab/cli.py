"""Batch entry points: ``generate``, ``enhance``, ``evaluate``.

Each command is deterministic under its seed and re-runnable: output files are
written to temporary names and renamed into place, and per-scene failures in
batch runs are recorded instead of aborting the whole corpus.

Exit codes: 0 success, 1 at least one scene failed, 2 configuration error.
The ``DISCO_WORKERS`` environment variable overrides ``--workers``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import layout
from .errors import InputError, PairingError, ToolkitError
from .evaluation import (BSS_FILTER_LEN, scene_metrics, summarize,
                         write_metrics_csv, write_summary_json)
from .fixtures import is_synthetic_path, resolve_fixture
from .masks import FileMaskProvider, irm
from .pipeline import PipelineConfig, oracle_provider, run_pipeline
from .rooms import SPEED_OF_SOUND, RenderedScene, render_scene, sample_scene
from .scenes import CONFIG_TYPES, N_MICS, N_NODES, read_scene, write_scene
from .signal_io import PIPELINE_RATE, TimeSignal, read_wav, store_mask, write_wav
from .stft import analyze

DEFAULT_DURATION = 8.0


def _versions() -> dict:
    import scipy

    from . import __version__

    return {"wasnlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _worker_count(args) -> int:
    env = os.environ.get("DISCO_WORKERS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InputError(f"DISCO_WORKERS must be an integer, got {env!r}") from exc
    return max(1, args.workers)


def _pool_map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with get_context("fork").Pool(processes=min(workers, len(tasks))) as pool:
        return pool.map(fn, tasks)


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


# ---------------------------------------------------------------- generate

def scene_seed_bundle(master_seed: int, index: int) -> tuple[int, int, int]:
    """Geometry, speech and noise seeds for corpus scene ``index``."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    geo, speech, noise = (int(v) for v in ss.generate_state(3, dtype=np.uint64))
    return geo, speech, noise


def build_corpus_scene(config_type: str, master_seed: int, index: int,
                       speech_path: str = "", noise_path: str = ""):
    """Sample scene ``index`` of a corpus, wiring synthetic fixture paths."""
    geo, sp, nz = scene_seed_bundle(master_seed, index)
    scene_id = f"{config_type}{index:04d}"
    return sample_scene(
        config_type, geo, scene_id=scene_id,
        speech_path=speech_path or f"synthetic:speech:{sp}",
        noise_path=noise_path or f"synthetic:ssn:{nz}",
    )


def materialize_sources(descriptor, duration: float) -> tuple[TimeSignal, TimeSignal]:
    """Load or synthesise the two source signals named by the descriptor."""
    signals = []
    for path in (descriptor.speech_path, descriptor.noise_path):
        if is_synthetic_path(path):
            signals.append(resolve_fixture(path, duration))
        else:
            sig = read_wav(path)
            limit = int(round(duration * sig.sample_rate))
            if len(sig) > limit:
                sig = TimeSignal(sig.samples[:limit], sig.sample_rate)
            signals.append(sig)
    return signals[0], signals[1]


def _pick_file(files: list[Path], rng: np.random.Generator) -> str:
    return str(files[int(rng.integers(len(files)))])


def _store_oracle_masks(root, scene_id: str, rendered, mask_kind: str):
    for k in range(N_NODES):
        speech = analyze(TimeSignal(rendered.speech_images[k, 0], rendered.sample_rate))
        noise = analyze(TimeSignal(rendered.noise_images[k, 0], rendered.sample_rate))
        mask = irm(speech, noise, kind=mask_kind)
        for step in (1, 2):
            path = layout.mask_file(root, scene_id, k, step)
            path.parent.mkdir(parents=True, exist_ok=True)
            store_mask(mask, path)


def _snr_report(sirs: np.ndarray) -> str:
    edges = np.arange(-30.0, 35.0, 5.0)
    counts, _ = np.histogram(sirs, bins=edges)
    lines = ["per-node input SIR histogram (dB):"]
    for lo, c in zip(edges[:-1], counts):
        lines.append(f"  [{lo:+6.1f}, {lo + 5:+6.1f})  {'#' * int(c)} {c}")
    inside = np.mean((sirs >= -10.0) & (sirs <= 10.0)) * 100.0
    lines.append(f"  within [-10, +10] dB: {inside:.1f}% of {sirs.size} node measurements")
    return "\n".join(lines)


def cmd_generate(args) -> int:
    root = Path(args.out)
    speech_files = noise_files = None
    if not args.synthetic_fixtures:
        if not (args.speech_dir and args.noise_dir):
            raise InputError("need --synthetic-fixtures or both --speech-dir and --noise-dir")
        speech_files = sorted(Path(args.speech_dir).glob("*.wav"))
        noise_files = sorted(Path(args.noise_dir).glob("*.wav"))
        if not speech_files or not noise_files:
            raise InputError("empty speech/noise WAV directory")

    layout.scenes_dir(root).mkdir(parents=True, exist_ok=True)
    sirs = []
    scene_ids = []
    for i in range(args.n):
        speech_path = noise_path = ""
        if speech_files is not None:
            _, sp_seed, nz_seed = scene_seed_bundle(args.seed, i)
            speech_path = _pick_file(speech_files, np.random.default_rng(sp_seed))
            noise_path = _pick_file(noise_files, np.random.default_rng(nz_seed))
        descriptor = build_corpus_scene(args.config, args.seed, i, speech_path, noise_path)
        write_scene(descriptor, layout.scene_json(root, descriptor.scene_id))

        speech, noise = materialize_sources(descriptor, args.duration)
        rendered = render_scene(descriptor, speech, noise)
        audio = layout.audio_dir(root, descriptor.scene_id)
        audio.mkdir(parents=True, exist_ok=True)
        for k in range(N_NODES):
            for m in range(N_MICS):
                for kind, img in (("speech", rendered.speech_images),
                                  ("noise", rendered.noise_images),
                                  ("mix", rendered.mixtures)):
                    write_wav(TimeSignal(img[k, m], rendered.sample_rate),
                              layout.image_wav(root, descriptor.scene_id, k, m, kind))
        write_wav(TimeSignal(rendered.speech_dry, rendered.sample_rate),
                  layout.dry_wav(root, descriptor.scene_id, "speech"))
        write_wav(TimeSignal(rendered.noise_dry, rendered.sample_rate),
                  layout.dry_wav(root, descriptor.scene_id, "noise"))
        _store_oracle_masks(root, descriptor.scene_id, rendered, args.mask_kind)
        sirs.extend(rendered.input_sir_db)
        scene_ids.append(descriptor.scene_id)

    _write_json(root / "manifest.json", {
        "command": "generate",
        "config": args.config,
        "n": args.n,
        "seed": args.seed,
        "duration": args.duration,
        "mask_kind": args.mask_kind,
        "synthetic_fixtures": bool(args.synthetic_fixtures),
        "scene_ids": scene_ids,
        "versions": _versions(),
    })
    if args.snr_report:
        print(_snr_report(np.asarray(sirs)))
    return 0


# ----------------------------------------------------------------- enhance

def load_rendered(root, descriptor, all_mics: bool = False) -> RenderedScene:
    """Rebuild a rendered-scene view from stored corpus WAVs.

    Image arrays carry all mics when ``all_mics`` else only the reference
    mic; mixtures always carry all mics (the pipeline filters them).
    """
    sid = descriptor.scene_id
    mics = range(N_MICS) if all_mics else (0,)

    def load(kind):
        return np.stack([
            np.stack([read_wav(layout.image_wav(root, sid, k, m, kind)).samples for m in mics])
            for k in range(N_NODES)
        ])

    mixtures = np.stack([
        np.stack([read_wav(layout.image_wav(root, sid, k, m, "mix")).samples
                  for m in range(N_MICS)])
        for k in range(N_NODES)
    ])
    speech = load("speech")
    noise = load("noise")
    speech_dry = read_wav(layout.dry_wav(root, sid, "speech")).samples
    noise_dry = read_wav(layout.dry_wav(root, sid, "noise")).samples
    target_delays = np.zeros((N_NODES, N_MICS))
    noise_delays = np.zeros((N_NODES, N_MICS))
    for k in range(N_NODES):
        for m in range(N_MICS):
            mic = descriptor.mic_positions[k, m]
            target_delays[k, m] = np.linalg.norm(mic - descriptor.target_position) \
                / SPEED_OF_SOUND * PIPELINE_RATE
            noise_delays[k, m] = np.linalg.norm(mic - descriptor.noise_position) \
                / SPEED_OF_SOUND * PIPELINE_RATE
    return RenderedScene(
        descriptor=descriptor, speech_images=speech, noise_images=noise,
        mixtures=mixtures, speech_dry=speech_dry, noise_dry=noise_dry,
        target_delays=target_delays, noise_delays=noise_delays,
    )


def _mask_provider_for(spec: str, corpus_root, rendered, config):
    if spec == "oracle":
        return oracle_provider(rendered, config)
    if spec.startswith("dir:"):
        return FileMaskProvider(spec[4:])
    raise InputError(f"--mask-provider must be 'oracle' or 'dir:<path>', got {spec!r}")


def _enhance_one(task: dict) -> dict:
    sid = task["scene_id"]
    root = Path(task["corpus"])
    try:
        descriptor = read_scene(layout.scene_json(root, sid))
        rendered = load_rendered(root, descriptor)
        config = PipelineConfig(**task["config"])
        provider = _mask_provider_for(task["mask_provider"], root, rendered, config)
        result = run_pipeline(rendered, provider, config, scene_id=sid, steps=task["steps"])

        n_mix = rendered.mixtures.shape[2]
        out_root = root
        for k, sig in enumerate(result.step1_signals):
            path = layout.output_wav(out_root, task["run"], sid, k, 1)
            path.parent.mkdir(parents=True, exist_ok=True)
            write_wav(TimeSignal(sig.samples[:n_mix], sig.sample_rate), path)
        for k, sig in enumerate(result.step2_signals):
            write_wav(TimeSignal(sig.samples[:n_mix], sig.sample_rate),
                      layout.output_wav(out_root, task["run"], sid, k, 2))
        if task["steps"] == "1":
            for k, sig in enumerate(result.step1_signals):
                write_wav(TimeSignal(sig.samples[:n_mix], sig.sample_rate),
                          layout.z_wav(out_root, task["run"], sid, k, "target"))
            if result.z_noise_signals is not None:
                for k, sig in enumerate(result.z_noise_signals):
                    write_wav(TimeSignal(sig.samples[:n_mix], sig.sample_rate),
                              layout.z_wav(out_root, task["run"], sid, k, "noise"))
        _write_json(layout.scene_manifest(out_root, task["run"], sid), result.manifest)
        return {"scene_id": sid, "ok": True,
                "z_bytes": result.ledger.z_bytes_total,
                "mask_bytes": result.ledger.mask_bytes_total}
    except Exception as exc:  # per-scene isolation: record, keep the batch going
        return {"scene_id": sid, "ok": False, "error": f"{type(exc).__name__}: {exc}"}


def cmd_enhance(args) -> int:
    root = Path(args.corpus)
    if not layout.scenes_dir(root).is_dir():
        raise InputError(f"no scene directory under {root}")
    if args.mask_provider.startswith("dir:") and not Path(args.mask_provider[4:]).is_dir():
        raise InputError(f"mask directory {args.mask_provider[4:]} does not exist")
    scene_ids = args.scenes.split(",") if args.scenes else layout.list_scene_ids(root)
    if not scene_ids:
        raise InputError(f"no scenes found under {root}")

    config = PipelineConfig(mask_policy=args.mask_policy, compressed_type=args.compressed,
                            mu=args.mu)
    tasks = [{
        "scene_id": sid, "corpus": str(root), "run": args.run,
        "config": config.to_dict(), "mask_provider": args.mask_provider,
        "steps": args.steps,
    } for sid in scene_ids]
    results = _pool_map(_enhance_one, tasks, _worker_count(args))

    failures = {r["scene_id"]: r["error"] for r in results if not r["ok"]}
    _write_json(layout.run_manifest(root, args.run), {
        "command": "enhance",
        "run": args.run,
        "config": config.to_dict(),
        "mask_provider": args.mask_provider,
        "steps": args.steps,
        "scenes": {r["scene_id"]: ("ok" if r["ok"] else r["error"]) for r in results},
        "bytes": {
            "z": sum(r.get("z_bytes", 0) for r in results),
            "mask": sum(r.get("mask_bytes", 0) for r in results),
        },
        "versions": _versions(),
    })
    for sid, err in sorted(failures.items()):
        print(f"scene {sid} failed: {err}", file=sys.stderr)
    return 1 if failures else 0


# ---------------------------------------------------------------- evaluate

def _evaluate_one(task: dict) -> dict:
    sid = task["scene_id"]
    root = Path(task["corpus"])
    try:
        descriptor = read_scene(layout.scene_json(root, sid))
        rendered = load_rendered(root, descriptor)
        outputs = {}
        for step in (1, 2):
            paths = [layout.output_wav(root, task["run"], sid, k, step) for k in range(N_NODES)]
            if all(p.is_file() for p in paths):
                outputs[step] = [read_wav(p) for p in paths]
        if not outputs:
            raise PairingError(f"no enhanced outputs for scene {sid} in run {task['run']}")
        rows = scene_metrics(rendered, outputs, scene_id=sid, dry_refs=task["dry_refs"],
                             filter_len=task["filter_len"])
        return {"scene_id": sid, "ok": True, "rows": rows}
    except Exception as exc:
        return {"scene_id": sid, "ok": False, "error": f"{type(exc).__name__}: {exc}"}


def cmd_evaluate(args) -> int:
    root = Path(args.corpus)
    if not layout.run_dir(root, args.run).is_dir():
        raise InputError(f"run {args.run!r} not found under {root}")
    scene_ids = args.scenes.split(",") if args.scenes else layout.list_scene_ids(root)
    tasks = [{
        "scene_id": sid, "corpus": str(root), "run": args.run,
        "dry_refs": args.dry_refs, "filter_len": args.filter_len,
    } for sid in scene_ids]
    results = _pool_map(_evaluate_one, tasks, _worker_count(args))

    rows = [row for r in results if r["ok"] for row in r["rows"]]
    failures = {r["scene_id"]: r["error"] for r in results if not r["ok"]}
    if rows:
        layout.results_dir(root, args.run).mkdir(parents=True, exist_ok=True)
        write_metrics_csv(rows, layout.metrics_csv(root, args.run))
        write_summary_json(summarize(rows), layout.summary_json(root, args.run))
    for sid, err in sorted(failures.items()):
        print(f"scene {sid} failed: {err}", file=sys.stderr)
    if not rows:
        raise PairingError("evaluation produced no rows")
    return 1 if failures else 0


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wasnlab",
                                     description="distributed mask-driven speech enhancement testbed")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="sample and render a scene corpus")
    gen.add_argument("--out", required=True, help="corpus root directory")
    gen.add_argument("--config", choices=CONFIG_TYPES, default="random")
    gen.add_argument("--n", type=int, default=50, help="number of scenes")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--duration", type=float, default=DEFAULT_DURATION,
                     help="source duration in seconds")
    gen.add_argument("--synthetic-fixtures", action="store_true",
                     help="use built-in deterministic speech/noise signals")
    gen.add_argument("--speech-dir", help="directory of 16 kHz mono speech WAVs")
    gen.add_argument("--noise-dir", help="directory of 16 kHz mono noise WAVs")
    gen.add_argument("--mask-kind", choices=("magnitude", "power"), default="magnitude")
    gen.add_argument("--snr-report", action="store_true",
                     help="print a histogram of per-node input SIRs")

    enh = sub.add_parser("enhance", help="run the two-step pipeline over a corpus")
    enh.add_argument("--corpus", required=True)
    enh.add_argument("--run", required=True, help="run name under <corpus>/runs/")
    enh.add_argument("--mask-provider", default="oracle",
                     help="'oracle' or 'dir:<path>' of MSK1 files")
    enh.add_argument("--mask-policy", choices=("local", "distant"), default="local")
    enh.add_argument("--compressed", choices=("target", "noise", "both"), default="target")
    enh.add_argument("--mu", type=float, default=1.0)
    enh.add_argument("--steps", choices=("1", "both"), default="both",
                     help="'1' stops after compression and saves the z signals")
    enh.add_argument("--scenes", help="comma-separated scene ids (default: all)")
    enh.add_argument("--workers", type=int, default=1)

    ev = sub.add_parser("evaluate", help="score a run against the corpus references")
    ev.add_argument("--corpus", required=True)
    ev.add_argument("--run", required=True)
    ev.add_argument("--dry-refs", action="store_true",
                    help="also report SAR against delay-aligned dry sources")
    ev.add_argument("--filter-len", type=int, default=BSS_FILTER_LEN)
    ev.add_argument("--scenes", help="comma-separated scene ids (default: all)")
    ev.add_argument("--workers", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"generate": cmd_generate, "enhance": cmd_enhance, "evaluate": cmd_evaluate}
    try:
        return handler[args.command](args)
    except ToolkitError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
