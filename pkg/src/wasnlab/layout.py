"""On-disk corpus and run layout shared by the CLI and external mask tools.

::

    <corpus>/
      manifest.json                       generation args + library versions
      scenes/<scene_id>.json              scene descriptors
      audio/<scene_id>/node<k>_mic<m>_{speech,noise,mix}.wav   (k, m 1-based)
      audio/<scene_id>/{speech,noise}_dry.wav
      masks/<scene_id>/node<k>_step<1|2>.msk                   oracle IRMs
      runs/<run>/
        manifest.json                     enhance config + per-scene status
        manifests/<scene_id>.json         per-scene pipeline manifest
        outputs/<scene_id>_node<k>_step<1|2>.wav
        outputs/<scene_id>_node<k>_z{target,noise}.wav         (--steps 1 runs)
        results/metrics.csv, summary.json

External mask estimators replace or add ``masks/<scene_id>/node<k>_step<s>.msk``
files (or provide their own directory with the same shape) and are otherwise
decoupled from this package.
"""

from __future__ import annotations

from pathlib import Path


def scenes_dir(root) -> Path:
    return Path(root) / "scenes"


def scene_json(root, scene_id: str) -> Path:
    return scenes_dir(root) / f"{scene_id}.json"


def list_scene_ids(root) -> list[str]:
    return sorted(p.stem for p in scenes_dir(root).glob("*.json"))


def audio_dir(root, scene_id: str) -> Path:
    return Path(root) / "audio" / scene_id


def image_wav(root, scene_id: str, node: int, mic: int, kind: str) -> Path:
    # node/mic are 0-based in code, 1-based in filenames
    return audio_dir(root, scene_id) / f"node{node + 1}_mic{mic + 1}_{kind}.wav"


def dry_wav(root, scene_id: str, kind: str) -> Path:
    return audio_dir(root, scene_id) / f"{kind}_dry.wav"


def masks_dir(root, scene_id: str = "") -> Path:
    base = Path(root) / "masks"
    return base / scene_id if scene_id else base


def mask_file(root, scene_id: str, node: int, step: int) -> Path:
    return masks_dir(root, scene_id) / f"node{node + 1}_step{step}.msk"


def run_dir(root, run: str) -> Path:
    return Path(root) / "runs" / run


def run_manifest(root, run: str) -> Path:
    return run_dir(root, run) / "manifest.json"


def scene_manifest(root, run: str, scene_id: str) -> Path:
    return run_dir(root, run) / "manifests" / f"{scene_id}.json"


def output_wav(root, run: str, scene_id: str, node: int, step: int) -> Path:
    return run_dir(root, run) / "outputs" / f"{scene_id}_node{node + 1}_step{step}.wav"


def z_wav(root, run: str, scene_id: str, node: int, kind: str) -> Path:
    return run_dir(root, run) / "outputs" / f"{scene_id}_node{node + 1}_z{kind}.wav"


def results_dir(root, run: str) -> Path:
    return run_dir(root, run) / "results"


def metrics_csv(root, run: str) -> Path:
    return results_dir(root, run) / "metrics.csv"


def summary_json(root, run: str) -> Path:
    return results_dir(root, run) / "summary.json"
