"""Read-only view of a wasnlab corpus tree (see its docs/formats.md).

Only the paths this package actually consumes are spelled out: reference-mic
mixtures, stored oracle masks (training targets) and the compressed-signal
WAVs of a ``--steps 1`` run (extra input channels for multi-node recipes).
"""

from __future__ import annotations

from pathlib import Path

from .errors import DatasetError

N_NODES = 4
REF_MIC = 1  # 1-based in filenames


def scene_ids(corpus) -> list[str]:
    ids = sorted(p.stem for p in (Path(corpus) / "scenes").glob("*.json"))
    if not ids:
        raise DatasetError(f"no scenes under {corpus}")
    return ids


def mix_wav(corpus, scene_id: str, node: int) -> Path:
    return Path(corpus) / "audio" / scene_id / f"node{node + 1}_mic{REF_MIC}_mix.wav"


def oracle_mask(corpus, scene_id: str, node: int, step: int = 1) -> Path:
    return Path(corpus) / "masks" / scene_id / f"node{node + 1}_step{step}.msk"


def z_wav(corpus, run: str, scene_id: str, node: int, kind: str) -> Path:
    return Path(corpus) / "runs" / run / "outputs" / f"{scene_id}_node{node + 1}_z{kind}.wav"


def mask_out(mask_root, scene_id: str, node: int, step: int) -> Path:
    """Where the consumer's ``dir:`` provider expects an emitted mask."""
    return Path(mask_root) / scene_id / f"node{node + 1}_step{step}.msk"
