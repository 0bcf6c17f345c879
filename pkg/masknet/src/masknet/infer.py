"""Mask inference over whole utterances.

Windows are taken at every frame (hop 1) with reflected edges; the network's
centre-frame output is the mask column for that frame, so stitching is just
concatenation and the emitted grid matches the spectrogram frame for frame.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from . import corpus
from .dataset import load_channels, reflect_indices
from .errors import SizeError
from .mskio import write_msk
from .spectra import N_BINS


def predict_mask(model, channels: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """(C, N_BINS, T) magnitudes -> (N_BINS, T) mask in [0, 1]."""
    if channels.ndim != 3 or channels.shape[1] != N_BINS:
        raise SizeError(f"expected (channels, {N_BINS}, frames) magnitudes, "
                        f"got {tuple(channels.shape)}")
    windows = reflect_indices(channels.shape[2])
    columns = []
    model.eval()
    with torch.no_grad():
        for start in range(0, len(windows), batch_size):
            # (B, C, N_BINS, WINDOW) -> (B, C, WINDOW, N_BINS)
            batch = channels[:, :, windows[start:start + batch_size]]
            x = torch.from_numpy(np.ascontiguousarray(
                batch.transpose(2, 0, 3, 1)))
            columns.append(model(x).numpy())
    mask = np.concatenate(columns).T.astype(np.float32)
    return np.clip(mask, 0.0, 1.0)


def write_scene_masks(model, bundle: dict, root: Path, mask_root: Path,
                      scene_id: str, steps: tuple[int, ...],
                      z_run: str | None = None, batch_size: int = 256) -> None:
    """Estimate and store masks for every node of one scene.

    The same estimate serves every requested filter step; a two-step consumer
    wanting different step-1 masks can point its mask directory elsewhere.
    """
    for node in range(corpus.N_NODES):
        channels = load_channels(root, scene_id, node, bundle["recipe"],
                                 z_run, bundle["normalize"])
        mask = predict_mask(model, channels, batch_size)
        for step in steps:
            path = corpus.mask_out(mask_root, scene_id, node, step)
            path.parent.mkdir(parents=True, exist_ok=True)
            write_msk(mask, path)
