"""Windowed training data: magnitude channels in, oracle-mask frames out.

Recipes decide the input channels of one sample, always led by the node's
reference-mic mixture magnitude:

* ``single``        1 channel  (reference only)
* ``multi_target``  4 channels (reference + the 3 other nodes' z_target)
* ``multi_both``    7 channels (reference + 3 z_target + 3 z_noise)

Compressed-signal channels come from a named ``--steps 1`` run of the
consumer; they are ordered by ascending sender id, target before noise, the
same order the pipeline stacks them. Each sample is a 21-frame window of all
channels; the target is the stored oracle-mask column at the window centre.
Edge windows reflect the utterance instead of zero-padding so every frame of
an utterance is a sample.

Normalisation (on by default, recorded in checkpoints) is per utterance and
per channel: subtract the scalar mean, divide by the scalar standard
deviation of that channel's magnitudes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch.utils.data import Dataset

from . import corpus
from .errors import DatasetError, SizeError
from .mskio import read_msk
from .spectra import wav_magnitudes

WINDOW = 21
HALF = WINDOW // 2

RECIPES = {
    "single": (),
    "multi_target": ("target",),
    "multi_both": ("target", "noise"),
}


def recipe_channels(recipe: str) -> int:
    if recipe not in RECIPES:
        raise DatasetError(f"unknown recipe {recipe!r} (have {sorted(RECIPES)})")
    return 1 + (corpus.N_NODES - 1) * len(RECIPES[recipe])


def reflect_indices(n_frames: int) -> np.ndarray:
    """(n_frames, WINDOW) frame indices; edges mirror without repeating."""
    if n_frames < 2:
        raise SizeError(f"utterance of {n_frames} frames cannot be windowed")
    span = np.arange(-HALF, HALF + 1)[None, :] + np.arange(n_frames)[:, None]
    period = 2 * (n_frames - 1)  # mirror indices may bounce more than once
    folded = np.abs(span) % period
    return np.where(folded < n_frames, folded, period - folded)


def normalize_channels(channels: np.ndarray) -> np.ndarray:
    mean = channels.mean(axis=(1, 2), keepdims=True)
    std = channels.std(axis=(1, 2), keepdims=True)
    return (channels - mean) / np.maximum(std, 1e-8)


def load_channels(root, scene_id: str, node: int, recipe: str,
                  z_run: str | None = None, normalize: bool = True) -> np.ndarray:
    """Input channels (C, N_BINS, T) float32 for one node of one scene."""
    kinds = RECIPES.get(recipe)
    if kinds is None:
        raise DatasetError(f"unknown recipe {recipe!r} (have {sorted(RECIPES)})")
    if kinds and not z_run:
        raise DatasetError(f"recipe {recipe!r} needs a --steps 1 run for z channels")

    paths = [corpus.mix_wav(root, scene_id, node)]
    for kind in kinds:
        for sender in range(corpus.N_NODES):
            if sender != node:
                paths.append(corpus.z_wav(root, z_run, scene_id, sender, kind))
    missing = [p for p in paths if not p.is_file()]
    if missing:
        raise DatasetError(f"missing corpus audio: {missing[0]}")

    channels = np.stack([wav_magnitudes(p) for p in paths])
    if normalize:
        channels = normalize_channels(channels).astype(np.float32)
    return channels


def load_utterance(root, scene_id: str, node: int, recipe: str,
                   z_run: str | None = None, normalize: bool = True):
    """(channels (C, N_BINS, T) float32, target (N_BINS, T) float32)."""
    channels = load_channels(root, scene_id, node, recipe, z_run, normalize)
    target = read_msk(corpus.oracle_mask(root, scene_id, node))
    if target.shape != channels.shape[1:]:
        raise SizeError(f"mask grid {target.shape} does not match "
                        f"spectrogram grid {channels.shape[1:]} for {scene_id}")
    return channels, target


@dataclass
class _Utterance:
    channels: np.ndarray  # (C, N_BINS, T)
    target: np.ndarray  # (N_BINS, T)
    frames: np.ndarray  # window centres used as samples
    windows: np.ndarray  # reflect_indices(T)


class MaskWindowDataset(Dataset):
    """All (window, centre-frame mask) pairs of the listed scenes.

    ``stride`` subsamples window centres to keep desk-scale training cheap;
    inference always uses stride 1.
    """

    def __init__(self, root, scene_list: list[str], recipe: str,
                 z_run: str | None = None, stride: int = 1, normalize: bool = True):
        if stride < 1:
            raise DatasetError(f"stride must be >= 1, got {stride}")
        self.recipe = recipe
        self.normalize = normalize
        self.n_channels = recipe_channels(recipe)
        self._utterances: list[_Utterance] = []
        self._index: list[tuple[int, int]] = []  # (utterance, row into frames)
        for scene_id in scene_list:
            for node in range(corpus.N_NODES):
                channels, target = load_utterance(root, scene_id, node, recipe,
                                                  z_run, normalize)
                frames = np.arange(0, channels.shape[2], stride)
                utt = _Utterance(channels, target, frames,
                                 reflect_indices(channels.shape[2]))
                self._utterances.append(utt)
                self._index.extend((len(self._utterances) - 1, r)
                                   for r in range(len(frames)))
        if not self._index:
            raise DatasetError("dataset is empty")

    def __len__(self) -> int:
        return len(self._index)

    def __getitem__(self, i: int):
        u, row = self._index[i]
        utt = self._utterances[u]
        t = utt.frames[row]
        window = utt.channels[:, :, utt.windows[t]]  # (C, N_BINS, WINDOW)
        x = torch.from_numpy(np.ascontiguousarray(window.transpose(0, 2, 1)))
        y = torch.from_numpy(utt.target[:, t].astype(np.float32))
        return x, y


def split_scenes(ids: list[str], val_fraction: float, seed: int) -> tuple[list[str], list[str]]:
    """Deterministic scene-level split; validation never shares a scene."""
    if not 0.0 <= val_fraction < 1.0:
        raise DatasetError(f"val_fraction must be in [0, 1), got {val_fraction}")
    order = list(np.random.default_rng(seed).permutation(sorted(ids)))
    n_val = int(round(val_fraction * len(order)))
    return sorted(order[n_val:]), sorted(order[:n_val])
