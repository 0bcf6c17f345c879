"""Time-frequency masks: ideal ratio masks, complements, and providers.

A mask is a per-cell gain in [0, 1] on the same (bins x frames) grid as the
spectrogram it applies to. Masks enter the pipeline either from an oracle
(computed from the clean per-node image signals) or from MSK1 files produced
by an external estimator, resolved as::

    <mask_dir>/<scene_id>/node<k>_step<1|2>.msk     (k is 1-based)
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ResolutionError, SizeError

MASK_FILENAME = "node{node}_step{step}.msk"


@dataclass
class TfMask:
    """Real-valued gain matrix, n_bins x n_frames, elementwise in [0, 1]."""

    values: np.ndarray
    clamped_cells: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise SizeError(f"mask must be 2-D, got shape {self.values.shape}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def irm(speech_spec, noise_spec, kind: str = "magnitude") -> TfMask:
    """Ideal ratio mask of clean speech against noise.

    ``magnitude`` computes |S| / (|S| + |N|); ``power`` computes
    |S|^2 / (|S|^2 + |N|^2). Cells where both magnitudes vanish get the
    neutral value 0.5 so silent regions bias neither statistic.
    """
    s = np.abs(np.asarray(speech_spec.bins if hasattr(speech_spec, "bins") else speech_spec))
    n = np.abs(np.asarray(noise_spec.bins if hasattr(noise_spec, "bins") else noise_spec))
    if s.shape != n.shape:
        raise SizeError(f"grid mismatch: speech {s.shape} vs noise {n.shape}")
    if kind == "power":
        s = s * s
        n = n * n
    elif kind != "magnitude":
        raise ValueError(f"unknown IRM kind {kind!r}")
    denom = s + n
    values = np.full(s.shape, 0.5)
    live = denom > 0.0
    values[live] = s[live] / denom[live]
    return TfMask(np.clip(values, 0.0, 1.0))


def complement(mask: TfMask) -> TfMask:
    """Noise-side mask, 1 - values. An exact involution."""
    return TfMask(1.0 - mask.values)


class OracleIrmProvider:
    """Serves the IRM at each node's reference microphone.

    Built from the per-node clean-image spectrograms of a rendered scene;
    steps 1 and 2 see the same oracle mask.
    """

    mode = "oracle_irm"

    def __init__(self, node_specs, kind: str = "magnitude"):
        # node_specs: {node_index: (speech_spectrogram, noise_spectrogram)}
        self._masks = {k: irm(s, n, kind=kind) for k, (s, n) in node_specs.items()}

    def mask_for(self, scene_id: str, node: int, step: int) -> TfMask:
        if node not in self._masks:
            raise ResolutionError(
                f"oracle provider has no spectra for node {node} (scene {scene_id})"
            )
        return self._masks[node]


class FileMaskProvider:
    """Loads externally estimated masks from the documented MSK1 layout."""

    mode = "external_file"

    def __init__(self, mask_dir):
        self.mask_dir = Path(mask_dir)

    def path_for(self, scene_id: str, node: int, step: int) -> Path:
        return self.mask_dir / scene_id / MASK_FILENAME.format(node=node + 1, step=step)

    def mask_for(self, scene_id: str, node: int, step: int) -> TfMask:
        path = self.path_for(scene_id, node, step)
        if not path.is_file():
            raise ResolutionError(
                f"no mask file for scene={scene_id} node={node + 1} step={step} at {path}"
            )
        from .signal_io import load_mask

        return load_mask(path)


def get_mask(provider, scene_id: str, node: int, step: int, grid: tuple[int, int]) -> TfMask:
    """Fetch a mask and verify it matches the requesting spectrogram grid."""
    mask = provider.mask_for(scene_id, node, step)
    if mask.shape != tuple(grid):
        raise SizeError(
            f"mask grid {mask.shape} does not match spectrogram grid {tuple(grid)} "
            f"(scene={scene_id} node={node + 1} step={step})"
        )
    return mask
