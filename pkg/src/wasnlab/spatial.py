"""Masked second-order statistics for multichannel STFT data.

Covariances are estimated per frequency bin by averaging masked outer
products across frames. The speech estimate uses the speech mask, the noise
estimate its complement; both get a small trace-relative diagonal load so
downstream generalized eigensolvers see strictly positive definite matrices.

Two mask policies cover the distributed setting, where some channels were
produced by other nodes:

* ``local``   - the receiving node applies its own mask to every channel,
                including the received ones; nothing extra is transmitted.
* ``distant`` - received channels use the mask of the node that produced
                them, which therefore has to be sent along.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SizeError, ValidationError

REG_DELTA = 1e-9
MASK_POLICIES = ("local", "distant")


@dataclass
class StackedSpectra:
    """Channel-stacked STFT data at one node: local mics plus received channels."""

    bins: np.ndarray  # (channels, n_bins, n_frames) complex
    labels: tuple[str, ...]
    n_local: int

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.complex128)
        if self.bins.ndim != 3:
            raise SizeError(f"expected (channels, bins, frames), got {self.bins.shape}")
        if len(self.labels) != self.bins.shape[0]:
            raise SizeError(f"{len(self.labels)} labels for {self.bins.shape[0]} channels")
        if not 0 < self.n_local <= self.bins.shape[0]:
            raise SizeError(f"n_local={self.n_local} out of range")

    @property
    def n_channels(self) -> int:
        return self.bins.shape[0]


@dataclass
class CovariancePair:
    """Per-bin masked speech and noise covariance estimates, (bins, C, C)."""

    speech: np.ndarray
    noise: np.ndarray

    @property
    def mixture(self) -> np.ndarray:
        """Pencil mixture statistic: speech + noise estimates."""
        return self.speech + self.noise


def policy_channel_masks(receiver_mask: np.ndarray, sender_masks: Sequence[np.ndarray],
                         n_local: int, policy: str) -> np.ndarray:
    """Expand per-node masks into one (channels, bins, frames) mask stack.

    ``sender_masks`` are aligned with the received channels in stack order.
    """
    if policy not in MASK_POLICIES:
        raise ValidationError(f"unknown mask policy {policy!r}")
    receiver_mask = np.asarray(receiver_mask, dtype=np.float64)
    n_channels = n_local + len(sender_masks)
    out = np.empty((n_channels,) + receiver_mask.shape, dtype=np.float64)
    out[:n_local] = receiver_mask
    for i, m in enumerate(sender_masks):
        m = np.asarray(m, dtype=np.float64)
        if m.shape != receiver_mask.shape:
            raise SizeError(f"sender mask {i} shape {m.shape} != {receiver_mask.shape}")
        out[n_local + i] = receiver_mask if policy == "local" else m
    return out


def _outer_average(masked: np.ndarray) -> np.ndarray:
    n_frames = masked.shape[2]
    cov = np.einsum("cft,dft->fcd", masked, masked.conj()) / n_frames
    return 0.5 * (cov + cov.conj().transpose(0, 2, 1))  # enforce exact Hermitian


def _regularise(cov: np.ndarray, power_scale: np.ndarray, delta: float) -> np.ndarray:
    """Trace-relative diagonal loading; degenerate bins fall back to scaled identity."""
    n_channels = cov.shape[1]
    trace = np.einsum("fcc->f", cov).real / n_channels
    dead = trace <= 0.0
    if np.any(dead):
        fallback = delta * np.where(power_scale > 0.0, power_scale, 1.0)
        cov[dead] = fallback[dead, None, None] * np.eye(n_channels)
        trace = np.where(dead, 0.0, trace)
    cov += (delta * trace)[:, None, None] * np.eye(n_channels)
    return cov


def masked_covariances(spectra: np.ndarray, channel_masks: np.ndarray,
                       delta: float = REG_DELTA) -> CovariancePair:
    """Estimate speech/noise covariances from masked frames.

    Parameters
    ----------
    spectra : (channels, bins, frames) complex array
    channel_masks : matching speech-mask stack in [0, 1]; the noise side
        uses ``1 - mask`` per cell.
    delta : relative diagonal loading.
    """
    spectra = np.asarray(spectra, dtype=np.complex128)
    channel_masks = np.asarray(channel_masks, dtype=np.float64)
    if spectra.shape != channel_masks.shape:
        raise SizeError(f"spectra {spectra.shape} vs masks {channel_masks.shape}")
    if spectra.ndim != 3:
        raise SizeError(f"expected 3-D (channels, bins, frames), got {spectra.shape}")

    speech = _outer_average(spectra * channel_masks)
    noise = _outer_average(spectra * (1.0 - channel_masks))
    # raw per-bin mixture power, used to scale the identity fallback of dead bins
    power_scale = np.mean(np.abs(spectra) ** 2, axis=(0, 2))
    return CovariancePair(
        speech=_regularise(speech, power_scale, delta),
        noise=_regularise(noise, power_scale, delta),
    )
