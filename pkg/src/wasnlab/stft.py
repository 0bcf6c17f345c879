"""STFT analysis/synthesis with the pipeline framing (32 ms Hann, 16 ms hop).

Analysis uses a periodic (DFT-even) Hann window, which is exactly COLA at
50% overlap. Synthesis is weighted overlap-add with the analysis window and
explicit window-square normalisation, so the interior of any signal
round-trips to double-precision accuracy. All internal processing is
float64/complex128; only file interchange is single precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SizeError
from .signal_io import PIPELINE_RATE, TimeSignal

FRAME_SIZE = 512
HOP = 256
N_BINS = FRAME_SIZE // 2 + 1


def hann_periodic(n: int) -> np.ndarray:
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))


@dataclass
class Spectrogram:
    """One-sided complex STFT, n_bins x n_frames."""

    bins: np.ndarray
    frame_size: int = FRAME_SIZE
    hop: int = HOP
    sample_rate: int = PIPELINE_RATE

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.complex128)
        if self.bins.ndim != 2:
            raise SizeError(f"spectrogram must be 2-D, got shape {self.bins.shape}")
        if self.bins.shape[0] != self.frame_size // 2 + 1:
            raise SizeError(
                f"{self.bins.shape[0]} bins inconsistent with frame size {self.frame_size}"
            )

    @property
    def n_bins(self) -> int:
        return self.bins.shape[0]

    @property
    def n_frames(self) -> int:
        return self.bins.shape[1]

    @property
    def grid(self) -> tuple[int, int]:
        return self.bins.shape


def analyze(signal: TimeSignal, frame_size: int = FRAME_SIZE, hop: int = HOP) -> Spectrogram:
    """Windowed one-sided STFT; frame t covers samples [t*hop, t*hop+frame_size).

    The trailing partial frame is zero-padded, never truncated, so utterance
    tails survive the transform.
    """
    x = signal.samples
    if x.size < frame_size:
        raise SizeError(f"signal of {x.size} samples shorter than one frame ({frame_size})")
    n_frames = int(np.ceil(x.size / hop))
    padded = np.zeros((n_frames - 1) * hop + frame_size)
    padded[: x.size] = x
    window = hann_periodic(frame_size)
    offsets = np.arange(n_frames)[:, None] * hop + np.arange(frame_size)[None, :]
    frames = padded[offsets] * window
    bins = np.fft.rfft(frames, axis=1).T
    return Spectrogram(bins, frame_size=frame_size, hop=hop, sample_rate=signal.sample_rate)


# Below this level the window-square sum is only reached inside the first and
# last half frame. Flooring the normalisation there turns the boundary into a
# gentle fade instead of a division by a vanishing window value, which would
# amplify any spectrogram modification (masking, beamforming weights) into a
# loud click at sample zero. Interior values sit in [0.5, 1.0] and are never
# touched by the floor, so interior reconstruction stays exact.
NORM_FLOOR = 0.1


def synthesize(spec: Spectrogram) -> TimeSignal:
    """Weighted overlap-add inverse; returns ceil(len/hop)*hop + frame - hop samples.

    The caller trims to the original length. Reconstruction of the interior
    (beyond the first/last frame) is exact to ~1e-15 relative; the guarantee
    is <= 1e-10 max abs error. The outermost samples, where the window-square
    sum drops below NORM_FLOOR, fade out instead of being renormalised.
    """
    frame_size, hop = spec.frame_size, spec.hop
    frames = np.fft.irfft(spec.bins.T, n=frame_size, axis=1)
    window = hann_periodic(frame_size)
    n_frames = spec.n_frames
    out_len = (n_frames - 1) * hop + frame_size
    acc = np.zeros(out_len)
    norm = np.zeros(out_len)
    wsq = window * window
    for t in range(n_frames):
        start = t * hop
        acc[start : start + frame_size] += frames[t] * window
        norm[start : start + frame_size] += wsq
    acc /= np.maximum(norm, NORM_FLOOR)
    return TimeSignal(acc, spec.sample_rate)
