"""Magnitude spectrograms on the pipeline grid (512-sample Hann, hop 256).

The framing must reproduce the consumer's grid exactly, otherwise predicted
masks would be rejected at apply time: frame t covers samples
[t*hop, t*hop + frame), the window is periodic Hann, the trailing partial
frame is zero-padded, and the frame count is ceil(len / hop).
"""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile

from .errors import FormatError

SAMPLE_RATE = 16000
FRAME = 512
HOP = 256
N_BINS = FRAME // 2 + 1


def read_wav_mono(path) -> np.ndarray:
    """Load a 16 kHz mono WAV (pcm16 or float32) as float64 samples."""
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if rate != SAMPLE_RATE:
        raise FormatError(f"{path}: expected {SAMPLE_RATE} Hz, got {rate}")
    if data.ndim != 1:
        raise FormatError(f"{path}: expected mono, got shape {data.shape}")
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0
    if data.dtype == np.float32:
        return data.astype(np.float64)
    raise FormatError(f"{path}: unsupported sample dtype {data.dtype}")


def magnitudes(samples: np.ndarray) -> np.ndarray:
    """One-sided STFT magnitudes, (N_BINS, n_frames) float32."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < FRAME:
        raise FormatError(f"signal of {x.size} samples is shorter than one frame")
    n_frames = int(np.ceil(x.size / HOP))
    padded = np.zeros((n_frames - 1) * HOP + FRAME)
    padded[: x.size] = x
    window = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(FRAME) / FRAME))
    offsets = np.arange(n_frames)[:, None] * HOP + np.arange(FRAME)[None, :]
    bins = np.fft.rfft(padded[offsets] * window, axis=1)
    return np.abs(bins).T.astype(np.float32)


def wav_magnitudes(path) -> np.ndarray:
    return magnitudes(read_wav_mono(path))
