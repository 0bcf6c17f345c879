"""Audio and mask file I/O.

WAV handling is delegated to :mod:`scipy.io.wavfile` (RIFF parsing) behind a
validation layer that enforces the pipeline contract: 16 kHz, PCM-16 or
IEEE-float-32, and integer normalisation by 32768 so that -32768 maps exactly
to -1.0.

Masks travel in the minimal MSK1 binary format::

    bytes 0..3   magic "MSK1"
    bytes 4..7   n_bins,   uint32 little-endian
    bytes 8..11  n_frames, uint32 little-endian
    bytes 12..   n_bins * n_frames float32 little-endian, row-major

All values are gains in [0, 1]; the loader clamps out-of-range cells and
counts them.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile

from .errors import (
    DegenerateInputError,
    FormatError,
    RateError,
    TruncationError,
)
from .masks import TfMask

PIPELINE_RATE = 16000
_PCM16_SCALE = 32768.0
_MSK1_MAGIC = b"MSK1"


@dataclass
class TimeSignal:
    """Mono sampled waveform; the universal audio currency of the toolkit."""

    samples: np.ndarray
    sample_rate: int = PIPELINE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise FormatError(f"TimeSignal must be mono, got shape {self.samples.shape}")
        if self.samples.size == 0:
            raise DegenerateInputError("TimeSignal must contain at least one sample")
        if self.sample_rate <= 0:
            raise RateError(f"sample rate must be positive, got {self.sample_rate}")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def __len__(self) -> int:
        return self.samples.size


def read_wav(path, channel: int | None = None) -> TimeSignal:
    """Read a 16 kHz RIFF/WAV file into a :class:`TimeSignal`.

    Integer PCM-16 samples are normalised by 32768; float-32 payloads are
    taken verbatim. Multichannel files require an explicit ``channel``.
    """
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:  # scipy raises bare ValueError on bad containers
        raise FormatError(f"unreadable WAV container {path}: {exc}") from exc

    if rate != PIPELINE_RATE:
        raise RateError(
            f"{path}: sample rate {rate} Hz unsupported, pipeline runs at {PIPELINE_RATE} Hz"
        )

    if data.ndim == 2:
        if channel is None:
            raise FormatError(
                f"{path}: file has {data.shape[1]} channels, select one explicitly"
            )
        if not 0 <= channel < data.shape[1]:
            raise FormatError(f"{path}: channel {channel} out of range")
        data = data[:, channel]
    elif channel not in (None, 0):
        raise FormatError(f"{path}: mono file, channel {channel} out of range")

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / _PCM16_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise FormatError(
            f"{path}: codec {data.dtype} unsupported (PCM-16 or IEEE float-32 only)"
        )
    return TimeSignal(samples, rate)


def write_wav(signal: TimeSignal, path, codec: str = "float32") -> int:
    """Write ``signal`` to ``path``; returns the number of clipped samples.

    ``float32`` round-trips losslessly through :func:`read_wav` for values
    already representable in single precision. ``pcm16`` clips to [-1, 1]
    and quantises with step 1/32768.
    """
    x = signal.samples
    if codec == "float32":
        wavfile.write(path, signal.sample_rate, x.astype(np.float32))
        return 0
    if codec == "pcm16":
        clipped = int(np.count_nonzero((x > 1.0) | (x < -1.0)))
        y = np.clip(x, -1.0, 1.0)
        ints = np.clip(np.round(y * _PCM16_SCALE), -32768, 32767).astype(np.int16)
        wavfile.write(path, signal.sample_rate, ints)
        return clipped
    raise FormatError(f"unknown codec {codec!r} (expected 'pcm16' or 'float32')")


def store_mask(mask: TfMask, path) -> None:
    """Store a mask in MSK1 format (float32 on disk)."""
    values = np.asarray(mask.values, dtype=np.float32)
    n_bins, n_frames = values.shape
    with open(path, "wb") as fh:
        fh.write(_MSK1_MAGIC)
        fh.write(struct.pack("<II", n_bins, n_frames))
        fh.write(values.tobytes(order="C"))


def load_mask(path) -> TfMask:
    """Load an MSK1 mask; out-of-range cells are clamped and counted."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != _MSK1_MAGIC:
        raise FormatError(f"{path}: bad magic, not an MSK1 file")
    n_bins, n_frames = struct.unpack("<II", blob[4:12])
    expected = 12 + 4 * n_bins * n_frames
    if len(blob) < expected:
        raise TruncationError(
            f"{path}: payload truncated, expected {expected} bytes, got {len(blob)}"
        )
    raw = np.frombuffer(blob[12:expected], dtype="<f4").reshape(n_bins, n_frames)
    values = raw.astype(np.float64)
    clamped = int(np.count_nonzero((values < 0.0) | (values > 1.0)))
    if clamped:
        warnings.warn(f"{path}: clamped {clamped} mask cells into [0, 1]", stacklevel=2)
        values = np.clip(values, 0.0, 1.0)
    return TfMask(values=values, clamped_cells=clamped)
