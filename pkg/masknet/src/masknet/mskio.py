"""MSK1 mask files: magic ``MSK1``, two little-endian uint32 dims, float32 grid.

This is an independent implementation of the interchange format, kept in sync
with docs/formats.md of the consuming package rather than with its code.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError, SizeError

MAGIC = b"MSK1"
HEADER = struct.Struct("<II")


def write_msk(values: np.ndarray, path) -> None:
    """Write a (n_bins, n_frames) mask; values must already be in [0, 1]."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise SizeError(f"mask must be 2-D, got shape {values.shape}")
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise FormatError("mask values outside [0, 1]; refusing to write")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(HEADER.pack(*values.shape))
        fh.write(values.astype("<f4").tobytes(order="C"))


def read_msk(path) -> np.ndarray:
    """Read an MSK1 file into a float32 (n_bins, n_frames) array."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise FormatError(f"{path}: not an MSK1 file")
    n_bins, n_frames = HEADER.unpack(blob[4:12])
    end = 12 + 4 * n_bins * n_frames
    if len(blob) < end:
        raise FormatError(f"{path}: truncated payload ({len(blob)} of {end} bytes)")
    return np.frombuffer(blob[12:end], dtype="<f4").reshape(n_bins, n_frames).copy()
