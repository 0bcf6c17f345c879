"""Deterministic synthetic source material for self-contained experiments.

Real corpora stay out of the repo; instead we synthesise speech-like signals
(voiced syllables with pitch drift and formant colouring, interleaved with
fricative bursts and silences) and speech-shaped noise (white noise through a
long-term-average speech spectrum FIR). Both are reproducible from a seed and
referenced from scene descriptors via ``synthetic:speech:<seed>`` /
``synthetic:ssn:<seed>`` pseudo-paths.

The point is texture, not intelligibility: the on/off syllable structure gives
oracle masks something to separate, and the spectral tilt keeps the noise from
being trivially distinguishable in every band.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import firwin2, lfilter

from .errors import InputError
from .signal_io import PIPELINE_RATE, TimeSignal

SPEECH_RMS = 0.040
NOISE_RMS = 0.055
FLOOR_REL = 0.015  # broadband floor so no STFT bin is ever empty

# crude long-term speech spectrum: peak near 400 Hz, ~9 dB/octave rolloff above 1 kHz;
# nonzero at the band edges, otherwise downstream per-bin statistics go singular
_LTASS_FREQS = [0.0, 80.0, 200.0, 400.0, 800.0, 1600.0, 3200.0, 6400.0, 8000.0]
_LTASS_GAINS = [0.06, 0.25, 0.80, 1.00, 0.85, 0.45, 0.18, 0.08, 0.05]


def _resonator(x: np.ndarray, freq: float, bandwidth: float, fs: int) -> np.ndarray:
    """Second-order all-pole resonator, unity gain at the pole frequency."""
    r = np.exp(-np.pi * bandwidth / fs)
    a = [1.0, -2.0 * r * np.cos(2.0 * np.pi * freq / fs), r * r]
    return lfilter([1.0 - r], a, x)


def _voiced_segment(rng: np.random.Generator, n: int, fs: int) -> np.ndarray:
    f0 = rng.uniform(95.0, 240.0)
    drift = rng.uniform(-0.25, 0.25)
    t = np.arange(n) / fs
    vibrato = 0.008 * np.sin(2 * np.pi * rng.uniform(4.0, 7.0) * t + rng.uniform(0, 2 * np.pi))
    inst = f0 * (1.0 + drift * t / (n / fs) + vibrato)
    phase = 2.0 * np.pi * np.cumsum(inst) / fs
    n_harm = int(min(3800.0 / f0, 24))
    src = np.zeros(n)
    for h in range(1, n_harm + 1):
        src += np.sin(h * phase + rng.uniform(0, 2 * np.pi)) / h
    src += 0.12 * rng.standard_normal(n)  # breathiness keeps the spectrum broadband
    for lo, hi, bw in ((300, 850, 110), (900, 2200, 170), (2300, 3200, 260)):
        src = _resonator(src, rng.uniform(lo, hi), bw, fs)
    return src


def _fricative_segment(rng: np.random.Generator, n: int, fs: int) -> np.ndarray:
    src = rng.standard_normal(n)
    centre = rng.uniform(1800.0, 3400.0)
    return _resonator(src, centre, 900.0, fs)


def speech_like(duration: float, seed: int, sample_rate: int = PIPELINE_RATE) -> TimeSignal:
    """Syllable-train signal with speech-ish envelope and spectrum.

    Roughly 60-70% active; segments alternate voiced/fricative with 20 ms
    raised-cosine edges so masks see clean on/off transitions.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(11,)))
    fs = sample_rate
    n = int(round(duration * fs))
    if n <= 0:
        raise InputError(f"duration must be positive, got {duration}")
    x = np.zeros(n)
    pos = int(rng.uniform(0.0, 0.08) * fs)
    edge = int(0.02 * fs)
    while pos < n:
        seg_n = int(rng.uniform(0.12, 0.35) * fs)
        seg_n = min(seg_n, n - pos)
        if seg_n < 2 * edge:
            break
        seg = (_voiced_segment if rng.random() < 0.8 else _fricative_segment)(rng, seg_n, fs)
        rms = np.sqrt(np.mean(seg**2))
        if rms > 0:
            seg = seg / rms
        env = np.ones(seg_n)
        ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(edge) / edge))
        env[:edge] = ramp
        env[-edge:] = ramp[::-1]
        x[pos:pos + seg_n] += rng.uniform(0.5, 1.0) * seg * env
        pos += seg_n + int(rng.uniform(0.04, 0.20) * fs)
    rms = np.sqrt(np.mean(x**2))
    if rms == 0:  # pathologically short request; emit a quiet tone instead
        x = np.sin(2 * np.pi * 220.0 * np.arange(n) / fs)
        rms = np.sqrt(np.mean(x**2))
    x = x / rms + FLOOR_REL * rng.standard_normal(n)
    rms = np.sqrt(np.mean(x**2))
    return TimeSignal(samples=(SPEECH_RMS / rms * x).astype(np.float64), sample_rate=fs)


def speech_shaped_noise(duration: float, seed: int, sample_rate: int = PIPELINE_RATE) -> TimeSignal:
    """Stationary noise with a long-term speech spectrum."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(12,)))
    fs = sample_rate
    n = int(round(duration * fs))
    if n <= 0:
        raise InputError(f"duration must be positive, got {duration}")
    taps = firwin2(513, _LTASS_FREQS, _LTASS_GAINS, fs=fs)
    white = rng.standard_normal(n + len(taps))
    shaped = np.convolve(white, taps, mode="full")[len(taps):len(taps) + n]
    rms = np.sqrt(np.mean(shaped**2))
    return TimeSignal(samples=(NOISE_RMS / rms * shaped).astype(np.float64), sample_rate=fs)


def is_synthetic_path(path: str) -> bool:
    return isinstance(path, str) and path.startswith("synthetic:")


def resolve_fixture(path: str, duration: float, sample_rate: int = PIPELINE_RATE) -> TimeSignal:
    """Materialise a ``synthetic:<kind>:<seed>`` pseudo-path."""
    parts = path.split(":")
    if len(parts) != 3 or parts[0] != "synthetic":
        raise InputError(f"not a synthetic fixture path: {path!r}")
    kind, seed_text = parts[1], parts[2]
    try:
        seed = int(seed_text)
    except ValueError as exc:
        raise InputError(f"bad fixture seed in {path!r}") from exc
    if kind == "speech":
        return speech_like(duration, seed, sample_rate)
    if kind == "ssn":
        return speech_shaped_noise(duration, seed, sample_rate)
    raise InputError(f"unknown fixture kind {kind!r} in {path!r}")
