"""Shoebox room simulation: Sabine absorption, image-source RIRs, scene sampling.

The simulator is deliberately plain: uniform wall absorption from the Sabine
formula, image-source reflections up to an energy-chosen order, and fractional
delays realised with an 81-tap Hann-windowed sinc. Good enough to exercise the
spatial filtering chain; not a substitute for a measured RIR corpus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import GeometryError, InfeasibilityError, SamplingError, DegenerateInputError
from .scenes import (
    CLEARANCE,
    MIC_RADIUS,
    N_MICS,
    N_NODES,
    NOISE_GAIN_DB,
    ROOM_HEIGHT,
    ROOM_LENGTH,
    ROOM_WIDTH,
    RT60_RANGE,
    SceneDescriptor,
    TableGeometry,
    validate_scene,
)
from .signal_io import PIPELINE_RATE, TimeSignal

SPEED_OF_SOUND = 343.0
SINC_TAPS = 81  # odd, so the kernel has a centre tap
MAX_ORDER_CAP = 12
TAIL_ENERGY_TOL = 1e-3
MAX_SAMPLE_ATTEMPTS = 10000

_HALF = SINC_TAPS // 2
_KERNEL_WINDOW = np.hanning(SINC_TAPS)
_KERNEL_OFFSETS = np.arange(SINC_TAPS) - _HALF


def sabine_absorption(rt60: float, room_dims) -> float:
    """Uniform wall absorption for a target RT60 via Sabine's formula.

    alpha = 0.161 V / (S rt60). Raises :class:`InfeasibilityError` when the
    requested reverberation time is too short for the room (alpha > 1).
    """
    lx, ly, lz = np.asarray(room_dims, dtype=np.float64)
    if rt60 <= 0:
        raise InfeasibilityError(f"rt60 must be positive, got {rt60}")
    volume = lx * ly * lz
    surface = 2.0 * (lx * ly + lx * lz + ly * lz)
    alpha = 0.161 * volume / (surface * rt60)
    if alpha > 1.0:
        raise InfeasibilityError(
            f"rt60={rt60:.3f} s unreachable in a {lx:.2f}x{ly:.2f}x{lz:.2f} room "
            f"(Sabine absorption {alpha:.3f} > 1)"
        )
    return float(alpha)


def choose_reflection_order(absorption: float, room_dims, tol: float = TAIL_ENERGY_TOL,
                            cap: int = MAX_ORDER_CAP) -> int:
    """Smallest image order whose neglected tail carries < ``tol`` of the energy.

    Uses a spherical-shell estimate: order ``r`` contributes about ``4r^2 + 2``
    images at distance ``r * mean(dims)``, each attenuated by ``(1-alpha)^r``
    in energy. Capped at ``cap`` to bound the image count.
    """
    dims = np.asarray(room_dims, dtype=np.float64)
    mean_dim = float(np.mean(dims))
    beta2 = 1.0 - absorption  # energy reflection coefficient
    orders = np.arange(1, 61)
    shell = (4.0 * orders**2 + 2.0) * beta2**orders / (orders * mean_dim) ** 2
    direct = 1.0 / (0.5 * mean_dim) ** 2
    energies = np.concatenate(([direct], shell))
    total = float(np.sum(energies))
    tails = np.cumsum(energies[::-1])[::-1]  # tails[r] = energy from order r on
    for order in range(len(energies)):
        remainder = tails[order + 1] if order + 1 < len(energies) else 0.0
        if remainder < tol * total:
            return int(min(max(order, 1), cap))
    return cap


def _axis_images(extent: float, coord: float, order: int):
    """Image coordinates and reflection counts along one axis."""
    q = np.arange(-(order // 2 + 1), order // 2 + 2)
    pos = np.concatenate([2.0 * q * extent + coord, 2.0 * q * extent - coord])
    refl = np.concatenate([np.abs(2 * q), np.abs(2 * q - 1)])
    keep = refl <= order
    return pos[keep], refl[keep]


def simulate_rir(room_dims, source, mic, absorption: float, order: int,
                 sample_rate: int = PIPELINE_RATE, speed_of_sound: float = SPEED_OF_SOUND) -> np.ndarray:
    """Image-source room impulse response from ``source`` to ``mic``.

    Each image lands as a Hann-windowed sinc centred at its fractional delay
    with amplitude ``beta^r / d``. Acausal kernel taps (possible when source
    and mic are close) are dropped rather than shifting the whole response.
    """
    dims = np.asarray(room_dims, dtype=np.float64)
    source = np.asarray(source, dtype=np.float64)
    mic = np.asarray(mic, dtype=np.float64)
    for name, point in (("source", source), ("mic", mic)):
        if np.any(point <= 0) or np.any(point >= dims):
            raise GeometryError(f"{name} position {point} outside the room {dims}")
    beta = np.sqrt(1.0 - absorption)

    ax = [_axis_images(dims[d], source[d], order) for d in range(3)]
    px, rx = ax[0]
    py, ry = ax[1]
    pz, rz = ax[2]
    refl = rx[:, None, None] + ry[None, :, None] + rz[None, None, :]
    keep = refl <= order
    img = np.stack(np.meshgrid(px, py, pz, indexing="ij"), axis=-1)[keep]
    refl = refl[keep]

    dist = np.linalg.norm(img - mic[None, :], axis=1)
    amp = beta**refl / dist
    delay = dist / speed_of_sound * sample_rate
    centre = np.round(delay).astype(np.int64)
    frac = delay - centre

    rir = np.zeros(int(centre.max()) + _HALF + 1, dtype=np.float64)
    idx = centre[:, None] + _KERNEL_OFFSETS[None, :]
    val = amp[:, None] * np.sinc(_KERNEL_OFFSETS[None, :] - frac[:, None]) * _KERNEL_WINDOW[None, :]
    valid = idx >= 0
    np.add.at(rir, idx[valid], val[valid])
    return rir


def _mic_circle(centre: np.ndarray, phase: float) -> np.ndarray:
    angles = phase + np.arange(N_MICS) * (np.pi / 2)
    offsets = MIC_RADIUS * np.stack([np.cos(angles), np.sin(angles), np.zeros(N_MICS)], axis=1)
    return centre[None, :] + offsets


def _sample_room(rng: np.random.Generator):
    dims = np.array([
        rng.uniform(*ROOM_LENGTH),
        rng.uniform(*ROOM_WIDTH),
        rng.uniform(*ROOM_HEIGHT),
    ])
    rt60 = rng.uniform(*RT60_RANGE)
    gain = rng.uniform(*NOISE_GAIN_DB)
    return dims, rt60, gain


class _Budget:
    """Shared rejection budget across all placements of one scene."""

    def __init__(self, limit: int = MAX_SAMPLE_ATTEMPTS):
        self.left = limit

    def spend(self, what: str):
        self.left -= 1
        if self.left < 0:
            raise SamplingError(f"placement budget exhausted while sampling {what}")


def _place(rng, budget, what, draw, ok):
    while True:
        budget.spend(what)
        candidate = draw(rng)
        if ok(candidate):
            return candidate


def _sample_random(rng: np.random.Generator, budget: _Budget, dims: np.ndarray):
    def uniform_box(z_lo, z_hi):
        def draw(r):
            return np.array([
                r.uniform(CLEARANCE, dims[0] - CLEARANCE),
                r.uniform(CLEARANCE, dims[1] - CLEARANCE),
                r.uniform(z_lo, min(z_hi, dims[2] - CLEARANCE)),
            ])
        return draw

    placed: list[np.ndarray] = []

    def clear_of_placed(p):
        return all(np.linalg.norm(p - q) >= CLEARANCE for q in placed)

    nodes = []
    for k in range(N_NODES):
        p = _place(rng, budget, f"node {k + 1}", uniform_box(0.7, 2.0), clear_of_placed)
        placed.append(p)
        nodes.append(p)
    sources = []
    for name in ("target", "noise"):
        p = _place(rng, budget, f"{name} source", uniform_box(1.2, 2.0), clear_of_placed)
        placed.append(p)
        sources.append(p)
    return np.array(nodes), sources[0], sources[1], None


def _sample_living(rng: np.random.Generator, budget: _Budget, dims: np.ndarray):
    margin = MIC_RADIUS + 0.01  # keep the mic circle strictly inside

    def draw_wall_node(r):
        wall = r.integers(4)
        depth = r.uniform(margin, CLEARANCE)
        along_x = wall >= 2  # walls 2,3 are the y walls; node slides along x
        span = dims[0] if along_x else dims[1]
        along = r.uniform(margin, span - margin)
        z = r.uniform(0.7, 0.95)
        if wall == 0:
            return np.array([depth, along, z])
        if wall == 1:
            return np.array([dims[0] - depth, along, z])
        if wall == 2:
            return np.array([along, depth, z])
        return np.array([along, dims[1] - depth, z])

    nodes: list[np.ndarray] = []

    def clear_of_nodes(p, min_dist):
        return all(np.linalg.norm(p - q) >= min_dist for q in nodes)

    for k in range(3):
        # wall nodes only need to avoid sitting on top of each other
        p = _place(rng, budget, f"wall node {k + 1}", draw_wall_node,
                   lambda c: clear_of_nodes(c, 3 * MIC_RADIUS))
        nodes.append(p)

    def draw_free(r):
        return np.array([
            r.uniform(CLEARANCE, dims[0] - CLEARANCE),
            r.uniform(CLEARANCE, dims[1] - CLEARANCE),
            r.uniform(0.7, 0.95),
        ])

    nodes.append(_place(rng, budget, "free node", draw_free, lambda c: clear_of_nodes(c, CLEARANCE)))

    def draw_source(r):
        return np.array([
            r.uniform(CLEARANCE, dims[0] - CLEARANCE),
            r.uniform(CLEARANCE, dims[1] - CLEARANCE),
            r.uniform(1.2, min(2.0, dims[2] - CLEARANCE)),
        ])

    target = _place(rng, budget, "target source", draw_source, lambda c: clear_of_nodes(c, CLEARANCE))
    noise = _place(rng, budget, "noise source", draw_source, lambda c: clear_of_nodes(c, CLEARANCE))
    return np.array(nodes), target, noise, None


def _sample_meeting(rng: np.random.Generator, budget: _Budget, dims: np.ndarray):
    def draw_table(r):
        radius = r.uniform(0.5, 1.0)
        pad = radius + 0.5 + 0.15  # leave room for seated sources near walls
        if dims[0] <= 2 * pad or dims[1] <= 2 * pad:
            pad = radius + 0.05
        centre = np.array([r.uniform(pad, dims[0] - pad), r.uniform(pad, dims[1] - pad)])
        return TableGeometry(center=centre, radius=radius, height=r.uniform(0.7, 0.8))

    table = _place(rng, budget, "table", draw_table, lambda t: True)

    def draw_nodes(r):
        theta0 = r.uniform(0, 2 * np.pi)
        pts = []
        for k in range(N_NODES):
            inset = r.uniform(MIC_RADIUS, 0.20)
            theta = theta0 + k * np.pi / 2
            radial = table.radius - inset
            pts.append(np.array([
                table.center[0] + radial * np.cos(theta),
                table.center[1] + radial * np.sin(theta),
                table.height,
            ]))
        return np.array(pts)

    def nodes_ok(pts):
        lo = np.array([MIC_RADIUS + 0.01] * 2 + [0.0])
        hi = dims - lo
        return bool(np.all(pts > lo) and np.all(pts < hi))

    nodes = _place(rng, budget, "table nodes", draw_nodes, nodes_ok)

    def draw_source(r):
        theta = r.uniform(0, 2 * np.pi)
        radial = table.radius + r.uniform(0.05, 0.5)
        return np.array([
            table.center[0] + radial * np.cos(theta),
            table.center[1] + radial * np.sin(theta),
            r.uniform(1.15, 1.3),
        ])

    def source_ok(p):
        return min(p[0], p[1], dims[0] - p[0], dims[1] - p[1]) >= 0.15

    target = _place(rng, budget, "target source", draw_source, source_ok)
    noise = _place(rng, budget, "noise source", draw_source, source_ok)
    return nodes, target, noise, table


_SAMPLERS = {"random": _sample_random, "living": _sample_living, "meeting": _sample_meeting}


def sample_scene(config_type: str, rng_seed: int, scene_id: str = "",
                 speech_path: str = "", noise_path: str = "") -> SceneDescriptor:
    """Draw one scene of the given configuration; deterministic in ``rng_seed``."""
    if config_type not in _SAMPLERS:
        raise SamplingError(f"unknown config type {config_type!r}")
    rng = np.random.default_rng(rng_seed)
    budget = _Budget()
    while True:
        budget.spend("room")
        dims, rt60, gain = _sample_room(rng)
        try:
            sabine_absorption(rt60, dims)
        except InfeasibilityError:
            continue
        try:
            nodes, target, noise, table = _SAMPLERS[config_type](rng, budget, dims)
        except SamplingError:
            raise
        mics = np.stack([_mic_circle(nodes[k], rng.uniform(0, 2 * np.pi)) for k in range(N_NODES)])
        descriptor = SceneDescriptor(
            config_type=config_type,
            room_dims=dims,
            rt60=rt60,
            node_centers=nodes,
            mic_positions=mics,
            target_position=target,
            noise_position=noise,
            noise_gain_db=gain,
            rng_seed=int(rng_seed),
            speech_path=speech_path,
            noise_path=noise_path,
            table=table,
            scene_id=scene_id,
        )
        validate_scene(descriptor)
        return descriptor


@dataclass
class RenderedScene:
    """Per-mic source images for one scene; ``mixtures = speech + noise`` exactly."""

    descriptor: SceneDescriptor
    speech_images: np.ndarray  # (nodes, mics, samples)
    noise_images: np.ndarray
    mixtures: np.ndarray
    speech_dry: np.ndarray  # emitted target signal
    noise_dry: np.ndarray  # emitted noise, gain applied, matched to speech length
    target_delays: np.ndarray  # (nodes, mics) target direct-path delay in samples
    noise_delays: np.ndarray  # (nodes, mics) noise direct-path delay in samples
    sample_rate: int = PIPELINE_RATE

    @property
    def input_sir_db(self) -> np.ndarray:
        """Energy-ratio SIR at each node's first mic."""
        s = np.sum(self.speech_images[:, 0, :] ** 2, axis=1)
        n = np.sum(self.noise_images[:, 0, :] ** 2, axis=1)
        return 10.0 * np.log10(s / n)


def _match_length(noise: np.ndarray, target_len: int, rng: np.random.Generator) -> np.ndarray:
    """Loop the noise from a random offset when it is shorter than the speech."""
    if len(noise) >= target_len:
        return noise[:target_len]
    offset = int(rng.integers(len(noise)))
    reps = int(np.ceil((target_len + offset) / len(noise)))
    return np.tile(noise, reps)[offset:offset + target_len]


def render_scene(descriptor: SceneDescriptor, speech: TimeSignal, noise: TimeSignal,
                 order: int | None = None) -> RenderedScene:
    """Convolve both sources with every mic's RIR and sum into mixtures."""
    if not np.any(speech.samples):
        raise DegenerateInputError("speech signal is all zeros")
    if not np.any(noise.samples):
        raise DegenerateInputError("noise signal is all zeros")
    absorption = sabine_absorption(descriptor.rt60, descriptor.room_dims)
    if order is None:
        order = choose_reflection_order(absorption, descriptor.room_dims)

    sub = np.random.default_rng(np.random.SeedSequence(entropy=descriptor.rng_seed, spawn_key=(1,)))
    gain = 10.0 ** (descriptor.noise_gain_db / 20.0)
    speech_dry = np.asarray(speech.samples, dtype=np.float64)
    noise_dry = gain * _match_length(np.asarray(noise.samples, dtype=np.float64), len(speech_dry), sub)

    rirs_s = np.empty((N_NODES, N_MICS), dtype=object)
    rirs_n = np.empty((N_NODES, N_MICS), dtype=object)
    target_delays = np.zeros((N_NODES, N_MICS))
    noise_delays = np.zeros((N_NODES, N_MICS))
    max_len = 0
    for k in range(N_NODES):
        for m in range(N_MICS):
            mic = descriptor.mic_positions[k, m]
            rirs_s[k, m] = simulate_rir(descriptor.room_dims, descriptor.target_position, mic,
                                        absorption, order)
            rirs_n[k, m] = simulate_rir(descriptor.room_dims, descriptor.noise_position, mic,
                                        absorption, order)
            max_len = max(max_len, len(rirs_s[k, m]), len(rirs_n[k, m]))
            for delays, src in ((target_delays, descriptor.target_position),
                                (noise_delays, descriptor.noise_position)):
                delays[k, m] = np.linalg.norm(mic - src) / SPEED_OF_SOUND * PIPELINE_RATE

    n_out = len(speech_dry) + max_len - 1
    speech_img = np.zeros((N_NODES, N_MICS, n_out))
    noise_img = np.zeros((N_NODES, N_MICS, n_out))
    for k in range(N_NODES):
        for m in range(N_MICS):
            s = fftconvolve(speech_dry, rirs_s[k, m])
            n = fftconvolve(noise_dry, rirs_n[k, m])
            speech_img[k, m, :len(s)] = s
            noise_img[k, m, :len(n)] = n

    return RenderedScene(
        descriptor=descriptor,
        speech_images=speech_img,
        noise_images=noise_img,
        mixtures=speech_img + noise_img,
        speech_dry=speech_dry,
        noise_dry=noise_dry,
        target_delays=target_delays,
        noise_delays=noise_delays,
    )
