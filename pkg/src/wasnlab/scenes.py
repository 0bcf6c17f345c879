"""Scene descriptors: geometry of one simulated trial, validation, JSON I/O.

A scene holds the shoebox room, four 4-mic nodes, one target source and one
noise source, the noise gain, and the RNG seed that regenerates it. Three
configurations exist, each with its own placement constraints:

* ``random``  - nodes and sources anywhere, >= 50 cm from walls and each other
* ``living``  - three nodes shelved within 50 cm of a wall, one free node
* ``meeting`` - nodes on a circular table, sources seated around it

The descriptor order is meaningful for ``living``: entries 0..2 are the wall
nodes, entry 3 the free node. ``meeting`` scenes carry the sampled table
geometry so constraints can be re-checked on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError

N_NODES = 4
N_MICS = 4
MIC_RADIUS = 0.05

ROOM_LENGTH = (3.0, 8.0)
ROOM_WIDTH = (3.0, 5.0)
ROOM_HEIGHT = (2.5, 3.0)
RT60_RANGE = (0.3, 0.6)
NOISE_GAIN_DB = (-6.0, 0.0)
CLEARANCE = 0.5

CONFIG_TYPES = ("random", "living", "meeting")

_EPS = 1e-9

SCENE_SCHEMA = "wasnlab-scene-v1"


@dataclass
class TableGeometry:
    """Circular meeting table; acoustically transparent (not simulated)."""

    center: np.ndarray  # (x, y) on the floor plane
    radius: float
    height: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)


@dataclass
class SceneDescriptor:
    config_type: str
    room_dims: np.ndarray  # (length, width, height) in metres
    rt60: float
    node_centers: np.ndarray  # (4, 3)
    mic_positions: np.ndarray  # (4, 4, 3)
    target_position: np.ndarray  # (3,)
    noise_position: np.ndarray  # (3,)
    noise_gain_db: float
    rng_seed: int
    speech_path: str = ""
    noise_path: str = ""
    table: TableGeometry | None = None
    scene_id: str = ""

    def __post_init__(self):
        self.room_dims = np.asarray(self.room_dims, dtype=np.float64)
        self.node_centers = np.asarray(self.node_centers, dtype=np.float64)
        self.mic_positions = np.asarray(self.mic_positions, dtype=np.float64)
        self.target_position = np.asarray(self.target_position, dtype=np.float64)
        self.noise_position = np.asarray(self.noise_position, dtype=np.float64)


def _wall_distance(point: np.ndarray, dims: np.ndarray) -> float:
    """Distance to the nearest of the six room surfaces."""
    return float(min(np.min(point), np.min(dims - point)))


def _horizontal_wall_distance(point: np.ndarray, dims: np.ndarray) -> float:
    return float(min(point[0], point[1], dims[0] - point[0], dims[1] - point[1]))


def _inside(point: np.ndarray, dims: np.ndarray, margin: float = 0.0) -> bool:
    return bool(np.all(point > margin - _EPS) and np.all(point < dims - margin + _EPS))


def _check(cond: bool, constraint: str, detail: str):
    if not cond:
        raise ValidationError(f"constraint violated: {constraint} ({detail})")


def _validate_common(d: SceneDescriptor):
    _check(d.config_type in CONFIG_TYPES, "config type", f"unknown {d.config_type!r}")
    _check(d.node_centers.shape == (N_NODES, 3), "node count", f"expected {N_NODES} nodes, got shape {d.node_centers.shape}")
    _check(d.mic_positions.shape == (N_NODES, N_MICS, 3), "mic count", f"expected {N_NODES}x{N_MICS} mics, got shape {d.mic_positions.shape}")
    lx, ly, lz = d.room_dims
    _check(ROOM_LENGTH[0] - _EPS <= lx <= ROOM_LENGTH[1] + _EPS, "room length", f"{lx} m")
    _check(ROOM_WIDTH[0] - _EPS <= ly <= ROOM_WIDTH[1] + _EPS, "room width", f"{ly} m")
    _check(ROOM_HEIGHT[0] - _EPS <= lz <= ROOM_HEIGHT[1] + _EPS, "room height", f"{lz} m")
    _check(RT60_RANGE[0] - _EPS <= d.rt60 <= RT60_RANGE[1] + _EPS, "rt60 range", f"{d.rt60} s")
    _check(
        NOISE_GAIN_DB[0] - _EPS <= d.noise_gain_db <= NOISE_GAIN_DB[1] + _EPS,
        "noise gain",
        f"{d.noise_gain_db} dB",
    )
    for k in range(N_NODES):
        _check(_inside(d.node_centers[k], d.room_dims), "inside room", f"node {k + 1}")
        centre = d.node_centers[k]
        angles = []
        for m in range(N_MICS):
            mic = d.mic_positions[k, m]
            _check(_inside(mic, d.room_dims), "inside room", f"node {k + 1} mic {m + 1}")
            offset = mic - centre
            _check(abs(offset[2]) < 1e-6, "mic plane", f"node {k + 1} mic {m + 1} off the horizontal circle")
            radius = float(np.hypot(offset[0], offset[1]))
            _check(abs(radius - MIC_RADIUS) < 1e-6, "mic radius", f"node {k + 1} mic {m + 1}: {radius:.4f} m")
            angles.append(np.arctan2(offset[1], offset[0]))
        gaps = np.mod(np.diff(sorted(angles)), 2 * np.pi)
        _check(np.allclose(gaps, np.pi / 2, atol=1e-6), "mic spacing", f"node {k + 1}: gaps {np.degrees(gaps)}")
    for name, pos in (("target source", d.target_position), ("noise source", d.noise_position)):
        _check(_inside(pos, d.room_dims), "inside room", name)


def _validate_random(d: SceneDescriptor):
    points = [("node 1", d.node_centers[0]), ("node 2", d.node_centers[1]),
              ("node 3", d.node_centers[2]), ("node 4", d.node_centers[3]),
              ("target source", d.target_position), ("noise source", d.noise_position)]
    for name, p in points:
        _check(_wall_distance(p, d.room_dims) >= CLEARANCE - _EPS, "wall distance", name)
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            dist = float(np.linalg.norm(points[i][1] - points[j][1]))
            _check(dist >= CLEARANCE - _EPS, "pairwise distance", f"{points[i][0]} vs {points[j][0]}: {dist:.3f} m")
    for k in range(N_NODES):
        z = d.node_centers[k, 2]
        _check(0.7 - _EPS <= z <= 2.0 + _EPS, "node height", f"node {k + 1}: {z:.3f} m")
    for name, pos in (("target source", d.target_position), ("noise source", d.noise_position)):
        _check(1.2 - _EPS <= pos[2] <= 2.0 + _EPS, "source height", f"{name}: {pos[2]:.3f} m")


def _validate_living(d: SceneDescriptor):
    for k in range(3):
        wd = _horizontal_wall_distance(d.node_centers[k], d.room_dims)
        _check(wd <= CLEARANCE + _EPS, "wall proximity", f"wall node {k + 1} at {wd:.3f} m from nearest wall")
    free = d.node_centers[3]
    _check(_wall_distance(free, d.room_dims) >= CLEARANCE - _EPS, "wall distance", "node 4 (free node)")
    for k in range(3):
        dist = float(np.linalg.norm(free - d.node_centers[k]))
        _check(dist >= CLEARANCE - _EPS, "node distance", f"node 4 vs node {k + 1}: {dist:.3f} m")
    for k in range(N_NODES):
        z = d.node_centers[k, 2]
        _check(0.7 - _EPS <= z <= 0.95 + _EPS, "node height", f"node {k + 1}: {z:.3f} m")
    for name, pos in (("target source", d.target_position), ("noise source", d.noise_position)):
        _check(_wall_distance(pos, d.room_dims) >= CLEARANCE - _EPS, "wall distance", name)
        _check(1.2 - _EPS <= pos[2] <= 2.0 + _EPS, "source height", f"{name}: {pos[2]:.3f} m")
        for k in range(N_NODES):
            dist = float(np.linalg.norm(pos - d.node_centers[k]))
            _check(dist >= CLEARANCE - _EPS, "source-node distance", f"{name} vs node {k + 1}: {dist:.3f} m")


def _validate_meeting(d: SceneDescriptor):
    _check(d.table is not None, "table geometry", "meeting scene without table record")
    table = d.table
    _check(0.5 - _EPS <= table.radius <= 1.0 + _EPS, "table radius", f"{table.radius} m")
    _check(0.7 - _EPS <= table.height <= 0.8 + _EPS, "table height", f"{table.height} m")
    cx, cy = table.center
    _check(
        min(cx, cy, d.room_dims[0] - cx, d.room_dims[1] - cy) >= table.radius - _EPS,
        "table fit",
        f"table centre {table.center} radius {table.radius}",
    )
    angles = []
    for k in range(N_NODES):
        p = d.node_centers[k]
        _check(abs(p[2] - table.height) < 1e-6, "node height", f"node {k + 1} off the table plane")
        radial = float(np.hypot(p[0] - cx, p[1] - cy))
        inset = table.radius - radial
        _check(0.05 - 1e-6 <= inset <= 0.20 + 1e-6, "table inset", f"node {k + 1}: {inset:.3f} m inside the edge")
        angles.append(np.arctan2(p[1] - cy, p[0] - cx))
    gaps = np.sort(np.mod(np.diff(sorted(angles)), 2 * np.pi))
    _check(np.allclose(gaps, np.pi / 2, atol=1e-6), "node spacing", f"gaps {np.degrees(gaps)} deg")
    for name, pos in (("target source", d.target_position), ("noise source", d.noise_position)):
        radial = float(np.hypot(pos[0] - cx, pos[1] - cy))
        _check(
            table.radius - _EPS <= radial <= table.radius + 0.5 + _EPS,
            "table vicinity",
            f"{name}: {radial - table.radius:.3f} m outside the edge",
        )
        _check(1.15 - _EPS <= pos[2] <= 1.3 + _EPS, "source height", f"{name}: {pos[2]:.3f} m")
        _check(_wall_distance(pos, d.room_dims) >= 0.15 - _EPS, "wall distance", name)


_VALIDATORS = {"random": _validate_random, "living": _validate_living, "meeting": _validate_meeting}


def validate_scene(descriptor: SceneDescriptor) -> None:
    """Raise :class:`ValidationError` naming the first violated constraint."""
    _validate_common(descriptor)
    _VALIDATORS[descriptor.config_type](descriptor)


def scene_to_dict(d: SceneDescriptor) -> dict:
    payload = {
        "schema": SCENE_SCHEMA,
        "scene_id": d.scene_id,
        "config_type": d.config_type,
        "room_dims": d.room_dims.tolist(),
        "rt60": d.rt60,
        "node_centers": d.node_centers.tolist(),
        "mic_positions": d.mic_positions.tolist(),
        "source_positions": {
            "target": d.target_position.tolist(),
            "noise": d.noise_position.tolist(),
        },
        "noise_gain_db": d.noise_gain_db,
        "rng_seed": int(d.rng_seed),
        "speech_path": d.speech_path,
        "noise_path": d.noise_path,
    }
    if d.table is not None:
        payload["table"] = {
            "center": d.table.center.tolist(),
            "radius": d.table.radius,
            "height": d.table.height,
        }
    return payload


def scene_from_dict(payload: dict) -> SceneDescriptor:
    schema = payload.get("schema", SCENE_SCHEMA)
    if schema != SCENE_SCHEMA:
        raise ValidationError(f"unknown scene schema {schema!r} (expected {SCENE_SCHEMA!r})")
    table = None
    if payload.get("table") is not None:
        t = payload["table"]
        table = TableGeometry(center=t["center"], radius=t["radius"], height=t["height"])
    return SceneDescriptor(
        config_type=payload["config_type"],
        room_dims=payload["room_dims"],
        rt60=payload["rt60"],
        node_centers=payload["node_centers"],
        mic_positions=payload["mic_positions"],
        target_position=payload["source_positions"]["target"],
        noise_position=payload["source_positions"]["noise"],
        noise_gain_db=payload["noise_gain_db"],
        rng_seed=payload["rng_seed"],
        speech_path=payload.get("speech_path", ""),
        noise_path=payload.get("noise_path", ""),
        table=table,
        scene_id=payload.get("scene_id", ""),
    )


def write_scene(descriptor: SceneDescriptor, path) -> None:
    """Serialise to JSON; floats keep full precision via shortest-round-trip repr."""
    Path(path).write_text(json.dumps(scene_to_dict(descriptor), indent=2) + "\n")


def read_scene(path) -> SceneDescriptor:
    """Load and re-validate a scene descriptor."""
    descriptor = scene_from_dict(json.loads(Path(path).read_text()))
    validate_scene(descriptor)
    return descriptor
