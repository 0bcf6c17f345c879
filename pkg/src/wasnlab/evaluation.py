"""SIR/SAR evaluation by least-squares decomposition against known references.

An estimate is split into three parts: ``s_target`` (its projection onto the
speech reference and up to ``filter_len`` delayed copies), ``e_interf`` (the
extra part explained once the noise reference's delay span is added) and
``e_artif`` (whatever neither reference explains). The projections are
orthogonal by construction, so the three parts tile the estimate's energy.

    SIR = 10 log10(||s_target||^2 / ||e_interf||^2)
    SAR = 10 log10(||s_target + e_interf||^2 / ||e_artif||^2)

Both are capped at +-100 dB to keep corpus aggregates finite.

Two reference conventions are reported: ``cnv`` uses the clean image signals
at the node's reference mic (reverberation is part of the target), ``dry``
uses the emitted source signals aligned by direct-path delay only, so
reverberation counts as artifact.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import solve_toeplitz, toeplitz
from scipy.signal import fftconvolve

from .errors import DegenerateInputError, PairingError
from .signal_io import TimeSignal

BSS_FILTER_LEN = 512
DB_CAP = 100.0
PROJ_DELTA = 1e-12

CSV_COLUMNS = ("scene_id", "config_type", "node", "step", "input_sir_db",
               "output_sir_db", "delta_sir_db", "sar_cnv_db", "sar_dry_db")
SELECTORS = ("best_output", "best_input", "worst_input", "per_node")


@dataclass
class BssDecomposition:
    sir_db: float
    sar_db: float
    s_target: np.ndarray
    e_interf: np.ndarray
    e_artif: np.ndarray


def _capped_db(num: float, den: float) -> float:
    if num <= 0.0:
        return -DB_CAP
    if den <= 0.0:
        return DB_CAP
    return float(np.clip(10.0 * np.log10(num / den), -DB_CAP, DB_CAP))


def _fit_length(x: np.ndarray, n: int) -> np.ndarray:
    if len(x) == n:
        return x
    if len(x) > n:
        return x[:n]
    out = np.zeros(n)
    out[:len(x)] = x
    return out


def bss_eval(estimate, references, filter_len: int = BSS_FILTER_LEN) -> BssDecomposition:
    """Decompose ``estimate`` against ``[speech_ref, noise_ref]``.

    The estimate is trimmed or zero-padded to the reference length. Either a
    zero-energy estimate or reference is refused: the decomposition is
    meaningless there.
    """
    refs = [np.asarray(getattr(r, "samples", r), dtype=np.float64) for r in references]
    est = np.asarray(getattr(estimate, "samples", estimate), dtype=np.float64)
    n = len(refs[0])
    if any(len(r) != n for r in refs):
        raise PairingError("references must share one length")
    est = _fit_length(est, n)
    if not np.any(est):
        raise DegenerateInputError("zero-energy estimate")
    for i, r in enumerate(refs):
        if not np.any(r):
            raise DegenerateInputError(f"zero-energy reference {i}")

    L = int(filter_len)
    total = n + L - 1
    nfft = 1 << int(total + L).bit_length()
    est_pad = np.zeros(total)
    est_pad[:n] = est
    e_f = np.fft.rfft(est_pad, nfft)
    r_f = [np.fft.rfft(r, nfft) for r in refs]

    # lagged inner products: d_j(l) = <shift(ref_j, l), est>, G_ij[l,l'] = c_ij(l-l')
    d = np.concatenate([np.fft.irfft(np.conj(rf) * e_f, nfft)[:L] for rf in r_f])
    m = len(refs)
    gram = np.empty((m * L, m * L))
    for i in range(m):
        for j in range(m):
            c = np.fft.irfft(np.conj(r_f[i]) * r_f[j], nfft)
            col = c[:L]
            row = c[(nfft - np.arange(L)) % nfft]
            gram[i * L:(i + 1) * L, j * L:(j + 1) * L] = toeplitz(col, row)
    load = PROJ_DELTA * float(np.trace(gram)) / (m * L)
    gram[np.diag_indices_from(gram)] += load

    coef = np.linalg.solve(gram, d)
    p_joint = np.zeros(total)
    for j in range(m):
        p_joint += fftconvolve(refs[j], coef[j * L:(j + 1) * L])[:total]

    c_ss = np.fft.irfft(np.conj(r_f[0]) * r_f[0], nfft)[:L].copy()
    c_ss[0] += load
    coef_s = solve_toeplitz(c_ss, d[:L])
    s_target = fftconvolve(refs[0], coef_s)[:total]

    e_interf = p_joint - s_target
    e_artif = est_pad - p_joint
    sir = _capped_db(float(np.sum(s_target**2)), float(np.sum(e_interf**2)))
    sar = _capped_db(float(np.sum((s_target + e_interf) ** 2)), float(np.sum(e_artif**2)))
    return BssDecomposition(sir_db=sir, sar_db=sar, s_target=s_target,
                            e_interf=e_interf, e_artif=e_artif)


@dataclass
class MetricRow:
    scene_id: str
    config_type: str
    node: int  # 1-based in reports
    step: int
    input_sir_db: float
    output_sir_db: float
    delta_sir_db: float
    sar_cnv_db: float
    sar_dry_db: float | None = None


def _delayed(x: np.ndarray, delay: int, n: int) -> np.ndarray:
    out = np.zeros(n)
    seg = x[:max(n - delay, 0)]
    out[delay:delay + len(seg)] = seg
    return out


def scene_metrics(rendered, outputs: dict[int, list[TimeSignal]], scene_id: str = "",
                  dry_refs: bool = False, filter_len: int = BSS_FILTER_LEN) -> list[MetricRow]:
    """Per (node, step) metric rows for one scene.

    ``outputs`` maps step number to the per-node enhanced signals. Input SIR
    comes from running the same decomposition on the untouched reference-mic
    mixture, so an identity "enhancement" scores a delta of exactly zero.
    """
    scene_id = scene_id or rendered.descriptor.scene_id
    config_type = rendered.descriptor.config_type
    n_nodes = rendered.mixtures.shape[0]
    n = rendered.mixtures.shape[2]
    rows = []
    for k in range(n_nodes):
        refs_cnv = [rendered.speech_images[k, 0], rendered.noise_images[k, 0]]
        input_sir = bss_eval(rendered.mixtures[k, 0], refs_cnv, filter_len).sir_db
        dry = None
        if dry_refs:
            dry = [
                _delayed(rendered.speech_dry, int(round(rendered.target_delays[k, 0])), n),
                _delayed(rendered.noise_dry, int(round(rendered.noise_delays[k, 0])), n),
            ]
        for step in sorted(outputs):
            est = outputs[step][k]
            dec = bss_eval(est, refs_cnv, filter_len)
            sar_dry = bss_eval(est, dry, filter_len).sar_db if dry is not None else None
            rows.append(MetricRow(
                scene_id=scene_id, config_type=config_type, node=k + 1, step=step,
                input_sir_db=input_sir, output_sir_db=dec.sir_db,
                delta_sir_db=dec.sir_db - input_sir, sar_cnv_db=dec.sar_db,
                sar_dry_db=sar_dry,
            ))
    return rows


_METRIC_FIELDS = ("input_sir_db", "output_sir_db", "delta_sir_db", "sar_cnv_db", "sar_dry_db")


def _summary(rows: list[MetricRow]) -> dict:
    out = {}
    for name in _METRIC_FIELDS:
        vals = np.array([getattr(r, name) for r in rows if getattr(r, name) is not None])
        if vals.size == 0:
            continue
        half = 0.0 if vals.size < 2 else 1.96 * float(vals.std(ddof=1)) / np.sqrt(vals.size)
        out[name] = {"mean": float(vals.mean()), "half_width": float(half), "n": int(vals.size)}
    return out


def aggregate(rows: list[MetricRow], selector: str) -> dict:
    """Corpus summary under a node-selection rule.

    ``best_output`` keeps, per scene and step, the node with the highest
    output SIR; ``best_input``/``worst_input`` fix the node per scene by its
    input SIR; ``per_node`` groups without selection. Summaries report
    mean and a 95% normal-approximation half-width per metric.
    """
    if selector not in SELECTORS:
        raise PairingError(f"unknown selector {selector!r}")
    if selector == "per_node":
        nodes = sorted({r.node for r in rows})
        return {f"node{k}": _summary([r for r in rows if r.node == k]) for k in nodes}

    steps = sorted({r.step for r in rows})
    scenes = sorted({r.scene_id for r in rows})
    picked: dict[int, list[MetricRow]] = {s: [] for s in steps}
    for scene in scenes:
        scene_rows = [r for r in rows if r.scene_id == scene]
        if selector in ("best_input", "worst_input"):
            pick = max if selector == "best_input" else min
            node = pick(scene_rows, key=lambda r: r.input_sir_db).node
            for r in scene_rows:
                if r.node == node:
                    picked[r.step].append(r)
        else:  # best_output, per step
            for step in steps:
                step_rows = [r for r in scene_rows if r.step == step]
                if step_rows:
                    picked[step].append(max(step_rows, key=lambda r: r.output_sir_db))
    return {f"step{s}": _summary(picked[s]) for s in steps if picked[s]}


def summarize(rows: list[MetricRow]) -> dict:
    return {"selectors": {sel: aggregate(rows, sel) for sel in SELECTORS}}


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_metrics_csv(rows: list[MetricRow], path) -> None:
    """One row per scene x node x step, stable order and formatting."""
    path = Path(path)
    ordered = sorted(rows, key=lambda r: (r.scene_id, r.node, r.step))
    lines = [",".join(CSV_COLUMNS)]
    for r in ordered:
        lines.append(",".join(_format_cell(getattr(r, c)) for c in CSV_COLUMNS))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_metrics_csv(path) -> list[MetricRow]:
    lines = Path(path).read_text().strip().split("\n")
    if lines[0] != ",".join(CSV_COLUMNS):
        raise PairingError(f"unexpected CSV header in {path}")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        rec = dict(zip(CSV_COLUMNS, cells))
        rows.append(MetricRow(
            scene_id=rec["scene_id"], config_type=rec["config_type"],
            node=int(rec["node"]), step=int(rec["step"]),
            input_sir_db=float(rec["input_sir_db"]),
            output_sir_db=float(rec["output_sir_db"]),
            delta_sir_db=float(rec["delta_sir_db"]),
            sar_cnv_db=float(rec["sar_cnv_db"]),
            sar_dry_db=float(rec["sar_dry_db"]) if rec["sar_dry_db"] else None,
        ))
    return rows


def write_summary_json(summary: dict, path) -> None:
    _atomic_write(Path(path), json.dumps(summary, indent=2, sort_keys=True) + "\n")
