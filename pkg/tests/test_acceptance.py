"""Release gate: one test per promised behaviour, reported as one line each.

The first three are self-contained numeric contracts. The desk-corpus tests
share the session fixtures from conftest (50 scenes, oracle masks, local and
distant mask policies) and read only the published run artifacts: summary
JSON, run manifests, stored mask headers and the corpus WAVs.
"""

import time

import numpy as np
from desk_helpers import DESK_SCENES, record_acceptance, run_cli

from wasnlab import layout
from wasnlab.cli import load_rendered
from wasnlab.evaluation import bss_eval, scene_metrics
from wasnlab.gevd import gevd, sdw_mwf_weights
from wasnlab.scenes import read_scene
from wasnlab.signal_io import TimeSignal, load_mask
from wasnlab.stft import FRAME_SIZE, analyze, synthesize


def _verdict(ok: bool, text: str) -> bool:
    record_acceptance(("PASS: " if ok else "FAIL: ") + text)
    return ok


def test_gevd_reconstruction_invariants():
    t0 = time.perf_counter()
    r_yy = np.array([[3.0, 1.0], [1.0, 2.0]], dtype=np.complex128)
    r_nn = np.diag([1.0, 2.0]).astype(np.complex128)
    dec = gevd(r_yy, r_nn)
    lams = np.array([(8.0 + np.sqrt(24.0)) / 4.0, (8.0 - np.sqrt(24.0)) / 4.0])
    hand_err = max(
        float(np.max(np.abs(dec.sigma_y / dec.sigma_n - lams))),
        float(np.linalg.norm(dec.q @ np.diag(dec.sigma_y) @ dec.q.conj().T - r_yy)),
        float(np.linalg.norm(dec.q @ np.diag(dec.sigma_n) @ dec.q.conj().T - r_nn)),
    )

    rng = np.random.default_rng(20260825)
    worst = 0.0
    for i in range(1000):
        c = 2 + i % 6
        a = rng.normal(size=(c, c)) + 1j * rng.normal(size=(c, c))
        b = rng.normal(size=(c, c)) + 1j * rng.normal(size=(c, c))
        pencil_yy = a @ a.conj().T + 0.1 * np.eye(c)
        pencil_nn = b @ b.conj().T + c * np.eye(c)
        d = gevd(pencil_yy, pencil_nn)
        back_yy = d.q @ np.diag(d.sigma_y) @ d.q.conj().T
        back_nn = d.q @ np.diag(d.sigma_n) @ d.q.conj().T
        worst = max(
            worst,
            np.linalg.norm(back_yy - pencil_yy) / np.linalg.norm(pencil_yy),
            np.linalg.norm(back_nn - pencil_nn) / np.linalg.norm(pencil_nn),
        )
    elapsed = time.perf_counter() - t0
    ok = hand_err < 1e-12 and worst < 1e-8 and elapsed < 10.0
    assert _verdict(ok, "gevd reconstructions within 1e-8 on 1000 pencils "
                        f"(worst {worst:.2e}, hand pencil {hand_err:.2e}, {elapsed:.1f} s)")


def test_single_channel_filter_matches_wiener_gain():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4711)
    worst = 0.0
    for _ in range(500):
        sigma_s = float(rng.uniform(1e-4, 100.0))
        sigma_n = float(rng.uniform(1e-4, 100.0))
        mu = float(rng.uniform(0.0, 8.0))
        w = sdw_mwf_weights(np.array([[sigma_s]], dtype=np.complex128),
                            np.array([[sigma_n]], dtype=np.complex128), mu=mu)
        worst = max(worst, abs(w[0] - sigma_s / (sigma_s + mu * sigma_n)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and elapsed < 1.0
    assert _verdict(ok, "single-channel filter equals wiener gain to 1e-12 "
                        f"(worst {worst:.2e}, {elapsed:.2f} s)")


def test_stft_interior_round_trip():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1987)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1000, 20000))
        x = rng.uniform(0.1, 2.0) * rng.normal(size=n)
        back = synthesize(analyze(TimeSignal(x))).samples
        err = np.max(np.abs(back[FRAME_SIZE:n - FRAME_SIZE] - x[FRAME_SIZE:n - FRAME_SIZE]))
        worst = max(worst, float(err))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 5.0
    assert _verdict(ok, "stft interior round-trip within 1e-10 on 100 signals "
                        f"(worst {worst:.2e}, {elapsed:.1f} s)")


def _best_output(run_info, metric, step):
    return run_info["summary"]["selectors"]["best_output"][f"step{step}"][metric]["mean"]


def test_second_step_adds_at_least_two_db(oracle_local_run):
    step1 = _best_output(oracle_local_run, "delta_sir_db", 1)
    step2 = _best_output(oracle_local_run, "delta_sir_db", 2)
    budget = oracle_local_run["single_thread_s"]
    ok = step2 - step1 >= 2.0 and budget < 600.0
    assert _verdict(ok, f"two-step gain {step2 - step1:+.2f} dB (step1 {step1:.2f}, "
                        f"step2 {step2:.2f}; needs >= 2), {budget:.0f} s single-threaded")


def test_oracle_delta_sir_absolute_level(oracle_local_run):
    step2 = _best_output(oracle_local_run, "delta_sir_db", 2)
    ok = step2 >= 18.0
    assert _verdict(ok, f"oracle-mask delta SIR {step2:.2f} dB against the 18 dB floor")


def test_local_mask_policy_protects_artifacts(oracle_local_run, oracle_distant_run):
    sar_local = _best_output(oracle_local_run, "sar_cnv_db", 2)
    sar_distant = _best_output(oracle_distant_run, "sar_cnv_db", 2)
    sir_gap = abs(_best_output(oracle_local_run, "delta_sir_db", 2)
                  - _best_output(oracle_distant_run, "delta_sir_db", 2))
    ok = sar_local >= sar_distant - 0.1 and sir_gap <= 1.0
    assert _verdict(ok, f"local SAR {sar_local:.2f} vs distant {sar_distant:.2f} dB "
                        f"(>= -0.1 allowed), delta SIR gap {sir_gap:.2f} dB (<= 1)")


def test_worst_node_benefits_most_from_cooperation(oracle_local_run):
    sel = oracle_local_run["summary"]["selectors"]
    gains = {}
    for rank in ("worst_input", "best_input"):
        gains[rank] = (sel[rank]["step2"]["delta_sir_db"]["mean"]
                       - sel[rank]["step1"]["delta_sir_db"]["mean"])
    margin = gains["worst_input"] - gains["best_input"]
    ok = margin >= 0.5
    assert _verdict(ok, f"step-2 gain at worst node {gains['worst_input']:.2f} dB vs best "
                        f"{gains['best_input']:.2f} dB (margin {margin:.2f} >= 0.5)")


def test_bandwidth_accounting_is_exact(oracle_local_run, oracle_distant_run):
    root = oracle_local_run["root"]
    # stored mask headers give each scene's grid without touching pipeline code
    mask_bytes = z_bytes = 0
    for sid in layout.list_scene_ids(root):
        cells = load_mask(layout.mask_file(root, sid, 0, 1)).values.size
        mask_bytes += 4 * cells * 4 * 3  # one float32 mask per ordered node pair
        z_bytes += 8 * cells * 4 * 3  # one complex64 signal per ordered node pair
    local = oracle_local_run["manifest"]["bytes"]
    distant = oracle_distant_run["manifest"]["bytes"]
    ok = (local["mask"] == 0 and local["z"] == z_bytes
          and distant["mask"] == mask_bytes and distant["z"] == z_bytes)
    assert _verdict(ok, f"bandwidth exact: local masks {local['mask']} B, distant masks "
                        f"{distant['mask']} B (expected {mask_bytes}), z {z_bytes} B both")


def test_metric_decomposition_and_identity(oracle_local_run):
    rng = np.random.default_rng(606)
    worst_residual = 0.0
    for _ in range(100):
        n = 1200
        speech = rng.normal(size=n)
        noise = rng.normal(size=n)
        est = (np.convolve(speech, rng.normal(size=5))[:n]
               + np.convolve(noise, rng.normal(size=3))[:n]
               + 0.1 * rng.normal(size=n))
        dec = bss_eval(est, [speech, noise], filter_len=32)
        energy = float(np.sum((dec.s_target + dec.e_interf + dec.e_artif) ** 2))
        worst_residual = max(
            worst_residual,
            abs(float(np.dot(dec.s_target, dec.e_interf))) / energy,
            abs(float(np.dot(dec.s_target + dec.e_interf, dec.e_artif))) / energy,
        )

    root = oracle_local_run["root"]
    scene_ids = layout.list_scene_ids(root)
    worst_delta = 0.0
    for sid in scene_ids:
        rendered = load_rendered(root, read_scene(layout.scene_json(root, sid)))
        identity = [TimeSignal(rendered.mixtures[k, 0]) for k in range(4)]
        rows = scene_metrics(rendered, {1: identity}, scene_id=sid)
        worst_delta = max(worst_delta, max(abs(r.delta_sir_db) for r in rows))
    ok = worst_residual <= 1e-6 and worst_delta <= 0.1 and len(scene_ids) == DESK_SCENES
    assert _verdict(ok, f"decomposition orthogonal (worst residual {worst_residual:.1e}) "
                        f"and identity delta SIR {worst_delta:.3f} dB across "
                        f"{len(scene_ids)} scenes")


def test_rebuild_is_byte_identical(tmp_path_factory):
    texts = {}
    for attempt in ("first", "second"):
        root = tmp_path_factory.mktemp(f"rebuild_{attempt}")
        run_cli(["generate", "--out", root, "--config", "random", "--n", 3,
                 "--seed", 777, "--duration", 6, "--synthetic-fixtures"])
        run_cli(["enhance", "--corpus", root, "--run", "det", "--mask-provider",
                 "oracle", "--workers", 3])
        run_cli(["evaluate", "--corpus", root, "--run", "det", "--workers", 3])
        texts[attempt] = (layout.metrics_csv(root, "det").read_bytes(),
                          layout.summary_json(root, "det").read_bytes())
    ok = texts["first"] == texts["second"]
    assert _verdict(ok, "regenerated corpus and run give byte-identical metrics "
                        "and summary (3 scenes, 3 workers)")
