"""Room acoustics: Sabine, image-source RIRs, scene sampling, rendering.

The image-source check uses an independent oracle that mirrors the source
across the six wall planes breadth-first, deduplicating image positions and
keeping the minimal reflection count, rather than enumerating the lattice.
"""

import numpy as np
import pytest

from wasnlab.errors import DegenerateInputError, GeometryError, InfeasibilityError
from wasnlab.rooms import (
    MAX_ORDER_CAP,
    SINC_TAPS,
    SPEED_OF_SOUND,
    choose_reflection_order,
    render_scene,
    sabine_absorption,
    sample_scene,
    simulate_rir,
)
from wasnlab.signal_io import TimeSignal


def test_sabine_hand_value():
    # 6 x 4 x 3 room at rt60 = 0.5: V = 72, S = 108
    alpha = sabine_absorption(0.5, (6.0, 4.0, 3.0))
    assert abs(alpha - 0.161 * 72.0 / (108.0 * 0.5)) < 1e-12


def test_sabine_infeasible_rt60():
    with pytest.raises(InfeasibilityError):
        sabine_absorption(0.05, (8.0, 5.0, 3.0))
    with pytest.raises(InfeasibilityError):
        sabine_absorption(0.0, (6.0, 4.0, 3.0))


def test_reflection_order_monotone_in_absorption():
    dims = (6.0, 4.0, 2.8)
    orders = [choose_reflection_order(a, dims) for a in (0.1, 0.3, 0.5, 0.8)]
    assert all(1 <= o <= MAX_ORDER_CAP for o in orders)
    assert sorted(orders, reverse=True) == orders


def test_reflection_order_cap():
    assert choose_reflection_order(0.01, (8.0, 5.0, 3.0), tol=1e-9) == MAX_ORDER_CAP


def mirror_images_oracle(dims, source, order):
    """All image positions with <= order reflections, by explicit mirroring."""
    dims = np.asarray(dims, dtype=np.float64)

    def reflections(p):
        out = []
        for axis in range(3):
            for plane in (0.0, dims[axis]):
                q = p.copy()
                q[axis] = 2.0 * plane - p[axis]
                out.append(q)
        return out

    found = {tuple(np.round(np.asarray(source), 9)): 0}
    frontier = [np.asarray(source, dtype=np.float64)]
    for depth in range(1, order + 1):
        nxt = []
        for p in frontier:
            for q in reflections(p):
                key = tuple(np.round(q, 9))
                if key not in found:
                    found[key] = depth
                    nxt.append(q)
        frontier = nxt
    return found


def rir_oracle(dims, source, mic, absorption, order, sample_rate=16000):
    beta = np.sqrt(1.0 - absorption)
    window = np.hanning(SINC_TAPS)
    offsets = np.arange(SINC_TAPS) - SINC_TAPS // 2
    images = mirror_images_oracle(dims, source, order)
    taps = {}
    mic = np.asarray(mic, dtype=np.float64)
    length = 0
    for pos, refl in images.items():
        d = float(np.linalg.norm(np.asarray(pos) - mic))
        delay = d / SPEED_OF_SOUND * sample_rate
        centre = int(np.round(delay))
        length = max(length, centre + SINC_TAPS // 2 + 1)
        amp = beta**refl / d
        for o, w in zip(offsets, window):
            idx = centre + o
            if idx >= 0:
                taps[idx] = taps.get(idx, 0.0) + amp * np.sinc(o - (delay - centre)) * w
    rir = np.zeros(length)
    for idx, v in taps.items():
        if idx < length:
            rir[idx] = v
    return rir


@pytest.mark.parametrize("order", [1, 2])
def test_rir_matches_mirror_oracle(order):
    dims = (5.1, 4.2, 2.7)
    source = (1.3, 2.9, 1.45)
    mic = (3.7, 1.1, 1.2)
    got = simulate_rir(dims, source, mic, absorption=0.35, order=order)
    want = rir_oracle(dims, source, mic, 0.35, order)
    n = min(len(got), len(want))
    assert np.allclose(got[:n], want[:n], atol=1e-12)
    assert np.max(np.abs(got[n:]), initial=0.0) < 1e-12
    assert np.max(np.abs(want[n:]), initial=0.0) < 1e-12


def test_direct_path_delay_and_amplitude():
    dims = (6.0, 4.0, 3.0)
    source = (1.0, 2.0, 1.5)
    mic = (4.0, 2.0, 1.5)  # 3 m straight shot
    rir = simulate_rir(dims, source, mic, absorption=0.3, order=0)
    delay = 3.0 / SPEED_OF_SOUND * 16000
    assert abs(np.argmax(np.abs(rir)) - round(delay)) <= 1
    # windowed-sinc kernel has ~unit DC gain, so the tap sum is ~1/d
    assert abs(np.sum(rir) - 1.0 / 3.0) < 0.01 / 3.0


def test_higher_absorption_weakens_the_tail():
    dims = (5.0, 4.0, 2.6)
    source = (1.2, 1.1, 1.3)
    mic = (3.9, 2.8, 1.6)
    direct = int(np.linalg.norm(np.subtract(source, mic)) / SPEED_OF_SOUND * 16000)
    cut = direct + SINC_TAPS
    soft = simulate_rir(dims, source, mic, absorption=0.2, order=6)
    hard = simulate_rir(dims, source, mic, absorption=0.7, order=6)
    assert np.sum(hard[cut:] ** 2) < np.sum(soft[cut:] ** 2)


def test_positions_outside_room_rejected():
    with pytest.raises(GeometryError):
        simulate_rir((4.0, 4.0, 2.5), (5.0, 1.0, 1.0), (2.0, 2.0, 1.0), 0.3, 2)
    with pytest.raises(GeometryError):
        simulate_rir((4.0, 4.0, 2.5), (1.0, 1.0, 1.0), (2.0, 4.0, 1.0), 0.3, 2)


@pytest.fixture(scope="module")
def small_render():
    descriptor = sample_scene("random", rng_seed=909, scene_id="probe")
    rng = np.random.default_rng(4)
    speech = TimeSignal(rng.normal(scale=0.05, size=24000))
    noise = TimeSignal(rng.normal(scale=0.05, size=24000))
    return descriptor, speech, noise, render_scene(descriptor, speech, noise)


def test_mixtures_are_exact_sums(small_render):
    _, _, _, rendered = small_render
    assert np.array_equal(rendered.mixtures, rendered.speech_images + rendered.noise_images)


def test_render_shapes(small_render):
    _, speech, _, rendered = small_render
    assert rendered.speech_images.shape == rendered.noise_images.shape
    assert rendered.speech_images.shape[:2] == (4, 4)
    assert rendered.speech_images.shape[2] >= len(speech)
    assert rendered.target_delays.shape == (4, 4)
    assert rendered.noise_delays.shape == (4, 4)


def test_render_deterministic(small_render):
    descriptor, speech, noise, rendered = small_render
    again = render_scene(descriptor, speech, noise)
    assert np.array_equal(rendered.mixtures, again.mixtures)


def test_input_sir_matches_definition(small_render):
    _, _, _, rendered = small_render
    for k in range(4):
        s = rendered.speech_images[k, 0]
        n = rendered.noise_images[k, 0]
        want = 10.0 * np.log10(np.sum(s**2) / np.sum(n**2))
        assert abs(rendered.input_sir_db[k] - want) < 1e-12


def test_noise_gain_scales_noise_images(small_render):
    import dataclasses

    descriptor, speech, noise, _ = small_render
    r_lo = render_scene(dataclasses.replace(descriptor, noise_gain_db=-6.0), speech, noise)
    r_hi = render_scene(dataclasses.replace(descriptor, noise_gain_db=0.0), speech, noise)
    live = np.abs(r_lo.noise_images) > 1e-9
    ratio = r_hi.noise_images[live] / r_lo.noise_images[live]
    assert np.allclose(ratio, 10.0 ** (6.0 / 20.0), rtol=1e-6)
    assert np.array_equal(r_lo.speech_images, r_hi.speech_images)


def test_target_delays_follow_geometry(small_render):
    descriptor, _, _, rendered = small_render
    for k in range(4):
        for m in range(4):
            d = np.linalg.norm(descriptor.target_position - descriptor.mic_positions[k, m])
            want = d / SPEED_OF_SOUND * rendered.sample_rate
            assert abs(rendered.target_delays[k, m] - want) < 1e-9


def test_short_noise_is_looped(small_render):
    descriptor, speech, _, _ = small_render
    noise = TimeSignal(np.random.default_rng(6).normal(scale=0.05, size=7000))
    rendered = render_scene(descriptor, speech, noise)
    assert rendered.mixtures.shape[2] >= len(speech)


def test_silent_source_rejected(small_render):
    descriptor, speech, _, _ = small_render
    with pytest.raises(DegenerateInputError):
        render_scene(descriptor, speech, TimeSignal(np.zeros(24000)))
