import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from procengine.core import AudioBuffer
from procengine.errors import DomainError, InputError
from procengine.orders import (AnalysisConfig, OrderFrameResult, analyze_frame, centroid,
                               exact_order1_bin, fft_size, load_results, order_bins,
                               region_bounds, save_results, tukey_weights, window_length)

FS = 16000
CFG = AnalysisConfig()


def _tone(freqs, amps, n=FS * 2, phases=None):
    t = np.arange(n) / FS
    phases = np.zeros(len(freqs)) if phases is None else phases
    x = sum(a * np.sin(2 * np.pi * f * t + p) for f, a, p in zip(freqs, amps, phases))
    return AudioBuffer.mono(x, FS)


def test_window_length_examples():
    assert window_length(50.0) == 6400
    assert window_length(FS, AnalysisConfig(periods=1)) == 1
    # the 9609 example rounds 2000 RPM to 33.3 Hz; exactly 2000/60 Hz gives 9600
    assert window_length(33.3) == 9609
    assert window_length(2000 / 60) == 9600


def test_window_length_domain():
    with pytest.raises(DomainError):
        window_length(0.0)


def test_fft_size_and_resolution():
    n = fft_size(6400)
    assert n == 25600
    assert FS / n == pytest.approx(0.625)
    assert fft_size(6400, AnalysisConfig(pad=1)) == 6400


def test_nominal_order_bins():
    bins = order_bins()
    assert CFG.order1_bin == 80
    assert bins[0] == 40 and bins[-1] == 5120
    assert len(bins) == 128


def test_exact_bin_matches_nominal_when_integral():
    assert exact_order1_bin(50.0) == 80.0


def test_centroid_examples():
    k = np.arange(150, 171)
    tri = np.maximum(0, 5 - np.abs(k - 160)).astype(float)
    assert centroid(tri, np.ones_like(tri), k, 0) == 160.0
    assert centroid([1, 1], [1, 1], [158, 162], 0) == 160.0
    assert centroid([1, 2, 1], [1, 1, 1], [159, 160, 161], 0) == 160.0
    assert centroid([1, 3], [1, 1], [160, 161], 0) == 160.75


def test_centroid_fallback_on_silence():
    assert centroid(np.zeros(5), np.ones(5), np.arange(5), 2.5) == 2.5


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 10.0), min_size=3, max_size=30), st.floats(1e-3, 1e3))
def test_centroid_scale_invariant(mags, scale):
    m = np.array(mags)
    k = np.arange(m.size) + 100.0
    w = tukey_weights(k, 99.0, 100.0 + m.size)
    assert centroid(m * scale, w, k, 0) == pytest.approx(centroid(m, w, k, 0), rel=1e-12)


def test_tukey_weights_shape():
    k = np.linspace(0, 10, 101)
    w = tukey_weights(k, 0, 10)
    assert w[0] == 0 and w[-1] == pytest.approx(0, abs=1e-12)
    assert np.all(w[(k >= 2.5) & (k <= 7.5)] == 1)
    np.testing.assert_allclose(w, w[::-1], atol=1e-12)


def test_regions_tile_the_axis():
    centres = np.arange(1, 129) * 40.0
    lo, hi = region_bounds(centres, 40.0)
    np.testing.assert_array_equal(lo[1:], hi[:-1])
    assert lo[0] == 20 and hi[-1] == centres[-1] + 20


def test_harmonic_signal_has_zero_deviation():
    orders = CFG.order_array
    res = analyze_frame(_tone(orders * 50.0, np.full(orders.size, 0.01)), 50.0, cfg=CFG)
    assert np.max(np.abs(res.deviation)) < 1e-3
    np.testing.assert_allclose(res.magnitude, 0.01, rtol=0.01)
    assert res.misalignment == 0.0 and not res.out_of_band.any()


def test_sharp_partial_positive_deviation():
    res = analyze_frame(_tone([2.05 * 50.0], [0.3]), 50.0, cfg=CFG)
    i = int(np.flatnonzero(CFG.order_array == 2.0)[0])
    assert res.deviation[i] == pytest.approx(0.05, abs=0.005)
    assert res.magnitude[i] == pytest.approx(0.3, rel=0.05)


def test_silence_gives_fallback():
    res = analyze_frame(AudioBuffer.mono(np.zeros(FS), FS), 50.0, cfg=CFG)
    assert np.all(res.magnitude == 0) and np.all(res.deviation == 0)


def test_short_frame_rejected():
    with pytest.raises(InputError):
        analyze_frame(AudioBuffer.mono(np.zeros(1000), FS), 50.0, cfg=CFG)


def test_misaligned_fundamental_rejected():
    # fs/f0 = 2.5 with one period: M = 2, so the order-1 bin lands at 0.8
    cfg = AnalysisConfig(periods=1, pad=1)
    with pytest.raises(InputError):
        analyze_frame(AudioBuffer.mono(np.zeros(FS), FS), FS / 2.5, cfg=cfg)


def test_orders_above_nyquist_flagged():
    res = analyze_frame(_tone([200.0], [0.1]), 200.0, cfg=CFG)
    band = res.orders * 200.0 < FS / 2 - 100
    assert not res.out_of_band[band].any() and res.out_of_band[-1]
    assert np.all(res.magnitude[res.out_of_band] == 0)


def test_rect_and_hann_windows_available():
    for window in ("rect", "hann"):
        cfg = AnalysisConfig(window=window)
        res = analyze_frame(_tone([100.0], [0.2]), 50.0, cfg=cfg)
        assert res.magnitude[3] == pytest.approx(0.2, rel=0.02)


def test_results_round_trip(tmp_path):
    res = analyze_frame(_tone([100.0, 151.0], [0.2, 0.1]), 50.0, torque_mean=42.0, cfg=CFG)
    save_results([res, res], tmp_path / "r.jsonl")
    back = load_results(tmp_path / "r.jsonl")
    assert len(back) == 2
    assert isinstance(back[0], OrderFrameResult) and back[0].torque_mean == 42.0
    np.testing.assert_array_equal(back[1].deviation, res.deviation)
    np.testing.assert_array_equal(back[1].magnitude, res.magnitude)
