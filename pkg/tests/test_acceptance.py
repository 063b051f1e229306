"""Acceptance criteria, each run at its stated tolerance and time budget.

Every criterion reports one ``PASS``/``FAIL`` line (collected by
``conftest.py`` into the terminal summary). Run directly with
``python tests/test_acceptance.py`` for the same lines without pytest.
"""

import tempfile
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.signal import sosfreqz, welch

from procengine.analysis import analyze_recording
from procengine.codec import CODE_MAX, decode_value, encode_value, mux
from procengine.core import ANALYSIS_RATE, ControlTrace, AudioBuffer
from procengine.dataset import generate, load_plan, read_manifest, sample_variation
from procengine.demo import write_demo_plan
from procengine.distribution import compare_to_table, order_distribution_map
from procengine.noise import one_pole_lowpass_sos
from procengine.orders import (AnalysisConfig, analyze_frame, exact_order1_bin, fft_size,
                               order_bins, window_length, MAX_MISALIGNMENT)
from procengine.reference import drive_trace, held_trace, reference_table
from procengine.repitch import resample_to_constant_pitch
from procengine.resonators import CombResonator
from procengine.synth import (SynthesisParams, synth_burst_noise, synth_harmonics,
                              synth_pink_modulation, synth_resonators, synthesize)
from procengine.table import TimbreTable, build_table
from procengine.wavio import read_wav

RESULTS = {}


def record(number, title, passed, detail, elapsed, budget=None):
    within = budget is None or elapsed < budget
    ok = bool(passed and within)
    timing = f"{elapsed:.2f} s" + (f" (budget {budget:g} s)" if budget else "")
    RESULTS[number] = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}; {timing}"
    print(RESULTS[number])
    return ok


# 1 ---------------------------------------------------------------------------

def criterion_1():
    t0 = time.perf_counter()
    cfg = AnalysisConfig()
    bins = order_bins(cfg)
    ok = cfg.order1_bin == 80 and np.array_equal(bins, np.round(bins))
    ok &= bins[0] == 40 and bins[-1] == 5120
    worst = 0.0
    for rpm in (2000, 3000, 4500):
        f0 = rpm / 60
        M = window_length(f0, cfg)
        # the nominal bin is a property of (P, p); the true one of f0 as well
        worst = max(worst, abs(exact_order1_bin(f0, cfg) - cfg.order1_bin))
        ok &= fft_size(M, cfg) == M * cfg.pad
    ok &= worst < MAX_MISALIGNMENT
    detail = (f"b1=80, all 128 orders on integer bins 40..5120; "
              f"true order-1 bin within {worst:.4f} bin of 80 at 2000/3000/4500 RPM")
    return record(1, "bin alignment", ok, detail, time.perf_counter() - t0, 1)


# 2 ---------------------------------------------------------------------------

def criterion_2(n_signals=30, seed=2024):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    cfg = AnalysisConfig()
    orders = cfg.order_array
    fs = ANALYSIS_RATE
    noise_rms = 1e-4
    worst_dev = worst_amp = 0.0
    checked = 0
    for _ in range(n_signals):
        rpm = rng.uniform(1000, 6000)
        f0 = rpm / 60
        dev = rng.uniform(-0.08, 0.08, orders.size)
        amp = 10 ** rng.uniform(-3.5, -1.5, orders.size)
        n = window_length(f0, cfg) + 16
        trace = ControlTrace.constant(rpm, 0.0, n, fs)
        x = synth_harmonics(trace, TimbreTable.uniform(dev, amp, orders)).signal
        x = x + rng.normal(0, noise_rms, n)
        res = analyze_frame(AudioBuffer.mono(x, fs), f0, cfg=cfg)
        # voice power against the noise power inside its half-order region
        region_noise = noise_rms ** 2 * (0.5 * f0) / (fs / 2)
        snr = 10 * np.log10(0.5 * amp ** 2 / region_noise)
        use = (snr > 40) & ~res.out_of_band & (orders * f0 < fs / 2)
        checked += int(use.sum())
        worst_dev = max(worst_dev, np.max(np.abs(res.deviation[use] - dev[use])))
        worst_amp = max(worst_amp, np.max(np.abs(res.magnitude[use] / amp[use] - 1)))
    ok = worst_dev <= 0.005 and worst_amp <= 0.05 and checked > 0
    detail = (f"{checked} voices over {n_signals} signals, max |dδ|={worst_dev:.4f} (≤0.005), "
              f"max amplitude error={100 * worst_amp:.2f}% (≤5%)")
    return record(2, "analysis round trip", ok, detail, time.perf_counter() - t0, 30)


# 3 ---------------------------------------------------------------------------

def criterion_3():
    t0 = time.perf_counter()
    fs = ANALYSIS_RATE
    n = 65536
    rpm = np.linspace(2400, 3600, n)
    phase = 2 * np.pi * np.cumsum(rpm / 60) / fs
    x = sum(np.sin(h * phase) for h in range(1, 7))
    out = resample_to_constant_pitch(AudioBuffer.mono(x, fs), rpm, 3000.0).signal
    spec = np.abs(np.fft.rfft(out * np.hanning(out.size)))
    df = fs / out.size
    errors = []
    for h in range(1, 7):
        target = h * 50.0 / df
        lo, hi = int(target - 25 / df), int(target + 25 / df)
        errors.append(abs(lo + np.argmax(spec[lo:hi]) - target))
    worst = max(errors)
    detail = f"6 partials of a 2400->3600 RPM chirp, worst peak offset {worst:.2f} bin (≤1)"
    return record(3, "repitch stabilization", worst <= 1, detail, time.perf_counter() - t0, 5)


# 4 ---------------------------------------------------------------------------

def criterion_4():
    t0 = time.perf_counter()
    words = np.arange(-32768, 32768)
    ok = True
    parts = []
    for name, bound, lower, half, dense_tol in (("RPM", 10000.0, 0.0, 0.153, 0.31),
                                                ("Nm", 1000.0, -1000.0, 0.0153, 0.031)):
        values = decode_value(words, bound)
        inside = (values >= lower) & (values <= bound)
        # every code's value and the edges of its quantization cell round-trip
        err = 0.0
        for shift in (-0.4999, 0.0, 0.4999):
            x = np.clip(values[inside] + shift * bound / CODE_MAX, lower, bound)
            err = max(err, np.max(np.abs(decode_value(encode_value(x, bound, lower), bound) - x)))
        exact = np.array_equal(encode_value(values[inside], bound, lower), words[inside])
        dense = np.linspace(lower, bound, 2_000_001)
        dense_err = np.max(np.abs(decode_value(encode_value(dense, bound, lower), bound) - dense))
        ok &= exact and err <= half and dense_err <= dense_tol
        parts.append(f"{name}: {inside.sum()} codes, cell error {err:.4g} (≤{half}), "
                     f"dense error {dense_err:.4g} (≤{dense_tol})")
    return record(4, "codec resolution", ok, "; ".join(parts), time.perf_counter() - t0, 5)


# 5 ---------------------------------------------------------------------------

def criterion_5():
    t0 = time.perf_counter()
    fs = 48000
    rng = np.random.default_rng(5)
    x = rng.uniform(-1, 1, fs)
    trace = ControlTrace(np.linspace(900, 6500, fs), np.zeros(fs), fs)
    pink = np.array_equal(synth_pink_modulation(x, SynthesisParams(alpha=0.0)), x)
    burst = not np.any(synth_burst_noise(trace, SynthesisParams(burst_weights=(0, 0, 0, 0))))
    res = np.array_equal(synth_resonators(x, SynthesisParams(resonator_gains=(0, 0, 0, 0))), x)
    table = TimbreTable.uniform(0.01, 0.004, AnalysisConfig().order_array)
    whole = synthesize(trace, table, SynthesisParams.bypass()).audio.data
    mono = synth_harmonics(trace, table).signal
    composed = np.array_equal(whole[0], whole[1]) and np.max(np.abs(whole[0] - mono)) < 1e-12
    imp = np.zeros(fs // 5)
    imp[0] = 1.0
    g, tau = 0.9, 480
    y = CombResonator(tau / fs, g, fs).process(imp)
    expected = np.zeros_like(y)
    expected[::tau] = g ** np.arange(expected[::tau].size)
    comb_err = np.max(np.abs(y - expected))
    ok = pink and burst and res and composed and comb_err <= 1e-6
    detail = (f"alpha=0 {'exact' if pink else 'NOT exact'}, w=0 {'silent' if burst else 'NOT silent'}, "
              f"g=0 {'exact' if res else 'NOT exact'}, full bypass = mono render "
              f"{'yes' if composed else 'no'}; comb (g=0.9, 10 ms) error {comb_err:.2g} (≤1e-6)")
    return record(5, "component identities", ok, detail, time.perf_counter() - t0, 5)


# 6 ---------------------------------------------------------------------------

def criterion_6():
    t0 = time.perf_counter()
    fs = 48000
    pink = synth_pink_modulation(np.ones(1 << 21), SynthesisParams(alpha=1.0, seed=6))
    f, p = welch(pink, fs, nperseg=1 << 15)
    band = (f >= 40) & (f <= 4000)
    slope = np.polyfit(np.log2(f[band]), 10 * np.log10(p[band]), 1)[0]
    fc = SynthesisParams().burst_cutoff
    _, h = sosfreqz(one_pole_lowpass_sos(fc, fs), worN=[2 * fc, 4 * fc], fs=fs)
    drop = 20 * np.log10(abs(h[0]) / abs(h[1]))
    ok = abs(slope + 3) <= 0.5 and abs(drop - 18) <= 2
    detail = (f"pink slope {slope:.2f} dB/oct over 40 Hz-4 kHz (-3±0.5); "
              f"LPF {drop:.2f} dB from {2 * fc:g} to {4 * fc:g} Hz (18±2)")
    return record(6, "noise spectra", ok, detail, time.perf_counter() - t0, 10)


# 7 ---------------------------------------------------------------------------

def criterion_7():
    t0 = time.perf_counter()
    fs = 48000
    hold = 65536 * 3
    points = [(r, q) for r in (1500, 2500, 3500, 4500) for q in (0, 200, 400)]
    reference = reference_table("reference", seed=3)
    source = held_trace(points, hold, fs, wobble=0.01)
    recording = synthesize(source, reference, SynthesisParams.bypass(seed=1))
    learned = build_table(analyze_recording(recording.audio, source), engine_id="learned")
    unseen_points = points[::-1][5:] + points[::-1][:5]
    unseen = held_trace(unseen_points, hold, fs, wobble=0.015, wobble_hz=0.3)
    render = synthesize(unseen, learned, SynthesisParams.bypass(seed=2))
    dist = order_distribution_map([mux(render.audio, unseen)])
    rows = compare_to_table(dist, reference, max_order=8)
    worst = max(r.relative_error for r in rows)
    ok = len(rows) == 12 * 16 and worst <= 0.10 and recording.gain == render.gain == 1.0
    detail = (f"{int(dist.occupied.sum())} occupied cells x 16 orders, "
              f"max relative error {100 * worst:.2f}% (≤10%)")
    return record(7, "end-to-end self-consistency", ok, detail, time.perf_counter() - t0, 120)


# 8 ---------------------------------------------------------------------------

def criterion_8():
    fs = 48000
    trace = drive_trace(60.0, fs, seed=8)
    table = reference_table("bench", seed=8)
    params = SynthesisParams()
    t0 = time.perf_counter()
    r = synthesize(trace, table, params)
    elapsed = time.perf_counter() - t0
    ok = r.audio.samples_per_channel == 60 * fs and table.orders.size == 128
    detail = (f"60 s at 48 kHz, 128 voices, pink + burst noise, "
              f"{len(params.resonator_gains)} resonators: {60 / elapsed:.2f}x real time")
    return record(8, "throughput", ok, detail, elapsed, 60)


# 9 ---------------------------------------------------------------------------

def criterion_9():
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        plan_path = write_demo_plan(root / "plan")
        runs = []
        for name in ("run1", "run2"):
            plan = load_plan(plan_path)
            plan.output_dir = root / name
            generate(plan)
            rows = read_manifest(plan.output_dir / "manifest.tsv")
            files = {r["path"]: (plan.output_dir / r["path"]).read_bytes() for r in rows}
            runs.append((rows, files, (plan.output_dir / "manifest.tsv").read_bytes()))
        (rows, files, manifest), (_, files2, manifest2) = runs
        identical = files == files2 and manifest == manifest2
        plan = load_plan(plan_path)
        consistent = len(rows) == 12 and len(files) == 12
        for item, row in zip(plan.items(), rows):
            spec = plan.sets[item.set_index]
            params = sample_variation(spec.variation, [plan.seed, item.set_index], item.index,
                                      SynthesisParams.from_dict(spec.base))
            audio = read_wav(root / "run1" / row["path"])
            consistent &= (row["status"] == "ok" and row["engine_id"] == item.table_id
                           and row["trace_id"] == item.trace_id
                           and row["params_hash"] == params.digest()
                           and audio.channels == 4
                           and audio.samples_per_channel == int(row["samples"])
                           and abs(audio.duration - float(row["duration_s"])) < 1e-6)
    detail = (f"12-item demo plan: outputs {'byte-identical' if identical else 'DIFFER'} across "
              f"two runs, manifest {'consistent' if consistent else 'INCONSISTENT'}")
    return record(9, "dataset determinism", identical and consistent, detail,
                  time.perf_counter() - t0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9]


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 10)])
def test_acceptance(criterion):
    assert criterion()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
