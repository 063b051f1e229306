"""Streaming noise sources for the synthesizer."""

from __future__ import annotations

import numpy as np
from scipy.signal import sosfilt


class PinkNoise:
    """Voss-McCartney pink noise with unit RMS.

    Row ``k`` is redrawn on samples whose 1-based index has exactly ``k``
    trailing zero bits, so at most one row changes per sample. A white row
    fills the top octave. Rows are Gaussian with unit variance and the sum
    is scaled by ``1/sqrt(rows + 1)``, giving unit RMS independent of block
    size.
    """

    def __init__(self, rng: np.random.Generator, rows: int = 12):
        self.rng = rng
        self.n_rows = rows
        self.rows = rng.standard_normal(rows)
        self.count = 0

    def generate(self, n: int) -> np.ndarray:
        if n <= 0:
            return np.zeros(0)
        draws = self.rng.standard_normal((n, 2))
        idx = self.count + 1 + np.arange(n, dtype=np.int64)
        lowbit = idx & -idx
        tz = np.round(np.log2(lowbit)).astype(np.int64)
        positions = np.arange(n)
        total = draws[:, 1].copy()
        for k in range(self.n_rows):
            hit = np.where(tz == k, positions, -1)
            last = np.maximum.accumulate(hit)
            vals = np.where(last >= 0, draws[np.maximum(last, 0), 0], self.rows[k])
            total += vals
            self.rows[k] = vals[-1]
        self.count += n
        return total / np.sqrt(self.n_rows + 1)


def one_pole_lowpass_sos(cutoff: float, sample_rate: float, sections: int = 3) -> np.ndarray:
    """Cascade of identical bilinear one-pole lowpass sections.

    Each section rolls off at 6 dB/oct, so three give 18 dB/oct.
    """
    k = np.tan(np.pi * cutoff / sample_rate)
    b0 = k / (1.0 + k)
    a1 = (k - 1.0) / (k + 1.0)
    return np.tile([b0, b0, 0.0, 1.0, a1, 0.0], (sections, 1))


class LowpassFilter:
    def __init__(self, cutoff: float, sample_rate: float, sections: int = 3):
        self.sos = one_pole_lowpass_sos(cutoff, sample_rate, sections)
        self.zi = np.zeros((sections, 2))

    def process(self, x: np.ndarray) -> np.ndarray:
        y, self.zi = sosfilt(self.sos, x, zi=self.zi)
        return y


class BurstNoise:
    """Lowpassed white noise gated by powered low-order sine envelopes."""

    def __init__(self, rng, orders, weights, exponents, cutoff, sample_rate):
        self.rng = rng
        self.orders = np.asarray(orders, dtype=np.float64)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.exponents = np.asarray(exponents, dtype=np.float64)
        self.sample_rate = sample_rate
        self.lpf = LowpassFilter(cutoff, sample_rate)
        self.phases = np.zeros(self.orders.size)

    def envelope(self, rpm: np.ndarray) -> np.ndarray:
        inc = (2 * np.pi / self.sample_rate) * np.outer(rpm / 60.0, self.orders)
        phase = np.cumsum(inc, axis=0)
        phase -= inc
        phase += self.phases
        self.phases = np.mod(phase[-1] + inc[-1], 2 * np.pi)
        return (self.weights * np.abs(np.sin(phase)) ** self.exponents).sum(axis=1)

    def generate(self, rpm: np.ndarray) -> np.ndarray:
        rpm = np.asarray(rpm, dtype=np.float64)
        if rpm.size == 0:
            return np.zeros(0)
        env = self.envelope(rpm)
        white = self.rng.standard_normal(rpm.size)
        return self.lpf.process(white) * env
