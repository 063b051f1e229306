"""Parallel feedback comb resonators."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError


class CombResonator:
    """``c[n] = s[n] + g * c[n - D]`` with a linearly interpolated fractional ``D``.

    Blocks are processed in chunks no longer than the integer delay, so each
    chunk only reads outputs that already exist.
    """

    def __init__(self, delay: float, gain: float, sample_rate: float):
        if not 0.0 <= gain < 1.0:
            raise ParameterError(f"feedback gain {gain} must lie in [0, 1)")
        d = delay * sample_rate
        if abs(d - round(d)) < 1e-9:
            d = float(round(d))
        self.int_delay = int(np.floor(d))
        self.frac = d - self.int_delay
        if self.int_delay < 1:
            raise ParameterError(f"delay {delay} s is shorter than one sample")
        self.gain = float(gain)
        self.history = np.zeros(self.int_delay + 1)

    def process(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        n = s.size
        D = self.int_delay
        L = self.history.size
        buf = np.empty(L + n)
        buf[:L] = self.history
        g0 = self.gain * (1.0 - self.frac)
        g1 = self.gain * self.frac
        for a in range(0, n, D):
            b = min(a + D, n)
            j0, j1 = L + a, L + b
            acc = s[a:b] + g0 * buf[j0 - D:j1 - D]
            if g1:
                acc += g1 * buf[j0 - D - 1:j1 - D - 1]
            buf[j0:j1] = acc
        self.history = buf[-L:].copy()
        return buf[L:]


class ResonatorBank:
    """Dry input plus the feedback contribution of each comb."""

    def __init__(self, delays, gains, sample_rate: float):
        delays = list(delays)
        gains = list(gains)
        if len(delays) != len(gains):
            raise ParameterError("one gain per resonator delay required")
        for g in gains:
            if not 0.0 <= g < 1.0:
                raise ParameterError(f"feedback gain {g} must lie in [0, 1)")
        self.combs = [CombResonator(d, g, sample_rate) for d, g in zip(delays, gains) if g > 0]

    def process(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        y = s.copy()
        for comb in self.combs:
            y += comb.process(s) - s
        return y
