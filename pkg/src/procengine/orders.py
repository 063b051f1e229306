"""Frequency-aligned order analysis.

The analysis window spans an integer number of fundamental periods and is
zero-padded, so with the default settings order ``h`` falls on bin
``h * periods * pad``. Each order is then located by a tapered,
magnitude-weighted centroid inside the region bounded by the midpoints to
its neighbours.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window

from .core import ANALYSIS_RATE, AudioBuffer
from .errors import DomainError, FormatError, InputError

DEFAULT_ORDERS = tuple(0.5 * k for k in range(1, 129))
CENTROID_EPS = 1e-12
TUKEY_TAPER = 0.5
MAX_MISALIGNMENT = 0.1
WINDOWS = ("blackmanharris", "hann", "rect")


@dataclass(frozen=True)
class AnalysisConfig:
    periods: int = 20
    pad: int = 4
    fs: float = ANALYSIS_RATE
    orders: tuple = DEFAULT_ORDERS
    #: Window applied to the first ``M`` samples before zero-padding.
    window: str = "blackmanharris"

    def __post_init__(self):
        if self.periods < 1 or self.pad < 1 or not self.fs > 0:
            raise InputError("periods and pad must be >= 1 and fs > 0")
        orders = np.asarray(self.orders, dtype=np.float64)
        if orders.ndim != 1 or orders.size == 0:
            raise InputError("orders must be a non-empty sequence")
        if orders.size > 1 and not np.allclose(np.diff(orders), 0.5):
            raise InputError("orders must be increasing in steps of 0.5")
        if orders[0] <= 0:
            raise InputError("orders must be positive")
        if self.window not in WINDOWS:
            raise InputError(f"unknown analysis window {self.window!r}")
        object.__setattr__(self, "orders", tuple(float(h) for h in orders))

    @property
    def order_array(self) -> np.ndarray:
        return np.asarray(self.orders)

    @property
    def order1_bin(self) -> int:
        """Nominal bin of order 1, ``periods * pad``."""
        return self.periods * self.pad


@dataclass
class OrderFrameResult:
    rpm_mean: float
    torque_mean: float
    orders: np.ndarray
    deviation: np.ndarray
    magnitude: np.ndarray
    out_of_band: np.ndarray = None
    misalignment: float = 0.0

    def __post_init__(self):
        self.orders = np.asarray(self.orders, dtype=np.float64)
        self.deviation = np.asarray(self.deviation, dtype=np.float64)
        self.magnitude = np.asarray(self.magnitude, dtype=np.float64)
        if self.out_of_band is None:
            self.out_of_band = np.zeros(self.orders.size, dtype=bool)
        self.out_of_band = np.asarray(self.out_of_band, dtype=bool)
        n = self.orders.size
        if not (self.deviation.size == self.magnitude.size == self.out_of_band.size == n):
            raise InputError("one deviation and magnitude per order required")
        if np.any(self.magnitude < 0):
            raise InputError("magnitudes must be non-negative")

    def to_record(self) -> dict:
        return {
            "rpm_mean": self.rpm_mean,
            "torque_mean": self.torque_mean,
            "misalignment": self.misalignment,
            "orders": self.orders.tolist(),
            "deviation": self.deviation.tolist(),
            "magnitude": self.magnitude.tolist(),
            "out_of_band": self.out_of_band.astype(int).tolist(),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "OrderFrameResult":
        try:
            return cls(
                float(rec["rpm_mean"]), float(rec["torque_mean"]), rec["orders"],
                rec["deviation"], rec["magnitude"], rec.get("out_of_band"),
                float(rec.get("misalignment", 0.0)),
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad frame record: {exc}") from exc


def save_results(results, path) -> None:
    """One JSON object per line, one line per analyzed frame."""
    with open(path, "w") as fh:
        for res in results:
            fh.write(json.dumps(res.to_record()))
            fh.write("\n")


def load_results(path) -> list[OrderFrameResult]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            out.append(OrderFrameResult.from_record(rec))
    return out


def window_length(f0: float, cfg: AnalysisConfig = AnalysisConfig()) -> int:
    """``floor(fs / f0 * periods)`` samples.

    A relative slack of 1e-9 keeps exact ratios such as 2000 RPM
    (fs/f0 = 480) from flooring one sample short through rounding.
    """
    if not f0 > 0:
        raise DomainError("fundamental frequency must be positive")
    return int(np.floor(cfg.fs * cfg.periods / f0 * (1 + 1e-9)))


def fft_size(M: int, cfg: AnalysisConfig = AnalysisConfig()) -> int:
    if M < 1:
        raise InputError("window length must be >= 1")
    return int(M) * cfg.pad


def order_bins(cfg: AnalysisConfig = AnalysisConfig()) -> np.ndarray:
    """Nominal bin index of every configured order, ``h * periods * pad``."""
    return cfg.order_array * cfg.order1_bin


def exact_order1_bin(f0: float, cfg: AnalysisConfig = AnalysisConfig()) -> float:
    """``f0 * N_FFT / fs``; equals ``periods * pad`` when ``fs/f0*periods`` is integral."""
    return f0 * fft_size(window_length(f0, cfg), cfg) / cfg.fs


def tukey_weights(k: np.ndarray, lo: float, hi: float, taper: float = TUKEY_TAPER) -> np.ndarray:
    """Tapered-cosine weights over ``[lo, hi]``: 1 in the middle, 0 at the edges."""
    u = (np.asarray(k, dtype=np.float64) - lo) / (hi - lo)
    w = np.ones_like(u)
    edge = taper / 2
    if edge > 0:
        left = u < edge
        right = u > 1 - edge
        w[left] = 0.5 * (1 - np.cos(np.pi * u[left] / edge))
        w[right] = 0.5 * (1 - np.cos(np.pi * (1 - u[right]) / edge))
    w[(u < 0) | (u > 1)] = 0.0
    return w


def centroid(magnitudes, weights, bins, fallback: float) -> float:
    """Weighted mean bin ``sum(k*M*w) / sum(M*w)``.

    Returns ``fallback`` (the ideal bin) when the weighted mass is below
    :data:`CENTROID_EPS`.
    """
    mw = np.asarray(magnitudes, dtype=np.float64) * np.asarray(weights, dtype=np.float64)
    denom = mw.sum()
    if denom < CENTROID_EPS:
        return float(fallback)
    return float(np.dot(np.asarray(bins, dtype=np.float64), mw) / denom)


def parabolic_magnitude(spectrum: np.ndarray, position: float) -> float:
    """Log-magnitude parabola through the three bins around ``round(position)``.

    Falls back to the centre bin when it is not a local peak.
    """
    k0 = int(round(position))
    if k0 <= 0 or k0 >= spectrum.size - 1:
        return float(spectrum[min(max(k0, 0), spectrum.size - 1)])
    a, b, c = spectrum[k0 - 1], spectrum[k0], spectrum[k0 + 1]
    if b <= 0 or a <= 0 or c <= 0 or b < max(a, c):
        return float(b)
    la, lb, lc = np.log(a), np.log(b), np.log(c)
    d = position - k0
    return float(np.exp(lb + 0.5 * d * (lc - la) + 0.5 * d * d * (lc - 2 * lb + la)))


def region_bounds(centres: np.ndarray, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    """Midpoints between neighbouring order bins.

    The lowest order's lower edge is the midpoint to DC and the highest
    order's upper edge mirrors its lower half-width.
    """
    lower = np.empty_like(centres)
    upper = np.empty_like(centres)
    lower[1:] = 0.5 * (centres[1:] + centres[:-1])
    upper[:-1] = lower[1:]
    lower[0] = 0.5 * centres[0]
    upper[-1] = centres[-1] + 0.5 * spacing
    return lower, upper


def analysis_window(M: int, kind: str = "blackmanharris") -> np.ndarray:
    """Periodic window; a rectangular window leaks off-bin partials into
    neighbouring regions and biases the centroid."""
    if kind == "rect":
        return np.ones(M)
    return get_window(kind, M, fftbins=True)


def analyze_frame(frame: AudioBuffer, f0: float, torque_mean: float = 0.0,
                  cfg: AnalysisConfig = AnalysisConfig()) -> OrderFrameResult:
    """Per-order deviation and magnitude of one pitch-stabilized frame.

    Parameters
    ----------
    frame : AudioBuffer
        Mono frame at ``cfg.fs`` whose fundamental is constant at ``f0``.
    f0 : float
        Fundamental (crankshaft) frequency in Hz.
    torque_mean : float
        Passed through to label the result.

    Returns
    -------
    OrderFrameResult
        Magnitudes are linear sinusoid amplitudes; orders whose region
        crosses Nyquist are zeroed and flagged out of band.
    """
    if frame.sample_rate != cfg.fs:
        raise InputError(f"frame rate {frame.sample_rate} != analysis rate {cfg.fs}")
    M = window_length(f0, cfg)
    x = frame.signal
    if x.size < M:
        raise InputError(f"frame of {x.size} samples shorter than window {M}")
    n_fft = fft_size(M, cfg)
    win = analysis_window(M, cfg.window)
    spectrum = np.abs(np.fft.rfft(x[:M] * win, n_fft)) * (2.0 / win.sum())

    b1 = f0 * n_fft / cfg.fs
    misalignment = abs(b1 - cfg.order1_bin)
    if misalignment >= MAX_MISALIGNMENT:
        raise InputError(f"order-1 bin misaligned by {misalignment:.3f} bins")
    orders = cfg.order_array
    centres = orders * b1
    lower, upper = region_bounds(centres, 0.5 * b1)
    nyquist_bin = n_fft // 2

    deviation = np.zeros(orders.size)
    magnitude = np.zeros(orders.size)
    out_of_band = upper > nyquist_bin
    for i in np.flatnonzero(~out_of_band):
        k = np.arange(int(np.ceil(lower[i])), int(np.floor(upper[i])) + 1)
        w = tukey_weights(k, lower[i], upper[i])
        # the region median estimates the noise/leakage floor; left in, it
        # drags the centroid toward the region centre
        mags = spectrum[k]
        b_hat = centroid(np.maximum(mags - np.median(mags), 0.0), w, k, fallback=centres[i])
        deviation[i] = b_hat / b1 - orders[i]
        magnitude[i] = parabolic_magnitude(spectrum, b_hat)
    return OrderFrameResult(
        rpm_mean=60.0 * f0, torque_mean=float(torque_mean), orders=orders,
        deviation=deviation, magnitude=magnitude, out_of_band=out_of_band,
        misalignment=misalignment,
    )
