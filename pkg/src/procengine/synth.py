"""Harmonic-plus-noise engine synthesizer.

The chain per output channel is::

    harmonics -> pink amplitude modulation -> + burst noise -> resonator bank

Harmonics come from a 128-voice phase-accumulating oscillator bank whose
amplitudes and order deviations are read from a :class:`TimbreTable` at
every sample. The two stereo channels share the harmonic core and differ in
noise seeds and resonator delays.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .core import OUTPUT_RATE, AudioBuffer, ControlTrace
from .errors import FormatError, ParameterError
from .noise import BurstNoise, PinkNoise
from .resonators import ResonatorBank
from .table import TimbreTable

BURST_ORDERS = (0.5, 1.0, 1.5, 2.0)
MUTE_RAMP_SECONDS = 0.010
BLOCK = 2048
#: Peak level used when a render would otherwise clip (-1 dBFS).
NORMALIZE_PEAK = 10 ** (-1 / 20)
CLIP_LEVEL = 1.0 - 2.0 ** -15


@dataclass
class SynthesisParams:
    alpha: float = 0.2
    burst_weights: tuple = (0.25, 0.25, 0.25, 0.25)
    burst_exponents: tuple = (4.0, 4.0, 4.0, 4.0)
    burst_cutoff: float = 2000.0
    burst_gain: float = 0.02
    resonator_delays: tuple = (0.0042, 0.0067, 0.0091, 0.0138)
    resonator_gains: tuple = (0.55, 0.45, 0.40, 0.30)
    #: Extra resonator delay on the right channel, seconds.
    stereo_offset: float = 0.0003
    pink_rows: int = 12
    sample_rate: int = OUTPUT_RATE
    master_gain: float = 1.0
    seed: int = 0

    def __post_init__(self):
        self.burst_weights = tuple(float(v) for v in self.burst_weights)
        self.burst_exponents = tuple(float(v) for v in self.burst_exponents)
        self.resonator_delays = tuple(float(v) for v in self.resonator_delays)
        self.resonator_gains = tuple(float(v) for v in self.resonator_gains)
        self.validate()

    def validate(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"alpha {self.alpha} outside [0, 1]")
        if len(self.burst_weights) != 4 or len(self.burst_exponents) != 4:
            raise ParameterError("burst noise needs four weights and four exponents")
        if any(w < 0 for w in self.burst_weights):
            raise ParameterError("burst weights must be >= 0")
        if any(not g > 0 for g in self.burst_exponents):
            raise ParameterError("burst exponents must be > 0")
        if not 0 < self.burst_cutoff < self.sample_rate / 2:
            raise ParameterError("burst cutoff must lie between 0 and Nyquist")
        if len(self.resonator_delays) != len(self.resonator_gains):
            raise ParameterError("one gain per resonator delay required")
        if any(not 0.0 <= g < 1.0 for g in self.resonator_gains):
            raise ParameterError("resonator gains must lie in [0, 1)")
        if any(d * self.sample_rate < 1 for d in self.resonator_delays):
            raise ParameterError("resonator delays must span at least one sample")
        if self.stereo_offset < 0 or self.burst_gain < 0 or self.master_gain < 0:
            raise ParameterError("offsets and gains must be non-negative")
        if self.pink_rows < 1 or self.sample_rate <= 0:
            raise ParameterError("pink_rows and sample_rate must be positive")

    @classmethod
    def bypass(cls, **overrides) -> "SynthesisParams":
        """Harmonics only: no noise, no resonance."""
        base = dict(alpha=0.0, burst_weights=(0.0,) * 4, resonator_gains=(0.0,) * 4)
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthesisParams":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise FormatError(f"unknown synthesis parameters: {sorted(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise FormatError(str(exc)) from exc

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_params(path) -> SynthesisParams:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return SynthesisParams.from_dict(doc)


def save_params(params: SynthesisParams, path) -> None:
    with open(path, "w") as fh:
        json.dump(params.to_dict(), fh, indent=2)


class HarmonicBank:
    """Phase accumulators and mute gains for the oscillator voices."""

    def __init__(self, n_voices: int, sample_rate: float):
        self.sample_rate = sample_rate
        self.phases = np.zeros(n_voices)
        self.gains = None
        self.ramp_step = 1.0 / max(1.0, MUTE_RAMP_SECONDS * sample_rate)

    def _voice_gains(self, audible: np.ndarray) -> np.ndarray | None:
        """Slew-limited 0/1 gains; ``None`` when every voice holds steady."""
        first = audible[0].astype(np.float64)
        if self.gains is None:
            self.gains = first.copy()
        steady = np.all(audible == audible[0], axis=0) & (self.gains == first)
        if steady.all():
            return None
        out = np.broadcast_to(first, audible.shape).copy()
        for j in np.flatnonzero(~steady):
            out[:, j] = _slew(audible[:, j], self.gains[j], self.ramp_step)
        self.gains = out[-1].copy()
        return out

    def render(self, rpm: np.ndarray, deviation: np.ndarray, amplitude: np.ndarray,
               orders: np.ndarray) -> np.ndarray:
        f0 = rpm / 60.0
        freq = (orders + deviation) * f0[:, np.newaxis]
        gains = self._voice_gains(freq < self.sample_rate / 2)
        phase = np.cumsum(freq, axis=0)
        phase -= freq
        phase *= 2 * np.pi / self.sample_rate
        phase += self.phases
        last = phase[-1] + freq[-1] * (2 * np.pi / self.sample_rate)
        self.phases = np.mod(last, 2 * np.pi)
        if gains is not None:
            amp = amplitude * gains
        elif not self.gains.all():
            amp = amplitude * self.gains
        else:
            amp = amplitude
        np.sin(phase, out=phase)
        return np.einsum("nh,nh->n", amp, phase)


def _slew(target: np.ndarray, g0: float, step: float) -> np.ndarray:
    out = np.empty(target.size)
    edges = np.flatnonzero(np.diff(target.astype(np.int8))) + 1
    starts = np.concatenate(([0], edges))
    stops = np.concatenate((edges, [target.size]))
    g = g0
    for a, b in zip(starts, stops):
        k = np.arange(1, b - a + 1)
        seg = g + k * step if target[a] else g - k * step
        out[a:b] = np.clip(seg, 0.0, 1.0)
        g = out[b - 1]
    return out


@dataclass
class ChannelState:
    pink: PinkNoise
    burst: BurstNoise
    resonators: ResonatorBank


@dataclass
class SynthState:
    """Everything a render carries from one block to the next."""

    harmonics: HarmonicBank
    channels: list = field(default_factory=list)

    @classmethod
    def create(cls, params: SynthesisParams, n_voices: int, n_channels: int = 2) -> "SynthState":
        fs = params.sample_rate
        seeds = np.random.SeedSequence(params.seed).spawn(2 * n_channels)
        channels = []
        for c in range(n_channels):
            delays = [d + c * params.stereo_offset for d in params.resonator_delays]
            channels.append(ChannelState(
                pink=PinkNoise(np.random.default_rng(seeds[2 * c]), params.pink_rows),
                burst=BurstNoise(np.random.default_rng(seeds[2 * c + 1]), BURST_ORDERS,
                                 params.burst_weights, params.burst_exponents,
                                 params.burst_cutoff, fs),
                resonators=ResonatorBank(delays, params.resonator_gains, fs),
            ))
        return cls(HarmonicBank(n_voices, fs), channels)


def _blocks(n: int, size: int | None = None):
    size = size or BLOCK
    for a in range(0, n, size):
        yield a, min(a + size, n)


def synth_harmonics(trace: ControlTrace, table: TimbreTable, state: HarmonicBank | None = None
                    ) -> AudioBuffer:
    """Additive render of every table order along the control trace.

    Voice ``h`` runs at ``(h + deviation) * rpm / 60`` Hz with the table
    amplitude; voices at or above Nyquist fade out over 10 ms.
    """
    fs = trace.sample_rate
    if state is None:
        state = HarmonicBank(table.orders.size, fs)
    out = np.empty(len(trace))
    for a, b in _blocks(len(trace)):
        dev, amp = table.lookup(trace.rpm[a:b], trace.torque[a:b])
        out[a:b] = state.render(trace.rpm[a:b], dev, amp, table.orders)
    return AudioBuffer.mono(out, fs)


def synth_pink_modulation(x, params: SynthesisParams, state: PinkNoise | None = None) -> np.ndarray:
    """``x * (1 - alpha + alpha * pink)`` with unit-RMS pink noise."""
    x = np.asarray(x, dtype=np.float64)
    if not 0.0 <= params.alpha <= 1.0:
        raise ParameterError(f"alpha {params.alpha} outside [0, 1]")
    if params.alpha == 0.0:
        return x.copy()
    if state is None:
        state = PinkNoise(np.random.default_rng(params.seed), params.pink_rows)
    pink = state.generate(x.size)
    return x * (1.0 - params.alpha + params.alpha * pink)


def synth_burst_noise(trace: ControlTrace, params: SynthesisParams,
                      state: BurstNoise | None = None) -> np.ndarray:
    """Lowpassed white noise times ``sum_m w_m |sin(phi_m)|**gamma_m``, scaled by ``burst_gain``."""
    if not any(params.burst_weights) or params.burst_gain == 0:
        return np.zeros(len(trace))
    if state is None:
        state = BurstNoise(np.random.default_rng(params.seed), BURST_ORDERS, params.burst_weights,
                           params.burst_exponents, params.burst_cutoff, trace.sample_rate)
    return params.burst_gain * state.generate(trace.rpm)


def synth_resonators(s, params: SynthesisParams, state: ResonatorBank | None = None) -> np.ndarray:
    if state is None:
        state = ResonatorBank(params.resonator_delays, params.resonator_gains, params.sample_rate)
    return state.process(s)


@dataclass
class Rendering:
    audio: AudioBuffer
    #: Gain applied to avoid clipping (1.0 when none was needed).
    gain: float = 1.0


def synthesize(trace: ControlTrace, table: TimbreTable, params: SynthesisParams = None
               ) -> Rendering:
    """Render stereo engine audio for a control trace.

    Traces at other rates are linearly resampled to ``params.sample_rate``.
    The result is scaled to -1 dBFS peak only if it would clip.
    """
    params = params or SynthesisParams()
    trace = trace.resampled(params.sample_rate)
    state = SynthState.create(params, table.orders.size)
    n = len(trace)
    out = np.empty((len(state.channels), n))
    for a, b in _blocks(n):
        rpm = trace.rpm[a:b]
        dev, amp = table.lookup(rpm, trace.torque[a:b])
        core = state.harmonics.render(rpm, dev, amp, table.orders)
        block_trace = trace.slice(a, b)
        for c, ch in enumerate(state.channels):
            s = synth_pink_modulation(core, params, ch.pink)
            s += synth_burst_noise(block_trace, params, ch.burst)
            out[c, a:b] = ch.resonators.process(s)
    if params.master_gain != 1.0:
        out *= params.master_gain
    gain = 1.0
    peak = np.max(np.abs(out)) if out.size else 0.0
    if peak > CLIP_LEVEL:
        gain = NORMALIZE_PEAK / peak
        out *= gain
    return Rendering(AudioBuffer(out, params.sample_rate), gain)
