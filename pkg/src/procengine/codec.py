"""RPM and torque annotations carried in audio channels 3 and 4.

Layout of an annotated file (16-bit PCM, any rate):

====  ===============================================
ch 1  engine audio, left
ch 2  engine audio, right
ch 3  RPM code   = round(rpm / 10000 * 32767)
ch 4  torque code = round(torque / 1000 * 32767)
====  ===============================================

Codes are signed 16-bit words in ``[-32767, 32767]``; decoding divides by
32767 and multiplies by the bound. One step is ~0.305 RPM and ~0.0305 Nm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AudioBuffer, ControlTrace
from .errors import FormatError, InputError, RangeError
from .wavio import FULL_SCALE

CODE_MAX = 32767


@dataclass(frozen=True)
class CodecSpec:
    rpm_bound: float = 10000.0
    torque_bound: float = 1000.0
    rpm_channel: int = 2
    torque_channel: int = 3

    @property
    def rpm_step(self) -> float:
        return self.rpm_bound / CODE_MAX

    @property
    def torque_step(self) -> float:
        return self.torque_bound / CODE_MAX


CODEC = CodecSpec()


def encode_value(values, bound: float, lower: float) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.size and (np.any(values < lower) or np.any(values > bound)
                        or not np.all(np.isfinite(values))):
        bad = values[(values < lower) | (values > bound) | ~np.isfinite(values)][0]
        raise RangeError(f"control value {bad} outside [{lower}, {bound}]")
    return np.round(values / bound * CODE_MAX).astype(np.int16)


def decode_value(codes, bound: float) -> np.ndarray:
    return np.asarray(codes, dtype=np.float64) / CODE_MAX * bound


def encode_controls(trace: ControlTrace, spec: CodecSpec = CODEC) -> tuple[np.ndarray, np.ndarray]:
    """16-bit codes for the RPM and torque channels."""
    rpm = encode_value(trace.rpm, spec.rpm_bound, 0.0)
    torque = encode_value(trace.torque, spec.torque_bound, -spec.torque_bound)
    return rpm, torque


def _channel_codes(channel: np.ndarray) -> np.ndarray:
    return np.round(np.asarray(channel) * FULL_SCALE).astype(np.int64)


def decode_controls(audio: AudioBuffer, spec: CodecSpec = CODEC) -> ControlTrace:
    if audio.channels != 4:
        raise FormatError(f"annotated audio needs 4 channels, got {audio.channels}")
    rpm = decode_value(_channel_codes(audio.data[spec.rpm_channel]), spec.rpm_bound)
    torque = decode_value(_channel_codes(audio.data[spec.torque_channel]), spec.torque_bound)
    return ControlTrace(rpm, torque, audio.sample_rate)


def mux(audio: AudioBuffer, trace: ControlTrace, spec: CodecSpec = CODEC) -> AudioBuffer:
    """Stereo audio plus encoded controls as one 4-channel buffer."""
    if audio.channels != 2:
        raise InputError(f"mux expects stereo audio, got {audio.channels} channels")
    if audio.samples_per_channel != len(trace) or audio.sample_rate != trace.sample_rate:
        raise InputError("audio and trace must share length and sample rate")
    rpm, torque = encode_controls(trace, spec)
    data = np.empty((4, len(trace)))
    data[:2] = audio.data
    data[spec.rpm_channel] = rpm / FULL_SCALE
    data[spec.torque_channel] = torque / FULL_SCALE
    return AudioBuffer(data, audio.sample_rate)


def demux(audio: AudioBuffer, spec: CodecSpec = CODEC) -> tuple[AudioBuffer, ControlTrace]:
    trace = decode_controls(audio, spec)
    return AudioBuffer(audio.data[:2].copy(), audio.sample_rate), trace
