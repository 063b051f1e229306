"""Domain containers and frame segmentation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import InputError

ANALYSIS_RATE = 16000
OUTPUT_RATE = 48000
#: Samples below this RPM count as "engine off" (absorbs 0.3 RPM codec steps).
ZERO_RPM_THRESHOLD = 1.0


@dataclass
class AudioBuffer:
    """Multi-channel audio, ``data`` shaped ``(channels, samples)``."""

    data: np.ndarray
    sample_rate: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        if data.ndim != 2:
            raise InputError("audio data must be 1-D or (channels, samples)")
        if not 1 <= data.shape[0] <= 4:
            raise InputError(f"unsupported channel count {data.shape[0]}")
        if self.sample_rate <= 0:
            raise InputError("sample rate must be positive")
        self.data = data
        self.sample_rate = int(self.sample_rate)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def samples_per_channel(self) -> int:
        return self.data.shape[1]

    @property
    def duration(self) -> float:
        return self.samples_per_channel / self.sample_rate

    @classmethod
    def mono(cls, samples, sample_rate: int) -> "AudioBuffer":
        return cls(np.asarray(samples, dtype=np.float64)[np.newaxis, :], sample_rate)

    @property
    def signal(self) -> np.ndarray:
        """The single channel of a mono buffer."""
        if self.channels != 1:
            raise InputError("expected a mono buffer")
        return self.data[0]

    def mixdown(self) -> np.ndarray:
        return self.data.mean(axis=0)


@dataclass
class ControlTrace:
    """Per-sample RPM and torque envelopes."""

    rpm: np.ndarray
    torque: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.rpm = np.atleast_1d(np.asarray(self.rpm, dtype=np.float64))
        self.torque = np.atleast_1d(np.asarray(self.torque, dtype=np.float64))
        if self.rpm.shape != self.torque.shape or self.rpm.ndim != 1:
            raise InputError("rpm and torque must be 1-D sequences of equal length")
        if self.sample_rate <= 0:
            raise InputError("sample rate must be positive")
        self.sample_rate = int(self.sample_rate)

    def __len__(self):
        return self.rpm.size

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    @classmethod
    def constant(cls, rpm: float, torque: float, n: int, sample_rate: int) -> "ControlTrace":
        return cls(np.full(n, float(rpm)), np.full(n, float(torque)), sample_rate)

    def slice(self, start: int, stop: int) -> "ControlTrace":
        return ControlTrace(self.rpm[start:stop], self.torque[start:stop], self.sample_rate)

    def resampled(self, sample_rate: int) -> "ControlTrace":
        """Linearly interpolate the envelopes onto another sample grid."""
        sample_rate = int(sample_rate)
        if sample_rate == self.sample_rate:
            return self
        n_out = int(round(len(self) * sample_rate / self.sample_rate))
        t_out = np.arange(n_out) / sample_rate
        t_in = np.arange(len(self)) / self.sample_rate
        return ControlTrace(
            np.interp(t_out, t_in, self.rpm),
            np.interp(t_out, t_in, self.torque),
            sample_rate,
        )


@dataclass(frozen=True)
class FrameSpec:
    frame_length: int = 65536
    analysis_rate: int = ANALYSIS_RATE

    def __post_init__(self):
        if self.frame_length <= 0 or self.analysis_rate <= 0:
            raise InputError("frame length and analysis rate must be positive")

    @property
    def duration(self) -> float:
        return self.frame_length / self.analysis_rate


def iter_frames(n_samples: int, frame_length: int) -> Iterator[tuple[int, int]]:
    for start in range(0, n_samples - frame_length + 1, frame_length):
        yield start, start + frame_length


def segment_frames(audio: AudioBuffer, trace: ControlTrace, spec: FrameSpec = FrameSpec()):
    """Cut audio and controls into contiguous analysis frames.

    Frames containing any sample below :data:`ZERO_RPM_THRESHOLD` are
    skipped, as is a trailing partial frame.

    Returns
    -------
    list of (AudioBuffer, ControlTrace)
    """
    if audio.samples_per_channel != len(trace):
        raise InputError(
            f"audio has {audio.samples_per_channel} samples but trace has {len(trace)}"
        )
    if audio.sample_rate != trace.sample_rate:
        raise InputError("audio and trace sample rates differ")
    frames = []
    for start, stop in iter_frames(len(trace), spec.frame_length):
        if np.any(trace.rpm[start:stop] < ZERO_RPM_THRESHOLD):
            continue
        frames.append(
            (AudioBuffer(audio.data[:, start:stop], audio.sample_rate), trace.slice(start, stop))
        )
    return frames
