"""Recording-level analysis: segment, repitch and analyze every frame."""

from __future__ import annotations

import logging
from fractions import Fraction

from scipy.signal import resample_poly

from .core import AudioBuffer, ControlTrace, FrameSpec, segment_frames
from .errors import InputError
from .orders import AnalysisConfig, OrderFrameResult, analyze_frame, window_length
from .repitch import resample_to_constant_pitch

log = logging.getLogger(__name__)


def to_rate(audio: AudioBuffer, trace: ControlTrace, rate: int):
    """Bring audio (polyphase, anti-aliased) and controls (linear) to ``rate``."""
    if audio.sample_rate == rate:
        return audio, trace
    ratio = Fraction(int(rate), audio.sample_rate)
    data = resample_poly(audio.data, ratio.numerator, ratio.denominator, axis=1)
    return AudioBuffer(data, rate), trace.resampled(rate)


def analyze_frames(frames, cfg: AnalysisConfig = AnalysisConfig(), warp: str = "source"):
    """Repitch each ``(audio, trace)`` frame to its mean RPM and analyze it."""
    results = []
    for audio, trace in frames:
        target = float(trace.rpm.mean())
        f0 = target / 60.0
        mono = AudioBuffer.mono(audio.mixdown(), audio.sample_rate)
        stable = resample_to_constant_pitch(mono, trace.rpm, target, method=warp)
        if stable.samples_per_channel < window_length(f0, cfg):
            log.info("skipping frame at %.0f RPM: too short for %d periods", target, cfg.periods)
            continue
        results.append(analyze_frame(stable, f0, float(trace.torque.mean()), cfg))
    return results


def analyze_recording(audio: AudioBuffer, trace: ControlTrace, spec: FrameSpec = FrameSpec(),
                      cfg: AnalysisConfig = AnalysisConfig(), warp: str = "source"
                      ) -> list[OrderFrameResult]:
    """Order results for every usable frame of an annotated recording.

    Parameters
    ----------
    audio : AudioBuffer
        Engine audio, mono or stereo (stereo is averaged).
    trace : ControlTrace
        Controls aligned sample-for-sample with ``audio``.
    """
    if spec.analysis_rate != cfg.fs:
        raise InputError("frame spec and analysis config disagree on the analysis rate")
    if audio.channels > 2:
        raise InputError("pass the audio channels only (demux annotated files first)")
    if audio.samples_per_channel != len(trace):
        raise InputError("audio and trace lengths differ")
    audio, trace = to_rate(audio, trace, spec.analysis_rate)
    n = min(audio.samples_per_channel, len(trace))
    audio = AudioBuffer(audio.data[:, :n], audio.sample_rate)
    trace = trace.slice(0, n)
    return analyze_frames(segment_frames(audio, trace, spec), cfg, warp)

