"""Pitch-adaptive resampling.

A frame whose fundamental follows an RPM envelope is time-warped so the
fundamental sits at ``rpm_target / 60`` throughout, which keeps every
engine order on a fixed FFT bin during analysis.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from .core import AudioBuffer
from .errors import DomainError, InputError


def _check_envelope(rpm_envelope, rpm_target):
    rpm = np.asarray(rpm_envelope, dtype=np.float64)
    if rpm.ndim != 1 or rpm.size == 0:
        raise InputError("rpm envelope must be a non-empty 1-D sequence")
    if np.any(rpm <= 0) or not np.all(np.isfinite(rpm)):
        raise DomainError("rpm envelope must be strictly positive")
    if not rpm_target > 0:
        raise DomainError("rpm_target must be positive")
    return rpm


def compute_warped_index(rpm_envelope, rpm_target: float) -> np.ndarray:
    """Cumulative sum of the local ratio ``rpm_target / rpm[i]``.

    ``t'[n] = sum(rpm_target / rpm[i] for i in 0..n)``, so ``t'[0]`` is the
    first ratio rather than zero. The ratio is read at output index ``i``.

    >>> compute_warped_index([3000, 3000, 6000], 3000)
    array([1. , 2. , 2.5])
    """
    rpm = _check_envelope(rpm_envelope, rpm_target)
    return np.cumsum(rpm_target / rpm)


def source_warped_index(rpm_envelope, rpm_target: float) -> np.ndarray:
    """Warped positions with the RPM read at the source position.

    Solves ``dt'/dn = rpm_target / rpm(t'(n))`` exactly by inverting the
    cumulative engine rotation: output sample ``m`` reads the source at the
    position where ``m`` target-rate periods have elapsed. For slowly varying
    envelopes this coincides with :func:`compute_warped_index`; on ramps it
    avoids the drift that accumulates when the envelope is sampled at the
    output index instead.
    """
    rpm = _check_envelope(rpm_envelope, rpm_target)
    # rotation progress (in target-rate samples) at each source sample
    progress = np.concatenate(([0.0], np.cumsum(rpm[:-1] / rpm_target)))
    m = np.arange(int(np.floor(progress[-1])) + 1, dtype=np.float64)
    return np.interp(m, progress, np.arange(rpm.size, dtype=np.float64))


def resample_to_constant_pitch(frame: AudioBuffer, rpm_envelope, rpm_target: float | None = None,
                               method: str = "source") -> AudioBuffer:
    """Evaluate a natural cubic spline of ``frame`` at warped positions.

    Parameters
    ----------
    frame : AudioBuffer
        Mono frame.
    rpm_envelope : array_like
        One RPM value per frame sample.
    rpm_target : float, optional
        Defaults to the envelope mean.
    method : {"source", "printed"}
        ``"source"`` uses :func:`source_warped_index`; ``"printed"`` uses
        :func:`compute_warped_index` verbatim.

    Returns
    -------
    AudioBuffer
        Mono buffer truncated to the positions inside the source range.
    """
    x = frame.signal
    rpm = np.asarray(rpm_envelope, dtype=np.float64)
    if rpm.shape != x.shape:
        raise InputError(f"envelope length {rpm.size} != frame length {x.size}")
    if rpm_target is None:
        rpm_target = float(rpm.mean())
    if method == "source":
        positions = source_warped_index(rpm, rpm_target)
    elif method == "printed":
        positions = compute_warped_index(rpm, rpm_target)
    else:
        raise ValueError(f"unknown warp method {method!r}")
    positions = positions[positions <= x.size - 1]
    if x.size < 2:
        return AudioBuffer.mono(x[: positions.size], frame.sample_rate)
    spline = CubicSpline(np.arange(x.size, dtype=np.float64), x, bc_type="natural")
    return AudioBuffer.mono(spline(positions), frame.sample_rate)
