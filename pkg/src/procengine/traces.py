"""Control traces as CSV text or annotated WAV files.

CSV layout::

    # sample_rate=48000
    sample_index,rpm,torque
    0,812.5,14.2
    ...

The ``sample_rate`` comment is required; ``sample_index`` is optional on
input and ignored (rows are taken as consecutive samples).
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .codec import decode_controls
from .core import ControlTrace
from .errors import FormatError, StorageError
from .wavio import read_wav


def read_trace_csv(path) -> ControlTrace:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise StorageError(f"{path}: {exc.strerror or exc}") from exc
    sample_rate = None
    lines = text.splitlines()
    body_start = 0
    for body_start, line in enumerate(lines):
        stripped = line.strip()
        if not stripped.startswith("#"):
            break
        for item in stripped.lstrip("#").split(","):
            key, _, value = item.partition("=")
            if key.strip() == "sample_rate":
                try:
                    sample_rate = int(float(value))
                except ValueError as exc:
                    raise FormatError(f"{path}: bad sample_rate {value!r}") from exc
    else:
        body_start = len(lines)
    if sample_rate is None:
        raise FormatError(f"{path}: missing '# sample_rate=...' header")
    if body_start >= len(lines):
        raise FormatError(f"{path}: missing column header")
    columns = [c.strip() for c in lines[body_start].split(",")]
    if "rpm" not in columns or "torque" not in columns:
        raise FormatError(f"{path}: header must name rpm and torque columns")
    body = "\n".join(lines[body_start + 1:])
    if not body.strip():
        return ControlTrace(np.zeros(0), np.zeros(0), sample_rate)
    try:
        data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if data.shape[1] != len(columns):
        raise FormatError(f"{path}: expected {len(columns)} columns")
    return ControlTrace(data[:, columns.index("rpm")], data[:, columns.index("torque")],
                        sample_rate)


def write_trace_csv(path, trace: ControlTrace) -> None:
    idx = np.arange(len(trace))
    table = np.column_stack([idx, trace.rpm, trace.torque])
    header = f"# sample_rate={trace.sample_rate}\nsample_index,rpm,torque"
    try:
        np.savetxt(path, table, fmt=["%d", "%.6f", "%.6f"], delimiter=",", header=header,
                   comments="")
    except OSError as exc:
        raise StorageError(f"{path}: {exc.strerror or exc}") from exc


def load_trace(path) -> ControlTrace:
    """A trace from CSV, or decoded from channels 3-4 of an annotated WAV."""
    path = Path(path)
    if path.suffix.lower() == ".wav":
        return decode_controls(read_wav(path))
    return read_trace_csv(path)
