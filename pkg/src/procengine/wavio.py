"""16-bit PCM RIFF/WAVE reading and writing.

Samples map to floats by division by 32768, so every integer word
survives a write/read cycle unchanged.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import AudioBuffer
from .errors import FormatError, StorageError

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_EXTENSIBLE = 0xFFFE
# First two bytes of the KSDATAFORMAT_SUBTYPE_PCM GUID.
_PCM_SUBFORMAT = b"\x01\x00"

FULL_SCALE = 32768.0


def to_pcm16(data: np.ndarray) -> np.ndarray:
    """Quantize float samples to int16 words (round to nearest, saturate)."""
    codes = np.round(np.asarray(data, dtype=np.float64) * FULL_SCALE)
    return np.clip(codes, -32768, 32767).astype(np.int16)


def from_pcm16(codes: np.ndarray) -> np.ndarray:
    return np.asarray(codes, dtype=np.float64) / FULL_SCALE


def _parse_chunks(raw: bytes, path):
    if len(raw) < 12 or raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")
    pos = 12
    chunks = {}
    while pos + 8 <= len(raw):
        cid, size = struct.unpack("<4sI", raw[pos:pos + 8])
        body = raw[pos + 8:pos + 8 + size]
        if cid not in chunks:
            chunks[cid] = body
        pos += 8 + size + (size & 1)
    return chunks


def read_wav(path) -> AudioBuffer:
    """Read a 16-bit PCM file with one to four channels."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise StorageError(f"{path}: {exc.strerror or exc}") from exc
    chunks = _parse_chunks(raw, path)
    if b"fmt " not in chunks or b"data" not in chunks:
        raise FormatError(f"{path}: missing fmt or data chunk")
    fmt = chunks[b"fmt "]
    if len(fmt) < 16:
        raise FormatError(f"{path}: truncated fmt chunk")
    tag, channels, rate, _, block_align, bits = struct.unpack("<HHIIHH", fmt[:16])
    if tag == WAVE_FORMAT_EXTENSIBLE:
        if len(fmt) < 40 or fmt[24:26] != _PCM_SUBFORMAT:
            raise FormatError(f"{path}: extensible format is not integer PCM")
    elif tag != WAVE_FORMAT_PCM:
        raise FormatError(f"{path}: unsupported format tag 0x{tag:04x}")
    if bits != 16:
        raise FormatError(f"{path}: unsupported bit depth {bits} (need 16)")
    if not 1 <= channels <= 4:
        raise FormatError(f"{path}: unsupported channel count {channels}")
    if block_align != 2 * channels:
        raise FormatError(f"{path}: inconsistent block alignment")
    data = chunks[b"data"]
    n = len(data) // block_align
    codes = np.frombuffer(data[:n * block_align], dtype="<i2").reshape(n, channels)
    return AudioBuffer(from_pcm16(codes.T), rate)


def write_wav(path, audio: AudioBuffer) -> None:
    codes = to_pcm16(audio.data).T.astype("<i2")
    payload = np.ascontiguousarray(codes).tobytes()
    channels = audio.channels
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, WAVE_FORMAT_PCM, channels, audio.sample_rate,
        audio.sample_rate * 2 * channels, 2 * channels, 16,
        b"data", len(payload),
    )
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
    except OSError as exc:
        raise StorageError(f"{path}: {exc.strerror or exc}") from exc


def pcm_bytes(hours: float, sample_rate: int, channels: int) -> int:
    """Payload size of a 16-bit recording of the given length."""
    return int(round(hours * 3600 * sample_rate)) * channels * 2
