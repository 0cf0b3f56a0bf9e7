"""WAV reading/writing and deterministic signal framing.

All analysis modules share the framing convention defined here: frame i
covers samples [i*hop, i*hop + frame_length) and carries a Hann window.
Durations are parameterized in milliseconds so the code is sample-rate
agnostic; no resampling ever happens on load.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BufferTooShortError,
    CorruptHeaderError,
    UnsupportedEncodingError,
)

# PCM16 values are mapped to float via x = k / 32768, and quantized back via
# k = round(x * 32768) clamped to [-32768, 32767]. The symmetric scale keeps
# the load/save round trip within 1/32768 per sample (and exact for samples
# that came from a PCM16 source).
_PCM_SCALE = 32768.0


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio: float64 samples in [-1, 1] plus the sample rate in Hz.

    ``clipped_count`` reports how many samples were clamped into range on
    load or on resynthesis output; clipping is flagged, never rejected.
    """

    samples: np.ndarray
    sample_rate: int
    clipped_count: int = 0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1:
            raise ValueError("AudioBuffer holds mono audio (1-D samples)")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FrameSpec:
    """Analysis framing: window length and hop in milliseconds, Hann window."""

    frame_length_ms: float = 25.0
    hop_ms: float = 10.0
    window: str = "hann"

    def __post_init__(self):
        if not 0 < self.hop_ms <= self.frame_length_ms:
            raise ValueError("need 0 < hop_ms <= frame_length_ms")
        if self.window != "hann":
            raise ValueError(f"unsupported window {self.window!r}")

    def frame_length(self, sample_rate: int) -> int:
        return max(1, int(round(self.frame_length_ms * sample_rate / 1000.0)))

    def hop(self, sample_rate: int) -> int:
        return max(1, int(round(self.hop_ms * sample_rate / 1000.0)))

    def n_frames(self, n_samples: int, sample_rate: int) -> int:
        length = self.frame_length(sample_rate)
        if n_samples < length:
            return 0
        return (n_samples - length) // self.hop(sample_rate) + 1


def _sanitize(samples: np.ndarray) -> tuple[np.ndarray, int]:
    """Clamp samples into [-1, 1], zeroing non-finite values; count repairs."""
    bad = ~np.isfinite(samples)
    out_of_range = np.abs(samples) > 1.0
    clipped = int(np.count_nonzero(bad | out_of_range))
    if clipped:
        samples = np.where(bad, 0.0, samples)
        samples = np.clip(samples, -1.0, 1.0)
    return samples, clipped


def load_wav(path) -> AudioBuffer:
    """Read a RIFF/WAVE file into a mono AudioBuffer.

    Supports PCM 16-bit and IEEE float 32-bit with any channel count;
    multi-channel input is averaged to mono. Sample rate is preserved.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeaderError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise CorruptHeaderError(f"{path}: fmt chunk truncated")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise CorruptHeaderError(f"{path}: data chunk truncated")
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned
    if fmt is None or payload is None:
        raise CorruptHeaderError(f"{path}: missing fmt or data chunk")

    audio_format, n_channels, sample_rate, _, _, bits = fmt
    if n_channels < 1 or sample_rate <= 0:
        raise CorruptHeaderError(f"{path}: nonsensical fmt fields")
    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(payload, dtype="<i2")
        samples = raw.astype(np.float64) / _PCM_SCALE
    elif audio_format == 3 and bits == 32:
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedEncodingError(
            f"{path}: format {audio_format} / {bits}-bit not supported "
            "(need PCM16 or float32)")

    if len(samples) % n_channels != 0:
        samples = samples[:len(samples) - len(samples) % n_channels]
    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)
    samples, clipped = _sanitize(samples)
    return AudioBuffer(samples=samples, sample_rate=int(sample_rate),
                       clipped_count=clipped)


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    """Float [-1, 1] to int16, round-to-nearest with clamping."""
    ints = np.round(np.asarray(samples, dtype=np.float64) * _PCM_SCALE)
    return np.clip(ints, -32768, 32767).astype("<i2")


def save_wav(buffer: AudioBuffer, path) -> None:
    """Write a mono 16-bit PCM WAV file."""
    if buffer.n_samples == 0:
        raise BufferTooShortError("refusing to write an empty buffer")
    pcm = quantize_pcm16(buffer.samples).tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(pcm), b"WAVE",
        b"fmt ", 16, 1, 1, buffer.sample_rate,
        buffer.sample_rate * 2, 2, 16,
        b"data", len(pcm),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pcm)


def hann_window(length: int) -> np.ndarray:
    return np.hanning(length)


def frame_signal(buffer: AudioBuffer, spec: FrameSpec) -> np.ndarray:
    """Slice the buffer into Hann-windowed frames, shape (n_frames, length).

    Frame i covers samples [i*hop, i*hop + frame_length).
    """
    length = spec.frame_length(buffer.sample_rate)
    hop = spec.hop(buffer.sample_rate)
    n = spec.n_frames(buffer.n_samples, buffer.sample_rate)
    if n < 1:
        raise BufferTooShortError(
            f"buffer of {buffer.n_samples} samples shorter than one "
            f"{length}-sample frame")
    idx = np.arange(n)[:, None] * hop + np.arange(length)[None, :]
    frames = buffer.samples[idx]
    return frames * hann_window(length)[None, :]
