"""Log-mel spectrograms, frame energy, and F0 tracking with voicing decisions.

The pitch tracker is a normalized-autocorrelation tracker: per-frame
difference function with cumulative-mean normalization, absolute-threshold
voicing decision, and parabolic interpolation of the selected minimum.
A width-3 median filter over voiced runs suppresses isolated octave errors.
Everything here is deterministic: identical inputs give bit-identical output.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer, FrameSpec, frame_signal
from .errors import BufferTooShortError, InvalidSpecError


@dataclass(frozen=True)
class MelSpec:
    """Mel filterbank configuration.

    ``n_fft`` and ``fmax`` may be left as None and are resolved at time of
    use: n_fft becomes the next power of two >= frame length, fmax becomes
    the Nyquist frequency.
    """

    n_fft: int | None = None
    n_mels: int = 80
    fmin: float = 0.0
    fmax: float | None = None
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.n_mels < 1:
            raise ValueError("n_mels must be >= 1")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be > 0")
        if self.fmin < 0:
            raise ValueError("fmin must be >= 0")

    def resolve(self, sample_rate: int, frame_length: int) -> tuple[int, float]:
        n_fft = self.n_fft or _next_pow2(frame_length)
        fmax = self.fmax if self.fmax is not None else sample_rate / 2.0
        if not self.fmin < fmax <= sample_rate / 2.0 + 1e-9:
            raise InvalidSpecError(
                f"need fmin < fmax <= Nyquist, got fmin={self.fmin}, "
                f"fmax={fmax}, sr={sample_rate}")
        if n_fft < frame_length:
            raise InvalidSpecError("n_fft shorter than the analysis frame")
        return n_fft, fmax


@dataclass(frozen=True)
class PitchSpec:
    """F0 search range, voicing threshold and hop for the pitch tracker."""

    f0_floor: float = 60.0
    f0_ceil: float = 400.0
    voicing_threshold: float = 0.15
    hop_ms: float = 10.0

    def __post_init__(self):
        if not 0 < self.f0_floor < self.f0_ceil:
            raise ValueError("need 0 < f0_floor < f0_ceil")
        if not 0 < self.voicing_threshold < 1:
            raise ValueError("voicing_threshold must lie in (0, 1)")
        if self.hop_ms <= 0:
            raise ValueError("hop_ms must be positive")


@dataclass(frozen=True)
class FrameTrack:
    """Per-frame F0 (Hz, 0.0 = unvoiced) and energy for one utterance."""

    f0_hz: np.ndarray
    energy: np.ndarray
    hop_ms: float

    def __post_init__(self):
        f0 = np.asarray(self.f0_hz, dtype=np.float64)
        en = np.asarray(self.energy, dtype=np.float64)
        object.__setattr__(self, "f0_hz", f0)
        object.__setattr__(self, "energy", en)
        if len(f0) != len(en):
            raise ValueError("f0_hz and energy must have equal length")
        if np.any(~np.isfinite(f0)) or np.any(f0 < 0):
            raise ValueError("f0 values must be finite and >= 0")
        if np.any(~np.isfinite(en)) or np.any(en < 0):
            raise ValueError("energy values must be finite and >= 0")

    @property
    def n_frames(self) -> int:
        return len(self.f0_hz)

    @property
    def voiced(self) -> np.ndarray:
        return self.f0_hz > 0

    def to_json_dict(self) -> dict:
        return {
            "hop_ms": self.hop_ms,
            "f0_hz": [float(v) for v in self.f0_hz],
            "energy": [float(v) for v in self.energy],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d: dict) -> "FrameTrack":
        return cls(f0_hz=np.asarray(d["f0_hz"], dtype=np.float64),
                   energy=np.asarray(d["energy"], dtype=np.float64),
                   hop_ms=float(d["hop_ms"]))

    @classmethod
    def from_json(cls, text: str) -> "FrameTrack":
        return cls.from_json_dict(json.loads(text))


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int, n_fft: int, n_mels: int,
                   fmin: float, fmax: float) -> np.ndarray:
    """Triangular mel filterbank, each row normalized to sum to 1.

    Shape (n_mels, n_fft // 2 + 1).
    """
    n_bins = n_fft // 2 + 1
    bin_hz = np.arange(n_bins) * sample_rate / n_fft
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    fb = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, center, hi = edges[m], edges[m + 1], edges[m + 2]
        rising = (bin_hz - lo) / max(center - lo, 1e-12)
        falling = (hi - bin_hz) / max(hi - center, 1e-12)
        fb[m] = np.clip(np.minimum(rising, falling), 0.0, None)
        total = fb[m].sum()
        if total > 0:
            fb[m] /= total
    return fb


def mel_band_centers(sample_rate: int, n_mels: int,
                     fmin: float, fmax: float) -> np.ndarray:
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    return edges[1:-1]


def log_mel_spectrogram(buffer: AudioBuffer, spec: MelSpec | None = None,
                        frames: FrameSpec | None = None) -> np.ndarray:
    """Log mel spectrogram, shape (n_frames, n_mels).

    Entry (i, m) = ln(max(log_floor, mel filter m applied to the power
    spectrum of Hann-windowed frame i)).
    """
    spec = spec or MelSpec()
    frames = frames or FrameSpec()
    length = frames.frame_length(buffer.sample_rate)
    n_fft, fmax = spec.resolve(buffer.sample_rate, length)
    windowed = frame_signal(buffer, frames)
    spectrum = np.fft.rfft(windowed, n=n_fft, axis=1)
    power = np.abs(spectrum) ** 2
    fb = mel_filterbank(buffer.sample_rate, n_fft, spec.n_mels, spec.fmin, fmax)
    mel = power @ fb.T
    return np.log(np.maximum(mel, spec.log_floor))


def frame_energy(buffer: AudioBuffer, frames: FrameSpec | None = None) -> np.ndarray:
    """Root-mean-square of each Hann-windowed frame."""
    frames = frames or FrameSpec()
    windowed = frame_signal(buffer, frames)
    return np.sqrt(np.mean(windowed ** 2, axis=1))


def _difference_function(frames: np.ndarray, tau_max: int) -> np.ndarray:
    """Batch YIN difference function d(tau) for tau in [0, tau_max].

    d(tau) = sum_{j=0}^{N-tau-1} (x[j] - x[j+tau])^2, computed through the
    linear autocorrelation via FFT. Shape (n_frames, tau_max + 1).
    """
    n_frames, length = frames.shape
    fft_size = _next_pow2(2 * length)
    spectra = np.fft.rfft(frames, n=fft_size, axis=1)
    acf = np.fft.irfft(spectra * np.conj(spectra), axis=1)[:, :tau_max + 1]
    sq = frames ** 2
    prefix = np.concatenate(
        [np.zeros((n_frames, 1)), np.cumsum(sq, axis=1)], axis=1)
    total = prefix[:, -1][:, None]
    taus = np.arange(tau_max + 1)
    head = prefix[:, length - taus]          # sum of x[j]^2, j < N - tau
    tail = total - prefix[:, taus]           # sum of x[j]^2, j >= tau
    d = head + tail - 2.0 * acf
    return np.maximum(d, 0.0)


def _cumulative_mean_normalize(d: np.ndarray) -> np.ndarray:
    """CMNDF: c(0) = 1, c(tau) = d(tau) * tau / sum_{j<=tau} d(j)."""
    c = np.ones_like(d)
    cums = np.cumsum(d[:, 1:], axis=1)
    taus = np.arange(1, d.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        c[:, 1:] = np.where(cums > 0, d[:, 1:] * taus / cums, 1.0)
    return c


def _parabolic_interp(values: np.ndarray, idx: int) -> float:
    if idx <= 0 or idx >= len(values) - 1:
        return float(idx)
    a, b, c = values[idx - 1], values[idx], values[idx + 1]
    denom = a - 2.0 * b + c
    if denom == 0.0:
        return float(idx)
    return idx - 0.5 * (a - c) / denom


def _median3_voiced(f0: np.ndarray) -> np.ndarray:
    """Median filter of width 3 inside contiguous voiced runs."""
    out = f0.copy()
    n = len(f0)
    for i in range(1, n - 1):
        if f0[i - 1] > 0 and f0[i] > 0 and f0[i + 1] > 0:
            out[i] = np.median(f0[i - 1:i + 2])
    return out


def _suppress_single_frame_runs(f0: np.ndarray) -> np.ndarray:
    """Voiced runs of a single frame are tracker junk; mark them unvoiced."""
    out = f0.copy()
    n = len(f0)
    for i in range(n):
        if f0[i] > 0:
            prev_voiced = i > 0 and f0[i - 1] > 0
            next_voiced = i < n - 1 and f0[i + 1] > 0
            if not prev_voiced and not next_voiced:
                out[i] = 0.0
    return out


def track_pitch(buffer: AudioBuffer, spec: PitchSpec | None = None) -> FrameTrack:
    """Track F0 with voicing decisions; unvoiced frames are exactly 0.0.

    The energy field is filled from 25 ms RMS frames at the same hop;
    both sequences are truncated to their common frame count.
    """
    spec = spec or PitchSpec()
    sr = buffer.sample_rate
    if spec.f0_ceil > sr / 2:
        raise InvalidSpecError("f0_ceil above Nyquist")
    tau_max = int(np.ceil(sr / spec.f0_floor))
    tau_min = max(2, int(np.floor(sr / spec.f0_ceil)))
    frame_length = 2 * tau_max
    if buffer.n_samples < frame_length:
        raise BufferTooShortError(
            f"need at least {frame_length} samples "
            f"(two periods of f0_floor={spec.f0_floor} Hz)")
    hop = max(1, int(round(spec.hop_ms * sr / 1000.0)))
    n_frames = (buffer.n_samples - frame_length) // hop + 1
    idx = np.arange(n_frames)[:, None] * hop + np.arange(frame_length)[None, :]
    frames = buffer.samples[idx]

    d = _difference_function(frames, tau_max)
    cmndf = _cumulative_mean_normalize(d)

    f0 = np.zeros(n_frames)
    threshold = spec.voicing_threshold
    for i in range(n_frames):
        row = cmndf[i]
        below = np.nonzero(row[tau_min:tau_max + 1] < threshold)[0]
        if len(below) == 0:
            continue
        tau = tau_min + int(below[0])
        while tau + 1 <= tau_max and row[tau + 1] < row[tau]:
            tau += 1
        tau_star = _parabolic_interp(row, tau)
        if tau_star <= 0:
            continue
        hz = sr / tau_star
        f0[i] = min(max(hz, spec.f0_floor), spec.f0_ceil)

    f0 = _suppress_single_frame_runs(_median3_voiced(f0))

    energy_frames = FrameSpec(frame_length_ms=25.0, hop_ms=spec.hop_ms)
    energy = frame_energy(buffer, energy_frames)
    n = min(n_frames, len(energy))
    return FrameTrack(f0_hz=f0[:n], energy=energy[:n], hop_ms=spec.hop_ms)
