"""Pitch-synchronous overlap-add resynthesis of a base recording.

Realizes a ProsodyTrack audibly: per phone, two-period Hann-windowed grains
centered on pitch marks are re-spaced to the target period (pitch), source
positions advance at the inverse duration ratio (time scale, grains
duplicated or dropped), and a per-phone linear gain with short cross-fades
applies the energy target. Unvoiced stretches are time-scaled by duplicating
5 ms grains without changing their spacing. The within-phone F0 contour of
the base is preserved as a multiplicative deviation around its mean, scaled
so the phone mean hits the target.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, filtfilt

from .alignment import Phone, PhoneAlignment
from .analysis import FrameTrack, PitchSpec, track_pitch
from .audio_io import AudioBuffer, hann_window
from .errors import (
    EmptyInputError,
    NormalizedTrackError,
    PhoneSequenceMismatchError,
    PlanMismatchError,
)
from .prosody import ProsodyTrack, average_per_phone

UNVOICED_GRAIN_S = 0.005  # grain spacing in unvoiced regions
FADE_S = 0.005            # energy cross-fade width at phone boundaries


@dataclass(frozen=True)
class PitchMarks:
    """Ordered glottal-epoch sample positions with per-mark voicing flags."""

    positions: np.ndarray
    voiced_flags: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.int64)
        flags = np.asarray(self.voiced_flags, dtype=bool)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "voiced_flags", flags)
        if len(pos) != len(flags):
            raise ValueError("positions and voiced_flags must match in length")
        if len(pos) and np.any(np.diff(pos) <= 0):
            raise ValueError("mark positions must be strictly increasing")


@dataclass(frozen=True)
class PhonePlan:
    label: str
    src_start: int               # sample range in the base recording
    src_end: int
    duration_target_s: float
    f0_target_hz: float          # 0 keeps the phone unvoiced
    src_f0_mean_hz: float        # 0 when the base phone is fully unvoiced
    energy_gain: float


@dataclass(frozen=True)
class SynthesisPlan:
    """Per-phone synthesis targets tied to one base recording."""

    phones: tuple[PhonePlan, ...]
    sample_rate: int

    def __post_init__(self):
        object.__setattr__(self, "phones", tuple(self.phones))

    def to_json_dict(self) -> dict:
        return {"phones": [
            {
                "duration_ratio": p.duration_target_s * self.sample_rate
                                  / max(p.src_end - p.src_start, 1),
                "f0_target_hz": p.f0_target_hz,
                "energy_gain": p.energy_gain,
            }
            for p in self.phones
        ]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def _lowpass(samples: np.ndarray, sr: int, cutoff_hz: float) -> np.ndarray:
    cutoff = min(max(cutoff_hz, 50.0), 0.45 * sr)
    b, a = butter(4, cutoff / (sr / 2.0), btype="low")
    return filtfilt(b, a, samples)


def find_pitch_marks(buffer: AudioBuffer, track: FrameTrack) -> PitchMarks:
    """Place pitch marks on the base recording.

    In voiced regions, marks sit at successive local peaks of the low-pass
    filtered signal spaced by the local period from the F0 track; unvoiced
    regions get uniform marks every 5 ms with the voiced flag false.
    """
    n = buffer.n_samples
    if n == 0 or track.n_frames == 0:
        raise EmptyInputError("buffer and track must be non-empty")
    sr = buffer.sample_rate
    hop = max(1, int(round(track.hop_ms * sr / 1000.0)))
    f0 = track.f0_hz
    voiced_any = np.any(f0 > 0)
    if voiced_any:
        cutoff = 1.3 * float(f0[f0 > 0].max())
        filtered = _lowpass(buffer.samples, sr, cutoff)
    else:
        filtered = buffer.samples
    unvoiced_hop = max(1, int(round(UNVOICED_GRAIN_S * sr)))

    def f0_at(pos: int) -> float:
        return float(f0[min(pos // hop, len(f0) - 1)])

    positions: list[int] = []
    flags: list[bool] = []
    pos = 0
    while pos < n:
        hz = f0_at(pos)
        if hz <= 0:
            if not positions or pos > positions[-1]:
                positions.append(pos)
                flags.append(False)
            pos += unvoiced_hop
            continue
        period = sr / hz
        prev_voiced = bool(flags and flags[-1])
        if prev_voiced and pos - positions[-1] <= 1.6 * period:
            lo = positions[-1] + max(1, int(round(0.75 * period)))
            hi = min(n, positions[-1] + int(round(1.25 * period)) + 1)
        else:
            lo = pos
            hi = min(n, pos + int(round(period)) + 1)
        if lo >= n:
            break
        if hi <= lo:
            hi = min(n, lo + 1)
        m = lo + int(np.argmax(filtered[lo:hi]))
        if positions and m <= positions[-1]:
            m = positions[-1] + 1
        if m >= n:
            break
        positions.append(m)
        flags.append(True)
        pos = m + max(1, int(round(0.75 * period)))
    if not positions:
        positions = [0]
        flags = [False]
    return PitchMarks(positions=np.array(positions, dtype=np.int64),
                      voiced_flags=np.array(flags, dtype=bool))


def plan_synthesis(base_audio: AudioBuffer, base_align: PhoneAlignment,
                   target: ProsodyTrack, pitch_spec: PitchSpec | None = None,
                   base_track: FrameTrack | None = None) -> SynthesisPlan:
    """Turn a target ProsodyTrack into per-phone synthesis parameters.

    The base recording's own prosody (extracted here unless passed in) sets
    the denominators: duration ratios, energy gains, and the per-phone source
    F0 means that anchor pitch scaling.
    """
    if target.normalized:
        raise NormalizedTrackError("synthesis targets must be denormalized")
    if base_align.labels != target.labels:
        _raise_label_mismatch(base_align.labels, target.labels)
    if base_track is None:
        base_track = track_pitch(base_audio, pitch_spec or PitchSpec())
    base_prosody = average_per_phone(base_track, base_align)
    sr = base_audio.sample_rate
    phones = []
    for k, p in enumerate(base_align.phones):
        base_p = base_prosody[k]
        tgt = target[k]
        src_start = min(int(round(p.start_s * sr)), base_audio.n_samples - 1)
        src_end = min(int(round(p.end_s * sr)), base_audio.n_samples)
        src_end = max(src_end, src_start + 1)
        gain = tgt.energy / base_p.energy if base_p.energy > 0 else 1.0
        phones.append(PhonePlan(
            label=p.label,
            src_start=src_start,
            src_end=src_end,
            duration_target_s=tgt.duration_s,
            f0_target_hz=tgt.f0,
            src_f0_mean_hz=base_p.f0,
            energy_gain=gain,
        ))
    return SynthesisPlan(phones=tuple(phones), sample_rate=sr)


def _raise_label_mismatch(expected, got):
    for k in range(min(len(expected), len(got))):
        if expected[k] != got[k]:
            raise PhoneSequenceMismatchError(k, expected=expected[k],
                                             got=got[k])
    raise PhoneSequenceMismatchError(min(len(expected), len(got)))


def _local_periods(marks: np.ndarray, sr: int) -> np.ndarray:
    """Per-mark period estimate from nearest-neighbor spacing, clamped."""
    if len(marks) == 1:
        return np.array([UNVOICED_GRAIN_S * sr])
    fwd = np.diff(marks).astype(np.float64)
    per = np.empty(len(marks))
    per[:-1] = fwd
    per[-1] = fwd[-1]
    if len(marks) > 2:
        per[1:-1] = np.minimum(fwd[:-1], fwd[1:])
    return np.clip(per, sr / 500.0, sr / 55.0)


def _energy_envelope(gains, starts, total, sr) -> np.ndarray:
    env = np.ones(total)
    for k, g in enumerate(gains):
        stop = starts[k + 1] if k + 1 < len(starts) else total
        env[starts[k]:stop] = g
    half = max(1, int(round(FADE_S * sr / 2)))
    for k in range(1, len(gains)):
        b = starts[k]
        a, z = max(0, b - half), min(total, b + half)
        if z > a:
            env[a:z] = np.linspace(env[max(a - 1, 0)], gains[k], z - a)
    return env


def resynthesize(base_audio: AudioBuffer, marks: PitchMarks,
                 plan: SynthesisPlan) -> AudioBuffer:
    """Overlap-add synthesis of the plan against the base recording."""
    if plan.sample_rate != base_audio.sample_rate:
        raise PlanMismatchError(
            f"plan built for {plan.sample_rate} Hz, audio is "
            f"{base_audio.sample_rate} Hz")
    if len(plan.phones) == 0:
        raise PlanMismatchError("plan has no phones")
    n = base_audio.n_samples
    if len(marks.positions) == 0 or marks.positions[-1] >= n:
        raise PlanMismatchError("pitch marks outside the base audio")
    sr = base_audio.sample_rate
    x = base_audio.samples

    out_lengths = [max(1, int(round(p.duration_target_s * sr)))
                   for p in plan.phones]
    starts = np.concatenate([[0], np.cumsum(out_lengths)])[:-1].astype(int)
    total = int(sum(out_lengths))
    pad = int(sr / 40)  # grain tails may reach one low-pitch period out
    num = np.zeros(total + 2 * pad)
    den = np.zeros(total + 2 * pad)

    positions = marks.positions
    voiced = marks.voiced_flags
    unvoiced_half = max(2, int(round(UNVOICED_GRAIN_S * sr)))
    # local source period at every voiced mark, for grain sizing and spacing
    voiced_periods = np.full(len(positions), float(unvoiced_half))
    voiced_idx = np.nonzero(voiced)[0]
    if len(voiced_idx):
        voiced_periods[voiced_idx] = _local_periods(positions[voiced_idx], sr)

    for k, phone in enumerate(plan.phones):
        s0, s1 = phone.src_start, phone.src_end
        if not (0 <= s0 < s1 <= n):
            raise PlanMismatchError(
                f"phone {k} source range [{s0}, {s1}) outside the audio")
        d_t = out_lengths[k]
        rho = d_t / (s1 - s0)
        in_phone = np.nonzero((positions >= s0) & (positions < s1))[0]
        if len(in_phone) == 0:
            # no marks landed here; treat the midpoint as one unvoiced mark
            phone_marks = np.array([(s0 + s1) // 2])
            phone_voiced = np.array([False])
            phone_periods = np.array([float(unvoiced_half)])
        else:
            phone_marks = positions[in_phone]
            phone_voiced = voiced[in_phone]
            phone_periods = voiced_periods[in_phone]
        pitched = phone.f0_target_hz > 0 and phone.src_f0_mean_hz > 0
        beta = (phone.f0_target_hz / phone.src_f0_mean_hz) if pitched else 1.0
        out_base = starts[k] + pad
        u = 0.0
        while u < d_t:
            src_pos = s0 + u / rho
            # the voiced/unvoiced branch follows the nearest mark, so mixed
            # phones keep their unvoiced stretches unvoiced
            g = int(np.argmin(np.abs(phone_marks - src_pos)))
            m = int(phone_marks[g])
            if phone_voiced[g] and pitched:
                half = int(round(phone_periods[g]))
                step = max(phone_periods[g] / beta, 2.0)
            else:
                half = unvoiced_half
                step = float(unvoiced_half)
            half = max(half, 2)
            window = hann_window(2 * half + 1)
            lo_src = m - half
            grain = np.zeros(2 * half + 1)
            a = max(0, lo_src)
            b = min(n, m + half + 1)
            grain[a - lo_src:b - lo_src] = x[a:b]
            grain *= window
            center = out_base + int(round(u))
            lo = center - half
            hi = center + half + 1
            ga = max(0, lo)
            gb = min(len(num), hi)
            num[ga:gb] += grain[ga - lo:gb - lo]
            den[ga:gb] += window[ga - lo:gb - lo]
            u += step

    y = np.where(den > 1e-3, num / np.maximum(den, 1e-3), 0.0)
    y = y[pad:pad + total]
    # overlap-add changes segment energy when grains interfere (pitch-down
    # cancellation, incoherent noise duplication); fold the measured
    # per-phone deviation from the source level into the gain
    gains = []
    for k, phone in enumerate(plan.phones):
        seg = y[starts[k]:starts[k] + out_lengths[k]]
        ola_rms = np.sqrt(np.mean(seg ** 2)) if len(seg) else 0.0
        src = x[phone.src_start:phone.src_end]
        src_rms = np.sqrt(np.mean(src ** 2))
        gain = phone.energy_gain
        if ola_rms > 1e-8 and src_rms > 1e-8:
            gain *= src_rms / ola_rms
        gains.append(gain)
    env = _energy_envelope(gains, starts, total, sr)
    y *= env
    clipped = int(np.count_nonzero(np.abs(y) > 1.0))
    y = np.clip(y, -1.0, 1.0)
    return AudioBuffer(samples=y, sample_rate=sr, clipped_count=clipped)


def output_alignment(plan: SynthesisPlan) -> PhoneAlignment:
    """Phone boundaries of the synthesized output (cumulative target durations)."""
    sr = plan.sample_rate
    lengths = [max(1, int(round(p.duration_target_s * sr)))
               for p in plan.phones]
    edges = np.concatenate([[0], np.cumsum(lengths)])
    phones = [Phone(p.label, edges[k] / sr, edges[k + 1] / sr)
              for k, p in enumerate(plan.phones)]
    return PhoneAlignment(phones=tuple(phones))


def resynthesize_track(base_audio: AudioBuffer, base_align: PhoneAlignment,
                       target: ProsodyTrack,
                       pitch_spec: PitchSpec | None = None
                       ) -> tuple[AudioBuffer, PhoneAlignment]:
    """extract -> mark -> plan -> overlap-add in one call.

    Returns the synthesized audio and its phone alignment (boundaries at the
    cumulative target durations).
    """
    spec = pitch_spec or PitchSpec()
    base_track = track_pitch(base_audio, spec)
    marks = find_pitch_marks(base_audio, base_track)
    plan = plan_synthesis(base_audio, base_align, target,
                          pitch_spec=spec, base_track=base_track)
    audio = resynthesize(base_audio, marks, plan)
    return audio, output_alignment(plan)
