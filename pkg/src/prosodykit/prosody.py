"""Phone-level prosody: averaging, normalization, cloning, edits, splicing.

A ProsodyTrack holds one (duration, F0, energy, voiced_fraction) tuple per
phone. F0 and energy can be raw (Hz / RMS units) or normalized ratios;
normalization divides by the mean over phones with nonzero values so that
tracks become transferable between renditions at different registers.
All transformations are pure; tracks are immutable values.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .alignment import PhoneAlignment, coverage_limit_s, frames_for_phone
from .analysis import FrameTrack
from .errors import (
    AllUnvoicedError,
    AlreadyNormalizedError,
    CoverageError,
    IndexOutOfRangeError,
    InvalidValueError,
    NonpositiveMeanError,
    NormalizedTrackError,
    NotNormalizedError,
    PhoneSequenceMismatchError,
)


@dataclass(frozen=True)
class PhoneProsody:
    label: str
    duration_s: float
    f0: float
    energy: float
    voiced_fraction: float

    def __post_init__(self):
        if self.duration_s <= 0:
            raise InvalidValueError(
                f"phone {self.label!r}: duration {self.duration_s} <= 0")
        if self.f0 < 0 or self.energy < 0:
            raise InvalidValueError(
                f"phone {self.label!r}: negative f0 or energy")
        if not 0.0 <= self.voiced_fraction <= 1.0:
            raise InvalidValueError(
                f"phone {self.label!r}: voiced_fraction outside [0, 1]")
        if (self.f0 == 0.0) != (self.voiced_fraction == 0.0):
            raise InvalidValueError(
                f"phone {self.label!r}: f0 == 0 must coincide with "
                f"voiced_fraction == 0")


@dataclass(frozen=True)
class ProsodyTrack:
    """Per-phone prosody values, raw or normalized.

    When ``normalized`` is true, f0/energy hold dimensionless ratios and the
    reference means used for normalization are stored alongside.
    """

    phones: tuple[PhoneProsody, ...]
    normalized: bool = False
    f0_ref_mean: float | None = None
    energy_ref_mean: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "phones", tuple(self.phones))
        if self.normalized and (self.f0_ref_mean is None
                                or self.energy_ref_mean is None):
            raise InvalidValueError("normalized track must carry its means")
        if not self.normalized and (self.f0_ref_mean is not None
                                    or self.energy_ref_mean is not None):
            raise InvalidValueError("raw track must not carry reference means")

    def __len__(self) -> int:
        return len(self.phones)

    def __getitem__(self, k) -> PhoneProsody:
        return self.phones[k]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(p.label for p in self.phones)

    def f0_values(self) -> np.ndarray:
        return np.array([p.f0 for p in self.phones])

    def energy_values(self) -> np.ndarray:
        return np.array([p.energy for p in self.phones])

    def durations(self) -> np.ndarray:
        return np.array([p.duration_s for p in self.phones])

    def voiced_f0_mean(self) -> float:
        voiced = [p.f0 for p in self.phones if p.f0 > 0]
        if not voiced:
            raise AllUnvoicedError("no phone with f0 > 0")
        return float(np.mean(voiced))

    def nonzero_energy_mean(self) -> float:
        vals = [p.energy for p in self.phones if p.energy > 0]
        if not vals:
            raise AllUnvoicedError("no phone with energy > 0")
        return float(np.mean(vals))

    def to_json_dict(self) -> dict:
        return {
            "normalized": self.normalized,
            "f0_ref_mean": self.f0_ref_mean,
            "energy_ref_mean": self.energy_ref_mean,
            "phones": [
                {
                    "label": p.label,
                    "duration_s": p.duration_s,
                    "f0": p.f0,
                    "energy": p.energy,
                    "voiced_fraction": p.voiced_fraction,
                }
                for p in self.phones
            ],
        }

    def to_json(self, indent=None) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)

    @classmethod
    def from_json_dict(cls, d: dict) -> "ProsodyTrack":
        phones = [
            PhoneProsody(
                label=p["label"],
                duration_s=float(p["duration_s"]),
                f0=float(p["f0"]),
                energy=float(p["energy"]),
                voiced_fraction=float(p["voiced_fraction"]),
            )
            for p in d["phones"]
        ]
        f0_mean = d.get("f0_ref_mean")
        en_mean = d.get("energy_ref_mean")
        return cls(
            phones=tuple(phones),
            normalized=bool(d.get("normalized", False)),
            f0_ref_mean=None if f0_mean is None else float(f0_mean),
            energy_ref_mean=None if en_mean is None else float(en_mean),
        )

    @classmethod
    def from_json(cls, text: str) -> "ProsodyTrack":
        return cls.from_json_dict(json.loads(text))


EDIT_OPS = ("set_f0", "set_energy", "set_duration",
            "scale_f0", "scale_energy", "scale_duration")


@dataclass(frozen=True)
class EditOp:
    op: str
    phone: int
    value: float

    def __post_init__(self):
        if self.op not in EDIT_OPS:
            raise InvalidValueError(f"unknown edit op {self.op!r}")
        if self.phone < 0:
            raise InvalidValueError(f"negative phone index {self.phone}")
        if self.op.startswith("scale_") and self.value <= 0:
            raise InvalidValueError(f"{self.op}: factor must be > 0")
        if self.op == "set_duration" and self.value <= 0:
            raise InvalidValueError("set_duration: value must be > 0")
        if self.op.startswith("set_") and self.value < 0:
            raise InvalidValueError(f"{self.op}: value must be >= 0")


@dataclass(frozen=True)
class EditScript:
    ops: tuple[EditOp, ...]

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))

    def to_json_dict(self) -> dict:
        return {"ops": [{"op": o.op, "phone": o.phone, "value": o.value}
                        for o in self.ops]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d: dict) -> "EditScript":
        return cls(ops=tuple(
            EditOp(op=str(o["op"]), phone=int(o["phone"]),
                   value=float(o["value"]))
            for o in d["ops"]))

    @classmethod
    def from_json(cls, text: str) -> "EditScript":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class SpliceRegion:
    """Inclusive phone index range [start_phone, end_phone]."""

    start_phone: int
    end_phone: int

    def __post_init__(self):
        if not 0 <= self.start_phone <= self.end_phone:
            raise IndexOutOfRangeError(
                f"need 0 <= start <= end, got [{self.start_phone}, "
                f"{self.end_phone}]")

    def __contains__(self, k: int) -> bool:
        return self.start_phone <= k <= self.end_phone

    def size(self) -> int:
        return self.end_phone - self.start_phone + 1


def average_per_phone(track: FrameTrack, align: PhoneAlignment) -> ProsodyTrack:
    """Average the frame track into one value per aligned phone.

    Per phone: duration = end - start; f0 = mean of the nonzero (voiced)
    F0 frames in its range, 0 if none; energy = mean over all frames in
    range; voiced_fraction = voiced frames / frames in range.
    """
    hop_s = track.hop_ms / 1000.0
    if align.end_time_s > coverage_limit_s(track.n_frames, track.hop_ms):
        raise CoverageError(
            f"alignment ends at {align.end_time_s:.3f} s but track covers "
            f"only {track.n_frames * hop_s:.3f} s")
    phones = []
    for k, p in enumerate(align.phones):
        start, end = frames_for_phone(align, k, track.hop_ms, track.n_frames)
        f0_slice = track.f0_hz[start:end]
        voiced = f0_slice[f0_slice > 0]
        f0 = float(voiced.mean()) if len(voiced) else 0.0
        energy = float(track.energy[start:end].mean())
        voiced_fraction = len(voiced) / (end - start)
        phones.append(PhoneProsody(
            label=p.label, duration_s=p.duration_s, f0=f0, energy=energy,
            voiced_fraction=voiced_fraction))
    return ProsodyTrack(phones=tuple(phones))


def normalize(track: ProsodyTrack) -> ProsodyTrack:
    """Divide f0 and energy by their means over nonzero phones.

    Zeros stay zero; durations are untouched. After this, the mean of the
    nonzero f0 ratios (and energy ratios) is 1.
    """
    if track.normalized:
        raise AlreadyNormalizedError("track is already normalized")
    f0_mean = track.voiced_f0_mean()
    energy_mean = track.nonzero_energy_mean()
    phones = [
        replace(p, f0=p.f0 / f0_mean, energy=p.energy / energy_mean)
        for p in track.phones
    ]
    return ProsodyTrack(phones=tuple(phones), normalized=True,
                        f0_ref_mean=f0_mean, energy_ref_mean=energy_mean)


def denormalize(track: ProsodyTrack, f0_mean: float,
                energy_mean: float) -> ProsodyTrack:
    """Multiply normalized ratios back into absolute units."""
    if not track.normalized:
        raise NotNormalizedError("track is not normalized")
    if f0_mean <= 0 or energy_mean <= 0:
        raise NonpositiveMeanError("means must be > 0")
    phones = [
        replace(p, f0=p.f0 * f0_mean, energy=p.energy * energy_mean)
        for p in track.phones
    ]
    return ProsodyTrack(phones=tuple(phones), normalized=False,
                        f0_ref_mean=None, energy_ref_mean=None)


def _check_same_labels(a: ProsodyTrack, b: ProsodyTrack) -> None:
    la, lb = a.labels, b.labels
    for k in range(min(len(la), len(lb))):
        if la[k] != lb[k]:
            raise PhoneSequenceMismatchError(k, expected=la[k], got=lb[k])
    if len(la) != len(lb):
        raise PhoneSequenceMismatchError(min(len(la), len(lb)))


def clone_prosody(reference: ProsodyTrack,
                  target_base: ProsodyTrack) -> ProsodyTrack:
    """Overwrite the target's prosody with the reference's.

    Durations come over verbatim; f0 and energy come over as normalized
    ratios re-expressed at the target's own nonzero means, so the clone
    keeps the target's register. Requires identical phone label sequences.
    """
    _check_same_labels(reference, target_base)
    if target_base.normalized:
        raise NormalizedTrackError("target_base must be denormalized")
    ratios = reference if reference.normalized else normalize(reference)
    f0_mean = target_base.voiced_f0_mean()
    energy_mean = target_base.nonzero_energy_mean()
    return denormalize(ratios, f0_mean, energy_mean)


def apply_edits(track: ProsodyTrack, script: EditScript) -> ProsodyTrack:
    """Apply set/scale ops in script order; later ops compose.

    Operates on denormalized tracks only: edit values are physical units
    (Hz, seconds, RMS). Setting f0 to 0 marks the phone fully unvoiced;
    setting a positive f0 on an unvoiced phone marks it fully voiced.
    """
    if track.normalized and script.ops:
        raise InvalidValueError(
            "edits apply to denormalized tracks; denormalize first")
    phones = list(track.phones)
    for op in script.ops:
        if not 0 <= op.phone < len(phones):
            raise IndexOutOfRangeError(
                f"{op.op}: phone {op.phone} outside [0, {len(phones)})")
        p = phones[op.phone]
        if op.op == "set_f0":
            vf = 0.0 if op.value == 0 else (p.voiced_fraction or 1.0)
            p = replace(p, f0=op.value, voiced_fraction=vf)
        elif op.op == "scale_f0":
            p = replace(p, f0=p.f0 * op.value)
        elif op.op == "set_energy":
            p = replace(p, energy=op.value)
        elif op.op == "scale_energy":
            p = replace(p, energy=p.energy * op.value)
        elif op.op == "set_duration":
            p = replace(p, duration_s=op.value)
        elif op.op == "scale_duration":
            p = replace(p, duration_s=p.duration_s * op.value)
        phones[op.phone] = p
    return ProsodyTrack(phones=tuple(phones), normalized=track.normalized,
                        f0_ref_mean=track.f0_ref_mean,
                        energy_ref_mean=track.energy_ref_mean)


def _transplant(value: float, donor_mean: float, context_mean: float) -> float:
    if value == 0.0 or donor_mean == context_mean:
        return value
    return value / donor_mean * context_mean


def splice(context: ProsodyTrack, donor: ProsodyTrack,
           region: SpliceRegion) -> ProsodyTrack:
    """Replace the phones inside the region with the donor's prosody.

    Durations come over verbatim; f0/energy come over as ratios re-expressed
    at the context's means when both tracks are raw, and verbatim when both
    are normalized. Phones outside the region are bit-identical to context.
    """
    _check_same_labels(context, donor)
    if context.normalized != donor.normalized:
        raise InvalidValueError(
            "context and donor must share normalization state")
    if region.end_phone >= len(context):
        raise IndexOutOfRangeError(
            f"region [{region.start_phone}, {region.end_phone}] outside "
            f"[0, {len(context)})")
    if context.normalized:
        f0_scale = energy_scale = (1.0, 1.0)
    else:
        donor_f0 = _safe_mean([p.f0 for p in donor.phones if p.f0 > 0])
        ctx_f0 = _safe_mean([p.f0 for p in context.phones if p.f0 > 0])
        donor_en = _safe_mean([p.energy for p in donor.phones if p.energy > 0])
        ctx_en = _safe_mean([p.energy for p in context.phones if p.energy > 0])
        f0_scale = (donor_f0, ctx_f0)
        energy_scale = (donor_en, ctx_en)
    phones = list(context.phones)
    for k in range(region.start_phone, region.end_phone + 1):
        d = donor.phones[k]
        phones[k] = replace(
            d,
            f0=_transplant(d.f0, *f0_scale),
            energy=_transplant(d.energy, *energy_scale),
        )
    return ProsodyTrack(phones=tuple(phones), normalized=context.normalized,
                        f0_ref_mean=context.f0_ref_mean,
                        energy_ref_mean=context.energy_ref_mean)


def _safe_mean(values) -> float:
    # mean over nonzero entries; 1.0 keeps the ratio transplant a no-op
    # when one side has no voiced (or no non-silent) phones at all
    return float(np.mean(values)) if values else 1.0
