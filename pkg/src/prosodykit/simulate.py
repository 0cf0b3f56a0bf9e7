"""Synthetic recitation signals with known prosody.

Renders utterances from phone specs: voiced phones are harmonic complexes
with a linear F0 glide, "noise" phones are lowpassed white noise, "sil"
phones are silence. Every rendition comes with its exact alignment, which
makes these signals usable as ground truth for tracker, resynthesis and
metric tests and for demo fixtures.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .alignment import Phone, PhoneAlignment
from .audio_io import AudioBuffer

ATTACK_S = 0.008


@dataclass(frozen=True)
class PhoneSpec:
    label: str
    duration_s: float
    f0_start: float = 0.0   # 0 = unvoiced
    f0_end: float = 0.0
    amplitude: float = 0.0

    @property
    def voiced(self) -> bool:
        return self.f0_start > 0


def _envelope(n: int, sr: int) -> np.ndarray:
    env = np.ones(n)
    edge = min(int(ATTACK_S * sr), n // 2)
    if edge > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(edge) / edge)
        env[:edge] = ramp
        env[-edge:] = ramp[::-1]
    return env


def _render_phone(spec: PhoneSpec, sr: int, rng: np.random.Generator
                  ) -> np.ndarray:
    n = max(1, int(round(spec.duration_s * sr)))
    if spec.amplitude <= 0:
        return np.zeros(n)
    if spec.voiced:
        f0 = np.linspace(spec.f0_start, spec.f0_end or spec.f0_start, n)
        phase = 2.0 * np.pi * np.cumsum(f0) / sr
        n_harmonics = max(1, min(8, int(0.4 * sr / max(spec.f0_end,
                                                       spec.f0_start))))
        signal = np.zeros(n)
        for k in range(1, n_harmonics + 1):
            signal += np.sin(k * phase) / k
        signal /= np.abs(signal).max() + 1e-12
        # breath-like broadband floor; keeps mel bands off the log floor
        signal += 0.02 * rng.standard_normal(n)
    else:
        white = rng.standard_normal(n)
        # crude spectral tilt so fricatives look noise-like but bounded
        signal = np.convolve(white, [1.0, -0.6], mode="same")
        signal /= np.abs(signal).max() + 1e-12
    return signal * spec.amplitude * _envelope(n, sr)


def render_utterance(phone_specs, sample_rate: int = 16000,
                     seed: int = 0) -> tuple[AudioBuffer, PhoneAlignment]:
    """Render phone specs into audio plus its exact alignment."""
    rng = np.random.default_rng(seed)
    pieces = []
    phones = []
    t = 0.0
    for spec in phone_specs:
        samples = _render_phone(spec, sample_rate, rng)
        pieces.append(samples)
        end = t + len(samples) / sample_rate
        phones.append(Phone(spec.label, t, end))
        t = end
    buffer = AudioBuffer(samples=np.concatenate(pieces),
                         sample_rate=sample_rate)
    return buffer, PhoneAlignment(phones=tuple(phones))


def example_sentence(f0_base: float = 190.0, rate: float = 1.0,
                     amp: float = 0.42) -> list[PhoneSpec]:
    """A speech-like phone sequence: vowels, fricatives, pauses."""
    b = f0_base

    def v(label, dur, f0a, f0b, a=1.0):
        return PhoneSpec(label, dur * rate, f0a, f0b, amp * a)

    def c(label, dur, a=0.35):
        return PhoneSpec(label, dur * rate, amplitude=amp * a)

    return [
        PhoneSpec("sil", 0.06 * rate),
        v("a", 0.16, b * 1.05, b * 1.15),
        c("s", 0.09),
        v("e", 0.14, b * 1.2, b * 0.95),
        c("t", 0.06, a=0.3),
        v("o", 0.19, b * 0.9, b * 1.0),
        PhoneSpec("sil", 0.08 * rate),
        v("i", 0.13, b * 1.25, b * 1.1),
        c("f", 0.08),
        v("u", 0.21, b * 0.95, b * 0.8),
        PhoneSpec("sil", 0.07 * rate),
    ]


def perturb_sentence(specs, seed: int, duration_spread: float = 0.35,
                     f0_spread: float = 0.25,
                     amp_spread: float = 0.5) -> list[PhoneSpec]:
    """A second rendition of the same text with perturbed prosody.

    Per-phone F0 factors are drawn log-uniformly and renormalized to a
    geometric mean of 1 over the voiced phones, so both renditions keep the
    same register (like two takes by the same reciter).
    """
    rng = np.random.default_rng(seed)
    n = len(specs)
    f0_factors = np.exp(rng.uniform(np.log(1 - f0_spread),
                                    np.log(1 + f0_spread), n))
    voiced = np.array([s.voiced for s in specs])
    if voiced.any():
        f0_factors[voiced] /= np.exp(np.mean(np.log(f0_factors[voiced])))
    out = []
    for i, spec in enumerate(specs):
        dur = spec.duration_s * float(rng.uniform(1 - duration_spread,
                                                  1 + duration_spread))
        amp_factor = float(rng.uniform(1 - amp_spread, 1 + amp_spread))
        out.append(replace(
            spec,
            duration_s=dur,
            f0_start=spec.f0_start * float(f0_factors[i]),
            f0_end=spec.f0_end * float(f0_factors[i]),
            amplitude=min(spec.amplitude * amp_factor, 0.95),
        ))
    return out
