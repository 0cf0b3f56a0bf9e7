"""Objective prosody similarity metrics.

Two signals are compared by (a) mel spectral distortion: the euclidean
distance between log-mel frames averaged along the minimal-cost DTW path,
so the signals need not share a length, and (b) F0 frame error: the
fraction of index-aligned frame pairs with a voicing mismatch or an F0
deviation of more than 20% relative to the reference frame. Both inputs
must share a sample rate; nothing is resampled silently.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .alignment import dtw, euclidean_cost_matrix
from .analysis import (
    FrameTrack,
    MelSpec,
    PitchSpec,
    log_mel_spectrogram,
    track_pitch,
)
from .audio_io import AudioBuffer, FrameSpec
from .errors import EmptyInputError, SampleRateMismatchError

F0_DEVIATION_LIMIT = 0.20  # relative to the reference frame's F0


@dataclass(frozen=True)
class MetricReport:
    msd: float | None
    ffe: float
    n_frames_ref: int
    n_frames_test: int
    n_voicing_errors: int
    n_f0_deviation_errors: int

    def to_json_dict(self) -> dict:
        return {
            "msd": self.msd,
            "ffe": self.ffe,
            "n_frames_ref": self.n_frames_ref,
            "n_frames_test": self.n_frames_test,
            "n_voicing_errors": self.n_voicing_errors,
            "n_f0_deviation_errors": self.n_f0_deviation_errors,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def _require_same_rate(ref: AudioBuffer, test: AudioBuffer) -> None:
    if ref.sample_rate != test.sample_rate:
        raise SampleRateMismatchError(
            f"{ref.sample_rate} Hz vs {test.sample_rate} Hz")


def msd(ref: AudioBuffer, test: AudioBuffer, mel: MelSpec | None = None,
        frames: FrameSpec | None = None) -> float:
    """Mel spectral distortion: DTW path cost divided by path length."""
    _require_same_rate(ref, test)
    mel = mel or MelSpec()
    frames = frames or FrameSpec()
    a = log_mel_spectrogram(ref, mel, frames)
    b = log_mel_spectrogram(test, mel, frames)
    path = dtw(euclidean_cost_matrix(a, b))
    return path.cost / len(path.pairs)


def pitch_frame_errors(f0_ref: np.ndarray, f0_test: np.ndarray
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Classify index-aligned frame pairs.

    Returns (voicing_error, deviation_error) boolean arrays over the common
    length: a voicing error when exactly one side is voiced, a deviation
    error when both are voiced and |test - ref| > 20% of ref.
    """
    n = min(len(f0_ref), len(f0_test))
    r = np.asarray(f0_ref, dtype=np.float64)[:n]
    t = np.asarray(f0_test, dtype=np.float64)[:n]
    ref_voiced = r > 0
    test_voiced = t > 0
    voicing_error = ref_voiced != test_voiced
    both = ref_voiced & test_voiced
    deviation_error = both & (np.abs(t - r) > F0_DEVIATION_LIMIT * r)
    return voicing_error, deviation_error


def ffe(ref: AudioBuffer, test: AudioBuffer,
        pitch: PitchSpec | None = None) -> MetricReport:
    """F0 frame error over index-aligned frames of both signals."""
    _require_same_rate(ref, test)
    pitch = pitch or PitchSpec()
    ref_track = track_pitch(ref, pitch)
    test_track = track_pitch(test, pitch)
    return ffe_from_tracks(ref_track, test_track)


def ffe_from_tracks(ref_track: FrameTrack,
                    test_track: FrameTrack) -> MetricReport:
    voicing_err, deviation_err = pitch_frame_errors(ref_track.f0_hz,
                                                    test_track.f0_hz)
    n = len(voicing_err)
    n_errors = int(np.count_nonzero(voicing_err | deviation_err))
    return MetricReport(
        msd=None,
        ffe=n_errors / n if n else 0.0,
        n_frames_ref=ref_track.n_frames,
        n_frames_test=test_track.n_frames,
        n_voicing_errors=int(np.count_nonzero(voicing_err)),
        n_f0_deviation_errors=int(np.count_nonzero(deviation_err)),
    )


def evaluate_pair(ref: AudioBuffer, test: AudioBuffer,
                  mel: MelSpec | None = None, frames: FrameSpec | None = None,
                  pitch: PitchSpec | None = None) -> MetricReport:
    """Full report: MSD and FFE between one reference/test pair."""
    report = ffe(ref, test, pitch)
    distortion = msd(ref, test, mel, frames)
    return MetricReport(
        msd=distortion,
        ffe=report.ffe,
        n_frames_ref=report.n_frames_ref,
        n_frames_test=report.n_frames_test,
        n_voicing_errors=report.n_voicing_errors,
        n_f0_deviation_errors=report.n_f0_deviation_errors,
    )


def compare_pitch_curves(signals, pitch: PitchSpec | None = None,
                         out=None, svg_out=None) -> list[tuple[str, FrameTrack]]:
    """Export pitch curves of several signals for stacked comparison plots.

    ``signals`` is a list of (name, AudioBuffer). Writes a CSV with one row
    per frame per signal (name, time_s, f0_hz) and, when ``svg_out`` is
    given, a simple SVG line plot of all curves.
    """
    if not signals:
        raise EmptyInputError("need at least one signal")
    pitch = pitch or PitchSpec()
    tracks = [(name, track_pitch(buf, pitch)) for name, buf in signals]
    if out is not None:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["name", "time_s", "f0_hz"])
            for name, track in tracks:
                hop_s = track.hop_ms / 1000.0
                for i, hz in enumerate(track.f0_hz):
                    writer.writerow([name, f"{i * hop_s:.6f}", f"{hz:.3f}"])
    if svg_out is not None:
        _write_svg(tracks, svg_out)
    return tracks


_SVG_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#8c564b")


def _write_svg(tracks, path, width=900, row_height=160) -> None:
    """Minimal stacked line plot; one panel per signal, f0 over time."""
    f0_max = max((float(t.f0_hz.max()) for _, t in tracks)) or 1.0
    t_max = max(len(t.f0_hz) * t.hop_ms / 1000.0 for _, t in tracks) or 1.0
    pad = 30
    height = row_height * len(tracks)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for row, (name, track) in enumerate(tracks):
        top = row * row_height
        color = _SVG_COLORS[row % len(_SVG_COLORS)]
        hop_s = track.hop_ms / 1000.0
        points = []
        for i, hz in enumerate(track.f0_hz):
            if hz <= 0:
                if points:
                    parts.append(_polyline(points, color))
                    points = []
                continue
            px = pad + (i * hop_s / t_max) * (width - 2 * pad)
            py = top + row_height - pad - (hz / f0_max) * (row_height - 2 * pad)
            points.append(f"{px:.1f},{py:.1f}")
        if points:
            parts.append(_polyline(points, color))
        parts.append(
            f'<text x="{pad}" y="{top + 14}" font-size="12" '
            f'font-family="sans-serif">{name}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))


def _polyline(points, color) -> str:
    return (f'<polyline fill="none" stroke="{color}" stroke-width="1.2" '
            f'points="{" ".join(points)}"/>')
