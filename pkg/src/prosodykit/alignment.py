"""Phone alignments, frame/phone mapping, DTW, and alignment transfer.

Alignments are ingested from .lab files or Praat TextGrids produced by any
external forced aligner. Gaps between intervals are filled with "sil"
phones, which all downstream ops treat as ordinary phones (pauses carry
prosody too). DTW is the plain {(1,0),(0,1),(1,1)} unit-weight recursion;
`transfer_alignment` uses it to warp a reference alignment onto another
rendition of the same text via per-frame F0/energy features.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import FrameTrack
from .errors import (
    AlignmentParseError,
    CoverageError,
    EmptyInputError,
    HopMismatchError,
    IndexOutOfRangeError,
    OverlapError,
)

SILENCE_LABEL = "sil"
_GAP_EPS = 1e-6

# Alignments may run past the last frame start by the tail of the final
# analysis window (up to two periods of the default 60 Hz pitch floor).
COVERAGE_SLACK_S = 0.045


def coverage_limit_s(n_frames: int, hop_ms: float) -> float:
    """Latest alignment end time a track of n_frames frames still covers."""
    hop_s = hop_ms / 1000.0
    return n_frames * hop_s + max(COVERAGE_SLACK_S, 2 * hop_s)


@dataclass(frozen=True)
class Phone:
    label: str
    start_s: float
    end_s: float

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class PhoneAlignment:
    """Ordered, non-overlapping phone intervals."""

    phones: tuple[Phone, ...]

    def __post_init__(self):
        object.__setattr__(self, "phones", tuple(self.phones))
        prev_end = None
        for k, p in enumerate(self.phones):
            if p.end_s <= p.start_s:
                raise OverlapError(
                    f"phone {k} ({p.label!r}): end {p.end_s} <= start {p.start_s}")
            if k == 0 and p.start_s < 0:
                raise OverlapError(f"first phone starts at {p.start_s} < 0")
            if prev_end is not None and p.start_s < prev_end - _GAP_EPS:
                raise OverlapError(
                    f"phone {k} ({p.label!r}) starts at {p.start_s} before "
                    f"previous end {prev_end}")
            prev_end = p.end_s

    def __len__(self) -> int:
        return len(self.phones)

    def __getitem__(self, k) -> Phone:
        return self.phones[k]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(p.label for p in self.phones)

    @property
    def end_time_s(self) -> float:
        return self.phones[-1].end_s if self.phones else 0.0


def _fill_gaps(entries: list[tuple[str, float, float]]) -> list[Phone]:
    phones: list[Phone] = []
    prev_end = None
    for label, start, end in entries:
        if prev_end is not None and start > prev_end + _GAP_EPS:
            phones.append(Phone(SILENCE_LABEL, prev_end, start))
        phones.append(Phone(label, start, end))
        prev_end = end
    return phones


def _parse_lab(path) -> list[tuple[str, float, float]]:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 3:
                raise AlignmentParseError(
                    f"expected 'start end label', got {line!r}", line=lineno)
            try:
                start, end = float(parts[0]), float(parts[1])
            except ValueError:
                raise AlignmentParseError(
                    f"non-numeric interval bounds in {line!r}", line=lineno)
            entries.append((" ".join(parts[2:]), start, end))
    return entries


def _parse_textgrid(path) -> list[tuple[str, float, float]]:
    """Read the first interval tier named "phones" (case-insensitive) from a
    long-format Praat TextGrid. Empty interval labels become "sil"."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()

    def value_of(line):
        return line.split("=", 1)[1].strip()

    tiers = []  # (name, class, [(xmin, xmax, text)])
    current = None
    interval = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if line.startswith("class ="):
            current = {"class": value_of(line).strip('"'), "name": None,
                       "intervals": []}
            tiers.append(current)
        elif line.startswith("name =") and current is not None:
            current["name"] = value_of(line).strip('"')
        elif line.startswith("intervals [") and current is not None:
            interval = {}
        elif line.startswith("xmin =") and current is not None:
            interval["xmin"] = float(value_of(line))
        elif line.startswith("xmax =") and current is not None:
            interval["xmax"] = float(value_of(line))
        elif line.startswith("text =") and current is not None:
            text = value_of(line).strip().strip('"')
            if "xmin" not in interval or "xmax" not in interval:
                raise AlignmentParseError(
                    "interval text before its bounds", line=lineno)
            current["intervals"].append(
                (interval.get("xmin"), interval.get("xmax"), text))
            interval = {}

    for tier in tiers:
        if (tier["class"] == "IntervalTier"
                and (tier["name"] or "").lower() == "phones"):
            entries = []
            for xmin, xmax, text in tier["intervals"]:
                label = text if text else SILENCE_LABEL
                entries.append((label, xmin, xmax))
            return entries
    raise AlignmentParseError('no interval tier named "phones" found')


def load_alignment(path, kind: str | None = None) -> PhoneAlignment:
    """Load a phone alignment from a .lab or TextGrid file.

    ``kind`` is "lab" or "textgrid"; when None it is inferred from the file
    extension.
    """
    if kind is None:
        kind = "textgrid" if str(path).lower().endswith(".textgrid") else "lab"
    if kind == "lab":
        entries = _parse_lab(path)
    elif kind == "textgrid":
        entries = _parse_textgrid(path)
    else:
        raise ValueError(f"unknown alignment kind {kind!r}")
    if not entries:
        raise AlignmentParseError(f"{path}: no intervals found")
    return PhoneAlignment(phones=_fill_gaps(entries))


def save_alignment(align: PhoneAlignment, path) -> None:
    """Write the .lab format; load_alignment() round-trips it exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in align.phones:
            fh.write(f"{p.start_s!r} {p.end_s!r} {p.label}\n")


def frames_for_phone(align: PhoneAlignment, phone_index: int,
                     hop_ms: float, n_frames: int) -> tuple[int, int]:
    """Half-open frame range [floor(start/hop), floor(end/hop)) for a phone,
    clamped to [0, n_frames) and never empty."""
    if not 0 <= phone_index < len(align):
        raise IndexOutOfRangeError(
            f"phone index {phone_index} outside [0, {len(align)})")
    if n_frames <= 0:
        raise EmptyInputError("n_frames must be > 0")
    hop_s = hop_ms / 1000.0
    p = align[phone_index]
    # epsilon keeps boundaries that sit exactly on a frame edge from
    # flipping sides under float noise
    start = int(np.floor(p.start_s / hop_s + 1e-6))
    end = int(np.floor(p.end_s / hop_s + 1e-6))
    start = min(max(start, 0), n_frames - 1)
    end = min(max(end, 0), n_frames)
    if end <= start:
        end = start + 1
    return start, end


@dataclass(frozen=True)
class DtwPath:
    """Monotone continuous warping path with its accumulated cost."""

    pairs: tuple[tuple[int, int], ...]
    cost: float

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))


def dtw(cost_matrix: np.ndarray) -> DtwPath:
    """Minimal-cost monotone path through a cost matrix.

    Steps {(1,0), (0,1), (1,1)} with unit weights; backtracking breaks ties
    preferring (1,1), then (1,0), then (0,1).
    """
    c = np.asarray(cost_matrix, dtype=np.float64)
    if c.ndim != 2 or c.size == 0:
        raise EmptyInputError("cost matrix must be non-empty and 2-D")
    if np.any(~np.isfinite(c)) or np.any(c < 0):
        raise ValueError("costs must be finite and >= 0")
    rows, cols = c.shape
    acc = np.full((rows, cols), np.inf)
    acc[0, 0] = c[0, 0]
    for j in range(1, cols):
        acc[0, j] = acc[0, j - 1] + c[0, j]
    for i in range(1, rows):
        acc[i, 0] = acc[i - 1, 0] + c[i, 0]
        prev = acc[i - 1]
        cur = acc[i]
        for j in range(1, cols):
            cur[j] = c[i, j] + min(prev[j - 1], prev[j], cur[j - 1])

    pairs = [(rows - 1, cols - 1)]
    i, j = rows - 1, cols - 1
    while (i, j) != (0, 0):
        if i > 0 and j > 0:
            diag, up, left = acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1]
            best = min(diag, up, left)
            if diag == best:
                i, j = i - 1, j - 1
            elif up == best:
                i -= 1
            else:
                j -= 1
        elif i > 0:
            i -= 1
        else:
            j -= 1
        pairs.append((i, j))
    pairs.reverse()
    return DtwPath(pairs=tuple(pairs), cost=float(acc[rows - 1, cols - 1]))


def euclidean_cost_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise euclidean distances between the rows of two matrices.

    Chunked over rows so peak memory stays bounded; computed as direct
    differences (not the gram-matrix identity) so identical rows give an
    exact 0 and identity alignments cost exactly 0.
    """
    rows = max(1, int(2e7 / max(1, b.shape[0] * b.shape[1])))
    out = np.empty((a.shape[0], b.shape[0]))
    for start in range(0, a.shape[0], rows):
        block = a[start:start + rows]
        diff = block[:, None, :] - b[None, :, :]
        out[start:start + rows] = np.sqrt((diff ** 2).sum(axis=2))
    return out


def _z_normalize(x: np.ndarray) -> np.ndarray:
    std = x.std()
    return (x - x.mean()) / (std if std > 0 else 1.0)


def _warp_features(track: FrameTrack) -> np.ndarray:
    log_f0 = np.where(track.f0_hz > 0, np.log(np.maximum(track.f0_hz, 1e-10)), 0.0)
    log_energy = np.log(np.maximum(track.energy, 1e-10))
    return np.stack([_z_normalize(log_f0), _z_normalize(log_energy)], axis=1)


def transfer_alignment(ref_align: PhoneAlignment, ref_track: FrameTrack,
                       tgt_track: FrameTrack) -> PhoneAlignment:
    """Warp a reference alignment onto another rendition of the same text.

    DTW over z-normalized (log-F0, log-energy) frame features maps each
    reference phone boundary to the first path pair reaching it; boundaries
    are then forced strictly increasing (at least one frame per phone).
    """
    if ref_track.n_frames == 0 or tgt_track.n_frames == 0:
        raise EmptyInputError("both tracks must be non-empty")
    if ref_track.hop_ms != tgt_track.hop_ms:
        raise HopMismatchError(
            f"hop {ref_track.hop_ms} ms vs {tgt_track.hop_ms} ms")
    if len(ref_align) == 0:
        raise EmptyInputError("reference alignment is empty")
    hop_s = ref_track.hop_ms / 1000.0
    if ref_align.end_time_s > coverage_limit_s(ref_track.n_frames,
                                               ref_track.hop_ms):
        raise CoverageError(
            f"alignment ends at {ref_align.end_time_s} s but reference track "
            f"covers only {ref_track.n_frames * hop_s:.3f} s")

    ref_feat = _warp_features(ref_track)
    tgt_feat = _warp_features(tgt_track)
    path = dtw(euclidean_cost_matrix(ref_feat, tgt_feat))

    n_ref = ref_track.n_frames
    n_tgt = tgt_track.n_frames
    # boundaries: start of phone 0, then end of each phone, in ref frames
    bounds = [ref_align[0].start_s] + [p.end_s for p in ref_align.phones]
    ref_frames = [min(int(round(b / hop_s)), n_ref) for b in bounds]

    path_i = np.array([p[0] for p in path.pairs])
    path_j = np.array([p[1] for p in path.pairs])
    mapped = []
    for rb in ref_frames:
        if rb >= n_ref:
            mapped.append(n_tgt)
            continue
        k = int(np.searchsorted(path_i, rb, side="left"))
        mapped.append(int(path_j[min(k, len(path_j) - 1)]))

    # enforce strictly increasing boundaries, >= 1 frame per phone
    n_phones = len(ref_align)
    if n_phones > n_tgt:
        raise EmptyInputError(
            f"{n_phones} phones cannot fit in {n_tgt} target frames")
    for k in range(1, len(mapped)):
        mapped[k] = max(mapped[k], mapped[k - 1] + 1)
    mapped[-1] = min(mapped[-1], n_tgt)
    for k in range(len(mapped) - 2, -1, -1):
        mapped[k] = min(mapped[k], mapped[k + 1] - 1)

    phones = [
        Phone(p.label, mapped[k] * hop_s, mapped[k + 1] * hop_s)
        for k, p in enumerate(ref_align.phones)
    ]
    return PhoneAlignment(phones=phones)
