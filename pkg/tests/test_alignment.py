from functools import lru_cache

import numpy as np
import pytest

from prosodykit.alignment import (
    Phone,
    PhoneAlignment,
    dtw,
    frames_for_phone,
    load_alignment,
    save_alignment,
    transfer_alignment,
)
from prosodykit.analysis import FrameTrack
from prosodykit.errors import (
    AlignmentParseError,
    EmptyInputError,
    HopMismatchError,
    IndexOutOfRangeError,
    OverlapError,
)

TEXTGRID = '''File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 0.5
tiers? <exists>
size = 2
item []:
    item [1]:
        class = "IntervalTier"
        name = "words"
        xmin = 0
        xmax = 0.5
        intervals: size = 1
        intervals [1]:
            xmin = 0
            xmax = 0.5
            text = "hallo"
    item [2]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = 0.5
        intervals: size = 3
        intervals [1]:
            xmin = 0
            xmax = 0.2
            text = "h"
        intervals [2]:
            xmin = 0.2
            xmax = 0.35
            text = ""
        intervals [3]:
            xmin = 0.35
            xmax = 0.5
            text = "a"
'''


def brute_force_dtw_cost(cost):
    """Exhaustive minimum over all monotone continuous paths."""
    rows, cols = cost.shape

    @lru_cache(maxsize=None)
    def best(i, j):
        if i == 0 and j == 0:
            return float(cost[0, 0])
        candidates = []
        if i > 0 and j > 0:
            candidates.append(best(i - 1, j - 1))
        if i > 0:
            candidates.append(best(i - 1, j))
        if j > 0:
            candidates.append(best(i, j - 1))
        return float(cost[i, j]) + min(candidates)

    return best(rows - 1, cols - 1)


class TestLabFormat:
    def test_basic_parse(self, tmp_path):
        path = tmp_path / "a.lab"
        path.write_text("0.00 0.10 h\n0.10 0.25 a\n")
        align = load_alignment(path)
        assert align.labels == ("h", "a")
        assert align[0].duration_s == pytest.approx(0.10)
        assert align[1].duration_s == pytest.approx(0.15)

    def test_overlap_rejected(self, tmp_path):
        path = tmp_path / "bad.lab"
        path.write_text("0.00 0.10 h\n0.05 0.25 a\n")
        with pytest.raises(OverlapError):
            load_alignment(path)

    def test_parse_error_carries_line(self, tmp_path):
        path = tmp_path / "bad.lab"
        path.write_text("0.00 0.10 h\nnot numbers here\n")
        with pytest.raises(AlignmentParseError) as info:
            load_alignment(path)
        assert info.value.line == 2

    def test_gap_becomes_sil(self, tmp_path):
        path = tmp_path / "gap.lab"
        path.write_text("0.0 0.1 a\n0.3 0.4 b\n")
        align = load_alignment(path)
        assert align.labels == ("a", "sil", "b")
        assert align[1].start_s == pytest.approx(0.1)
        assert align[1].end_s == pytest.approx(0.3)

    def test_save_load_round_trip(self, tmp_path):
        align = PhoneAlignment(phones=(
            Phone("a", 0.0, 0.125), Phone("sil", 0.125, 0.3),
            Phone("b", 0.3, 0.48)))
        path = tmp_path / "rt.lab"
        save_alignment(align, path)
        back = load_alignment(path)
        assert back.labels == align.labels
        for p, q in zip(align.phones, back.phones):
            assert p.start_s == q.start_s
            assert p.end_s == q.end_s


class TestTextGrid:
    def test_reads_phones_tier_only(self, tmp_path):
        path = tmp_path / "t.TextGrid"
        path.write_text(TEXTGRID)
        align = load_alignment(path, kind="textgrid")
        assert align.labels == ("h", "sil", "a")

    def test_missing_phones_tier(self, tmp_path):
        path = tmp_path / "t.TextGrid"
        path.write_text(TEXTGRID.replace('name = "phones"', 'name = "fon"'))
        with pytest.raises(AlignmentParseError):
            load_alignment(path, kind="textgrid")


class TestFramesForPhone:
    def test_hand_computed_range(self):
        align = PhoneAlignment(phones=(Phone("a", 0.10, 0.25),))
        assert frames_for_phone(align, 0, 10.0, 100) == (10, 25)

    def test_full_span(self):
        align = PhoneAlignment(phones=(Phone("a", 0.0, 1.0),))
        assert frames_for_phone(align, 0, 10.0, 100) == (0, 100)

    def test_tiny_phone_nonempty(self):
        align = PhoneAlignment(phones=(Phone("a", 0.000, 0.004),))
        start, end = frames_for_phone(align, 0, 10.0, 100)
        assert end - start == 1

    def test_bad_index(self):
        align = PhoneAlignment(phones=(Phone("a", 0.0, 1.0),))
        with pytest.raises(IndexOutOfRangeError):
            frames_for_phone(align, 1, 10.0, 100)


class TestDtw:
    def test_identity_diagonal(self):
        cost = np.zeros((4, 4))
        cost[~np.eye(4, dtype=bool)] = 1.0
        path = dtw(cost)
        assert path.cost == 0.0
        assert path.pairs == tuple((i, i) for i in range(4))

    def test_two_by_two(self):
        path = dtw(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert path.pairs == ((0, 0), (1, 1))
        assert path.cost == 0.0

    def test_against_brute_force(self):
        rng = np.random.default_rng(77)
        for _ in range(60):
            rows = int(rng.integers(1, 6))
            cols = int(rng.integers(1, 6))
            cost = rng.uniform(0, 5, size=(rows, cols))
            assert dtw(cost).cost == pytest.approx(
                brute_force_dtw_cost(cost), rel=1e-12)

    def test_transpose_cost_invariance(self):
        rng = np.random.default_rng(78)
        for _ in range(20):
            cost = rng.uniform(0, 3, size=(5, 7))
            forward = dtw(cost)
            backward = dtw(cost.T)
            assert forward.cost == pytest.approx(backward.cost, rel=1e-12)
            # float costs have no ties, so the path mirrors exactly
            assert tuple((j, i) for i, j in backward.pairs) == forward.pairs

    def test_path_shape_invariants(self):
        rng = np.random.default_rng(79)
        cost = rng.uniform(0, 1, size=(6, 4))
        path = dtw(cost)
        assert path.pairs[0] == (0, 0)
        assert path.pairs[-1] == (5, 3)
        steps = np.diff(np.array(path.pairs), axis=0)
        assert np.all((steps == 0) | (steps == 1))
        assert np.all(steps.sum(axis=1) >= 1)

    def test_empty_rejected(self):
        with pytest.raises(EmptyInputError):
            dtw(np.zeros((0, 3)))


def make_track(f0, energy, hop_ms=10.0):
    return FrameTrack(f0_hz=np.asarray(f0, dtype=float),
                      energy=np.asarray(energy, dtype=float), hop_ms=hop_ms)


def blocky_track(blocks, hop_ms=10.0):
    """blocks: list of (n_frames, f0, energy) segments."""
    f0 = np.concatenate([np.full(n, f) for n, f, _ in blocks])
    en = np.concatenate([np.full(n, e) for n, _, e in blocks])
    return make_track(f0, en, hop_ms)


class TestTransferAlignment:
    def setup_method(self):
        self.align = PhoneAlignment(phones=(
            Phone("a", 0.0, 0.2), Phone("b", 0.2, 0.5), Phone("c", 0.5, 0.7)))
        self.track = blocky_track([(20, 200.0, 0.5), (30, 150.0, 0.2),
                                   (20, 0.0, 0.05)])

    def test_identity_warp(self):
        out = transfer_alignment(self.align, self.track, self.track)
        assert out.labels == self.align.labels
        for p, q in zip(self.align.phones, out.phones):
            assert q.start_s == pytest.approx(p.start_s, abs=0.011)
            assert q.end_s == pytest.approx(p.end_s, abs=0.011)

    def test_frame_doubling_doubles_boundaries(self):
        doubled = make_track(np.repeat(self.track.f0_hz, 2),
                             np.repeat(self.track.energy, 2))
        out = transfer_alignment(self.align, self.track, doubled)
        for p, q in zip(self.align.phones, out.phones):
            assert q.end_s == pytest.approx(2 * p.end_s, abs=0.011)

    def test_monotone_output(self):
        rng = np.random.default_rng(5)
        tgt = make_track(rng.uniform(100, 300, 90), rng.uniform(0.1, 1, 90))
        out = transfer_alignment(self.align, self.track, tgt)
        bounds = [out[0].start_s] + [p.end_s for p in out.phones]
        assert all(b2 > b1 for b1, b2 in zip(bounds, bounds[1:]))

    def test_labels_preserved(self):
        out = transfer_alignment(self.align, self.track, self.track)
        assert out.labels == ("a", "b", "c")

    def test_hop_mismatch(self):
        other = make_track(self.track.f0_hz, self.track.energy, hop_ms=5.0)
        with pytest.raises(HopMismatchError):
            transfer_alignment(self.align, self.track, other)
