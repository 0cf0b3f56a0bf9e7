import pytest

from prosodykit.alignment import save_alignment
from prosodykit.analysis import PitchSpec, track_pitch
from prosodykit.audio_io import save_wav
from prosodykit.prosody import average_per_phone
from prosodykit.simulate import (
    example_sentence,
    perturb_sentence,
    render_utterance,
)

SR = 16000


@pytest.fixture(scope="session")
def utterances():
    """Five synthetic recitations with alignments and extracted prosody."""
    out = []
    for seed in range(1, 6):
        specs = example_sentence(f0_base=170 + seed * 12)
        buf, align = render_utterance(specs, SR, seed=seed)
        track = track_pitch(buf, PitchSpec())
        prosody = average_per_phone(track, align)
        out.append({"audio": buf, "align": align, "track": track,
                    "prosody": prosody, "specs": specs, "seed": seed})
    return out


@pytest.fixture(scope="session")
def rendition_pairs():
    """Base/reference pairs: same phone sequence, perturbed prosody."""
    pairs = []
    for seed in range(1, 6):
        specs = example_sentence(f0_base=175 + seed * 8)
        ref_specs = perturb_sentence(specs, seed=100 + seed)
        base_buf, base_align = render_utterance(specs, SR, seed=seed)
        ref_buf, ref_align = render_utterance(ref_specs, SR, seed=seed)
        pairs.append({
            "base_audio": base_buf, "base_align": base_align,
            "ref_audio": ref_buf, "ref_align": ref_align,
        })
    return pairs


@pytest.fixture()
def wav_fixture_dir(tmp_path, utterances):
    """Utterance audio and alignments written to disk for CLI-level tests."""
    paths = []
    for k, utt in enumerate(utterances):
        wav = tmp_path / f"utt{k}.wav"
        lab = tmp_path / f"utt{k}.lab"
        save_wav(utt["audio"], wav)
        save_alignment(utt["align"], lab)
        paths.append({"wav": wav, "lab": lab})
    return paths


def rel_err(measured, target):
    return abs(measured - target) / abs(target)
