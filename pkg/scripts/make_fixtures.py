#!/usr/bin/env python3
"""Generate a corpus of synthetic recitations (WAV + .lab alignments).

Writes pairs of renditions of the same sentences with perturbed prosody,
which is what the cloning, splicing, and evaluation workflows expect.
"""
import argparse
from pathlib import Path

from prosodykit.alignment import save_alignment
from prosodykit.audio_io import save_wav
from prosodykit.simulate import (
    example_sentence,
    perturb_sentence,
    render_utterance,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="fixtures")
    parser.add_argument("--n-pairs", type=int, default=5)
    parser.add_argument("--sample-rate", type=int, default=16000)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.n_pairs):
        specs = example_sentence(f0_base=165 + 10 * k)
        base_buf, base_align = render_utterance(specs, args.sample_rate,
                                                seed=k)
        ref_specs = perturb_sentence(specs, seed=100 + k)
        ref_buf, ref_align = render_utterance(ref_specs, args.sample_rate,
                                              seed=k)
        for tag, buf, align in (("base", base_buf, base_align),
                                ("ref", ref_buf, ref_align)):
            save_wav(buf, out / f"pair{k}_{tag}.wav")
            save_alignment(align, out / f"pair{k}_{tag}.lab")
        print(f"pair{k}: {base_buf.duration_s:.2f}s base, "
              f"{ref_buf.duration_s:.2f}s ref")
    print(f"wrote {2 * args.n_pairs} utterances to {out}/")


if __name__ == "__main__":
    main()
