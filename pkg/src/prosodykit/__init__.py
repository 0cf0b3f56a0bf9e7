"""prosodykit: phone-level prosody extraction, cloning, editing,
resynthesis, and evaluation for recited speech."""

from .audio_io import AudioBuffer, FrameSpec, load_wav, save_wav, frame_signal
from .analysis import (
    FrameTrack,
    MelSpec,
    PitchSpec,
    frame_energy,
    log_mel_spectrogram,
    track_pitch,
)
from .alignment import (
    DtwPath,
    Phone,
    PhoneAlignment,
    dtw,
    frames_for_phone,
    load_alignment,
    save_alignment,
    transfer_alignment,
)
from .prosody import (
    EditOp,
    EditScript,
    PhoneProsody,
    ProsodyTrack,
    SpliceRegion,
    apply_edits,
    average_per_phone,
    clone_prosody,
    denormalize,
    normalize,
    splice,
)
from .resynth import (
    PitchMarks,
    SynthesisPlan,
    find_pitch_marks,
    output_alignment,
    plan_synthesis,
    resynthesize,
    resynthesize_track,
)
from .metrics import (
    MetricReport,
    compare_pitch_curves,
    evaluate_pair,
    ffe,
    msd,
    pitch_frame_errors,
)

__version__ = "0.1.0"
