"""Exception hierarchy shared by all prosodykit modules."""


class ProsodyKitError(Exception):
    """Base class for all errors raised by this package."""


# --- audio io ---------------------------------------------------------------

class CorruptHeaderError(ProsodyKitError):
    """WAV container is malformed or truncated."""


class UnsupportedEncodingError(ProsodyKitError):
    """WAV codec is neither PCM 16-bit nor IEEE float 32-bit."""


class BufferTooShortError(ProsodyKitError):
    """Audio buffer shorter than one analysis frame."""


class InvalidSpecError(ProsodyKitError):
    """Analysis spec inconsistent with the buffer (e.g. fmax above Nyquist)."""


# --- alignment --------------------------------------------------------------

class AlignmentParseError(ProsodyKitError):
    """Alignment file does not parse; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OverlapError(ProsodyKitError):
    """Phone intervals overlap or are not strictly increasing."""


class EmptyInputError(ProsodyKitError):
    """Operation received an empty sequence or matrix."""


class HopMismatchError(ProsodyKitError):
    """Frame tracks use different hop sizes."""


class CoverageError(ProsodyKitError):
    """Alignment extends past the analyzed track."""


class IndexOutOfRangeError(ProsodyKitError, IndexError):
    """Phone index outside the valid range."""


# --- prosody ----------------------------------------------------------------

class AllUnvoicedError(ProsodyKitError):
    """Track has no phone with a nonzero value to average over."""


class AlreadyNormalizedError(ProsodyKitError):
    """normalize() called on a track that is already normalized."""


class NotNormalizedError(ProsodyKitError):
    """denormalize() called on a track that is not normalized."""


class NonpositiveMeanError(ProsodyKitError):
    """Denormalization mean must be strictly positive."""


class PhoneSequenceMismatchError(ProsodyKitError):
    """Two tracks do not share the same phone label sequence."""

    def __init__(self, position, expected=None, got=None):
        self.position = position
        self.expected = expected
        self.got = got
        if expected is None and got is None:
            msg = f"phone sequences differ in length at position {position}"
        else:
            msg = (f"phone sequences differ at position {position}: "
                   f"{expected!r} vs {got!r}")
        super().__init__(msg)


class InvalidValueError(ProsodyKitError):
    """Edit value outside its allowed range."""


# --- resynthesis ------------------------------------------------------------

class NormalizedTrackError(ProsodyKitError):
    """Operation requires a denormalized track (absolute Hz / RMS units)."""


class PlanMismatchError(ProsodyKitError):
    """Synthesis plan inconsistent with the base audio or pitch marks."""


# --- metrics ----------------------------------------------------------------

class SampleRateMismatchError(ProsodyKitError):
    """Metric inputs must share a sample rate; no silent resampling."""
