class RadiomixError(Exception):
    """Base class for all errors raised by radiomix."""


class UnsupportedAudioError(RadiomixError, ValueError):
    """The file is not a PCM/float WAV we can decode."""


class SilentClipError(RadiomixError, ValueError):
    """The clip has no signal content (all zero or below the silence floor)."""


class UnmeasurableError(RadiomixError, ValueError):
    """No 400 ms block passes the absolute loudness gate."""


class CorpusError(RadiomixError):
    """The corpus layout is unusable for synthesis."""


class AnnotationError(RadiomixError, ValueError):
    """Malformed annotation file or event list."""


class SynthesisError(RadiomixError):
    """An example could not be synthesized within the retry budget."""
