"""Exception taxonomy for the pipeline.

Every error carries a stable snake_case code used by the HTTP error envelope
and by the CLI exit-code mapping. Three coarse classes exist for exit codes:
config/format problems, input validation problems, and upstream failures.
"""


class UTalkError(Exception):
    """Base class; `code` is the wire identifier."""

    code = "error"

    def __init__(self, message=""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__


# -- config / format --------------------------------------------------------

class ConfigError(UTalkError):
    code = "config_error"


class ImageDecode(UTalkError):
    code = "image_decode"


class AudioDecode(UTalkError):
    code = "audio_decode"


class FormatError(UTalkError):
    """Malformed container or report file."""

    code = "format_error"


class TooFewSamples(UTalkError):
    code = "too_few_samples"


class NonPositiveBaseline(UTalkError):
    code = "non_positive_baseline"


# -- input validation --------------------------------------------------------

class SilentInput(UTalkError):
    """Transcript below the two-word minimum."""

    code = "silent_input"


class EmptyText(UTalkError):
    code = "empty_text"


class EmptyAudio(UTalkError):
    code = "empty_audio"


class NoFace(UTalkError):
    code = "no_face"


class UnknownFixture(UTalkError):
    """Stub recognizer has no registered text for this audio digest."""

    code = "unknown_fixture"


class BoxOutOfBounds(UTalkError):
    code = "box_out_of_bounds"


# -- runtime -----------------------------------------------------------------

class UpstreamError(UTalkError):
    code = "upstream_error"


class WriteFailure(UTalkError):
    code = "write_failure"


class Busy(UTalkError):
    code = "busy"


CONFIG_ERRORS = (ConfigError, ImageDecode, AudioDecode, FormatError,
                 TooFewSamples, NonPositiveBaseline)
VALIDATION_ERRORS = (SilentInput, EmptyText, EmptyAudio, NoFace,
                     UnknownFixture, BoxOutOfBounds)
