"""Exception types shared across the package.

Each class names one failure category; the CLI maps categories to exit
codes (see :mod:`hiaa.cli`).
"""


class OutOfRange(ValueError):
    """A score or input fell outside its documented range."""


class DegenerateRange(ValueError):
    """Min-max normalization impossible: max equals min."""


class TooFewValues(ValueError):
    """An operation needs more values than were supplied."""


class EmptyRaterList(ValueError):
    """A rater-score list was empty."""


class IndexOutOfRange(IndexError):
    """A paraphrase or slot index addressed nothing."""


class BadFraction(ValueError):
    """A split fraction was outside (0, 1)."""


class ShapeMismatch(ValueError):
    """Array shapes inconsistent with the configured sizes."""


class WrongPromptKind(ValueError):
    """An operation needed hidden states from the other prompt kind."""


class NonFiniteInput(ValueError):
    """An input contained NaN or infinity."""


class LengthMismatch(ValueError):
    """Two paired sequences differ in length."""


class EmptyInput(ValueError):
    """A nonempty sequence was required."""


class BadFlag(ValueError):
    """The annotation-type flag was not 0 or 1."""


class EmptyTrainingSet(ValueError):
    """Training was asked to run on zero samples."""


class BatchTooSmall(ValueError):
    """Train-mode batch statistics need at least two samples."""


class VersionMismatch(RuntimeError):
    """A checkpoint's format_version is not supported."""


class CorruptFile(RuntimeError):
    """A file could not be parsed as the expected format."""


class MissingPrediction(ValueError):
    """Evaluation found a sample with no prediction."""


class MissingInput(RuntimeError):
    """A required input file or checkpoint section is absent."""


class ConfigError(ValueError):
    """A configuration value is invalid."""


class NumericFailure(ArithmeticError):
    """A computation produced a non-finite value."""
