"""Exception hierarchy for freightmode."""


class FreightModeError(Exception):
    """Base class for all package errors."""


class UnknownCategory(FreightModeError, KeyError):
    pass


class UnknownArea(FreightModeError, KeyError):
    pass


class ConfigError(FreightModeError, ValueError):
    pass


class SchemaError(FreightModeError, ValueError):
    """Input file header does not match the column map."""


class FieldError(FreightModeError, ValueError):
    """A single field failed validation."""

    def __init__(self, column, value, reason=""):
        self.column = column
        self.value = value
        self.reason = reason
        msg = f"invalid value {value!r} in column {column!r}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class EmptyDataset(FreightModeError, ValueError):
    pass


class TooFewRecords(FreightModeError, ValueError):
    pass


class NonpositiveWeight(FreightModeError, ValueError):
    pass


class DegenerateNode(FreightModeError, ValueError):
    pass


class SchemaMismatch(FreightModeError, ValueError):
    """Model applied to inputs laid out differently from its training data."""


class InvalidK(FreightModeError, ValueError):
    pass


class UnsupportedLearner(FreightModeError, ValueError):
    pass


class NoModelsAvailable(FreightModeError, LookupError):
    pass


class LengthMismatch(FreightModeError, ValueError):
    pass


class EmptyMatrix(FreightModeError, ValueError):
    pass


class UndefinedAuc(FreightModeError, ValueError):
    pass


class TooManyFeatures(FreightModeError, ValueError):
    pass


class UnknownFeature(FreightModeError, KeyError):
    pass


class StageOrderError(FreightModeError, RuntimeError):
    """A pipeline stage was invoked before the artifacts it consumes exist."""


class StaleArtifactError(FreightModeError, RuntimeError):
    """An artifact was produced under a different configuration."""


class UnsupportedVersion(FreightModeError, ValueError):
    pass


class ParseError(FreightModeError, ValueError):
    pass
