class TgdrError(ValueError):
    """Base error. `code` is the machine-parsable identifier printed by the CLI."""

    code = "TGDR_ERROR"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def one_line(self) -> str:
        text = " ".join(self.message.split())
        return f"error code={self.code} message={text}"


class DimensionMismatchError(TgdrError):
    code = "DIM_MISMATCH"


class NonFiniteError(TgdrError):
    code = "NON_FINITE"


class DivergenceError(TgdrError):
    code = "DIVERGENCE"


class MissingClassError(TgdrError):
    code = "MISSING_CLASS"


class StratificationError(TgdrError):
    code = "STRATIFICATION"


class ResampleInfeasibleError(TgdrError):
    code = "RESAMPLE_INFEASIBLE"


class BaggingError(TgdrError):
    code = "BAGGING_FAILED"


class DegenerateStudyError(TgdrError):
    code = "DEGENERATE_STUDY"


class NoFeaturesError(TgdrError):
    code = "NO_FEATURES"


class ParseError(TgdrError):
    code = "PARSE_ERROR"


class SchemaVersionError(TgdrError):
    code = "SCHEMA_VERSION"


class IncompatibleModelError(TgdrError):
    code = "INCOMPATIBLE_MODEL"


class InvalidConfigError(TgdrError):
    code = "INVALID_CONFIG"


class InvalidProbabilityError(TgdrError):
    code = "INVALID_PROBABILITY"


class InputOutputError(TgdrError):
    code = "IO_ERROR"
