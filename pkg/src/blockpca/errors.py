"""Exception types shared across the package."""


class BlockPCAError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(BlockPCAError, ValueError):
    """An argument violates a documented precondition."""


class RankDeficientError(BlockPCAError):
    """A matrix expected to have full column rank does not.

    ``column`` is the index of the first column that is (numerically) a
    linear combination of the preceding ones.
    """

    def __init__(self, column: int, message: str | None = None):
        self.column = column
        super().__init__(message or f"matrix is rank deficient at column {column}")


class OracleScaleError(BlockPCAError):
    """A dense p-by-p oracle was requested above its dimension guard."""


class ParseError(BlockPCAError):
    """A data file could not be parsed; ``line`` is 1-based."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class NotReopenableError(BlockPCAError):
    """The stream has no backing source and cannot be reopened."""


class EvaluationStreamError(BlockPCAError):
    """An evaluation-only stream was offered where training data is required,
    or vice versa."""


class PartialStreamError(BlockPCAError):
    """The stream ended before the schedule's sample demand was met."""

    def __init__(self, blocks_completed: int, samples_consumed: int):
        self.blocks_completed = blocks_completed
        self.samples_consumed = samples_consumed
        super().__init__(
            f"stream exhausted after {blocks_completed} complete blocks "
            f"({samples_consumed} samples)"
        )


class DegenerateBlockError(BlockPCAError):
    """A block produced an accumulator too degenerate to renormalize."""

    def __init__(self, block: int, message: str | None = None):
        self.block = block
        super().__init__(message or f"degenerate accumulator in block {block}")


class InsufficientSamplesError(ValidationError):
    """The sample budget cannot fill the required number of blocks."""


class ConfigurationError(BlockPCAError):
    """Mutually inconsistent run configuration."""


class IllConditionedWarning(UserWarning):
    """Emitted when an eigengap is too small for the result to be well defined."""
