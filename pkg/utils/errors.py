from typing import Optional, Tuple


class VolatilityBenchError(Exception):
    """Base class for every error raised by the benchmark."""


class ConfigError(VolatilityBenchError, ValueError):
    pass


class HeadlineFormatError(VolatilityBenchError, ValueError):
    """
    Raised when a headline JSONL line cannot be decoded or lacks a required field.

    Attributes:
        line_number (int): 1-based line number in the source file.
    """

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"Malformed headline record. Line: {line_number}. Reason: {reason}")


class EmptyCorpusError(VolatilityBenchError, ValueError):
    pass


class OutOfRangeError(VolatilityBenchError, ValueError):
    pass


class CalendarError(VolatilityBenchError, ValueError):
    pass


class PriceValidationError(VolatilityBenchError, ValueError):
    """
    Raised when a price CSV row violates the price table invariants.

    Attributes:
        row_number (Optional[int]): 1-based line number in the CSV file (the header is line 1).
    """

    def __init__(self, reason: str, row_number: Optional[int] = None):
        self.row_number = row_number
        self.reason = reason
        location = f" Row: {row_number}." if row_number is not None else ""
        super().__init__(f"Invalid price data.{location} Reason: {reason}")


class TemplateError(VolatilityBenchError, ValueError):
    pass


class ProviderError(VolatilityBenchError, RuntimeError):
    pass


class ReplayMissError(VolatilityBenchError, KeyError):
    """
    Raised when the replay archive has no response for a request.

    Attributes:
        key (Tuple[str, float, int]): the (prompt_hash, temperature, run_index) that was missing.
    """

    def __init__(self, key: Tuple[str, float, int]):
        self.key = key
        super().__init__(
            f"Replay archive miss. Prompt: {key[0]}. Temperature: {key[1]}. Run: {key[2]}."
        )

    def __str__(self):
        return self.args[0]


class PlantedLabelError(VolatilityBenchError, KeyError):
    def __str__(self):
        return self.args[0]


class InsufficientRunsError(VolatilityBenchError, ValueError):
    pass


class JoinError(VolatilityBenchError, ValueError):
    pass


class ConsistencyError(VolatilityBenchError, ValueError):
    pass


class MissingArtifactError(VolatilityBenchError, RuntimeError):
    """
    Raised when a stage is invoked before the stage that produces its inputs.

    Attributes:
        stage (str): the stage that was invoked.
        required (str): the subcommand that must run first.
        path (str): the artifact that was not found.
    """

    def __init__(self, stage: str, required: str, path: str):
        self.stage = stage
        self.required = required
        self.path = path
        super().__init__(
            f"Stage `{stage}` needs {path}, which does not exist. Run `{required}` first."
        )
