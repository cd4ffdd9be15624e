"""Exception hierarchy shared by every module.

Each error carries a stable ``code`` (what reports and the CLI print) and an
``exit_code`` used by ``main.py``.
"""

from typing import Any, Optional


class AlignmentError(Exception):
    code = "ALIGNMENT_ERROR"
    exit_code = 1

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context

    def __str__(self) -> str:
        if not self.context:
            return self.message
        details = ", ".join(f"{key}={value!r}" for key, value in self.context.items())
        return f"{self.message} ({details})"


class InputError(AlignmentError, ValueError):
    """Bad caller input: exit code 2."""

    exit_code = 2


class EmptyTextError(InputError):
    code = "EMPTY_TEXT"


class BudgetExceededError(InputError):
    code = "BUDGET_EXCEEDED"


class LengthMismatchError(InputError):
    code = "LENGTH_MISMATCH"


class EmptyBatchError(InputError):
    code = "EMPTY_BATCH"


class EmptyInputError(InputError):
    code = "EMPTY"


class EmptyDevError(InputError):
    code = "EMPTY_DEV"


class UnknownLabelError(InputError):
    code = "UNKNOWN_LABEL"


class OutOfRangeError(InputError):
    code = "OUT_OF_RANGE"


class SpanOutOfBoundsError(InputError):
    code = "SPAN_OUT_OF_BOUNDS"


class TooShortError(InputError):
    code = "TOO_SHORT"


class ConstantInputError(InputError):
    code = "CONSTANT_INPUT"


class SingleClassError(InputError):
    code = "SINGLE_CLASS"


class NonPositiveBudgetError(InputError):
    code = "NONPOSITIVE_BUDGET"


class ParseError(InputError):
    code = "PARSE_ERROR"

    def __init__(self, message: str, line: int, **context: Any):
        super().__init__(message, line=line, **context)
        self.line = line


class SchemaViolation(InputError):
    code = "SCHEMA_VIOLATION"

    def __init__(self, message: str, line: int, field: Optional[str] = None, **context: Any):
        super().__init__(message, line=line, field=field, **context)
        self.line = line
        self.field = field


class BackendFailure(AlignmentError):
    """The scoring backend raised; the original exception is the ``__cause__``."""

    code = "BACKEND_FAILURE"
    exit_code = 3


class ExampleFailure(AlignmentError):
    """A benchmark aborted on one example. Keeps the cause's code and exit code."""

    def __init__(self, example_id: str, cause: AlignmentError):
        super().__init__(f"example {example_id!r} failed: {cause}", example_id=example_id)
        self.example_id = example_id
        self.cause = cause
        self.code = cause.code
        self.exit_code = cause.exit_code
