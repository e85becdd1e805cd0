"""Shared exception types.

ValueError subclasses map to CLI exit code 2 (data error), DivergenceError
to exit code 3 (numeric divergence).
"""


class InvalidModelError(ValueError):
    """A predictor or denoiser returned malformed output (bad shape, rows
    that do not sum to 1, negative probabilities, ...)."""


class DivergenceError(RuntimeError):
    """An iterative sampler produced a NaN or Inf state."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


class ParseError(ValueError):
    """A caption failed to parse; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at byte {offset})")


class TrajectoryFormatError(ValueError):
    """A trajectory file is malformed; carries the offending line number."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"{message} (line {line})")
