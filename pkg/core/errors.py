"""
Error hierarchy for AMOS-VPR

Every error raised on purpose by the engine derives from VPRError and carries
the process exit code the CLI uses for its class.
"""

from typing import Optional, Sequence


class VPRError(Exception):
    """Base class for AMOS-VPR errors"""

    exit_code = 1


class ConfigError(VPRError):
    """Unknown key, bad value or violated config invariant"""

    exit_code = 2


class InputError(VPRError):
    """Missing, unreadable or malformed input files and empty datasets"""

    exit_code = 3


class ShapeError(VPRError, ValueError):
    """Tensor, layer or descriptor shapes that do not fit together"""

    exit_code = 4

    @classmethod
    def mismatch(cls, what: str, expected: Sequence[int], got: Sequence[int]) -> "ShapeError":
        return cls(f"{what}: expected shape {tuple(expected)}, got {tuple(got)}")


class ModelFormatError(VPRError):
    """SPDN model file could not be decoded"""

    exit_code = 5


class BadMagicError(ModelFormatError):
    pass


class VersionMismatchError(ModelFormatError):
    pass


class TruncatedFileError(ModelFormatError):
    pass


class ChecksumError(ModelFormatError):
    pass


class DescriptorFormatError(VPRError):
    """SPDD descriptor file could not be decoded"""

    exit_code = 5


class TrainingDivergedError(VPRError):
    """Loss became NaN or infinite"""

    exit_code = 6

    def __init__(self, iteration: int, loss: Optional[float] = None):
        self.iteration = iteration
        self.loss = loss
        super().__init__(f"non-finite loss {loss} at iteration {iteration}")


class EvaluationError(VPRError):
    """Evaluation inputs are inconsistent (e.g. no query has ground truth)"""

    exit_code = 7
