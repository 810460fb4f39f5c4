"""
Domain errors shared by every motionbench app
"""


class MotionBenchError(Exception):
    """Base class for motionbench failures"""


class ShapeError(MotionBenchError, ValueError):
    """Tensor extents do not satisfy an operation's contract"""

    def __init__(self, message, expected=None, actual=None):
        if expected is not None or actual is not None:
            message = f"{message} (expected {expected}, got {actual})"
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class ConfigError(MotionBenchError, ValueError):
    """Invalid or unknown configuration value"""


class ArchiveError(MotionBenchError, ValueError):
    """Malformed dataset archive"""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} at byte offset {offset}"
        super().__init__(message)
        self.offset = offset


class CheckpointError(MotionBenchError, ValueError):
    """Malformed or incompatible checkpoint file"""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} at byte offset {offset}"
        super().__init__(message)
        self.offset = offset


class TapeError(MotionBenchError, RuntimeError):
    """Misuse of a differentiation tape"""


class GradientCheckError(MotionBenchError, ArithmeticError):
    """Non-finite value met while probing gradients"""

    def __init__(self, message, index=None):
        if index is not None:
            message = f"{message} at coordinate {index}"
        super().__init__(message)
        self.index = index


class TrainingAborted(MotionBenchError, RuntimeError):
    """Training stopped on a non-finite loss"""

    def __init__(self, message, epoch=None, batch=None):
        super().__init__(f"{message} (epoch {epoch}, batch {batch})")
        self.epoch = epoch
        self.batch = batch


class LabelError(MotionBenchError, ValueError):
    """Class label outside [0, M)"""
