"""Exception hierarchy shared by every subpackage."""


class VideoShieldError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ConfigError(VideoShieldError, ValueError):
    exit_code = 2


class InputError(VideoShieldError, ValueError):
    exit_code = 2


class IOFormatError(VideoShieldError, OSError):
    exit_code = 3


class FormatError(IOFormatError):
    """Bad magic, version, or truncated payload in a tensor file."""


class CheckpointError(IOFormatError):
    pass


class FrameImportError(IOFormatError):
    pass


class NumericError(VideoShieldError, ArithmeticError):
    exit_code = 4


class TrainingError(NumericError):
    pass


class AttackError(NumericError):
    pass


class DimensionError(VideoShieldError, ValueError):
    exit_code = 2


class TokenIndexError(VideoShieldError, IndexError):
    exit_code = 2


class LengthError(VideoShieldError, ValueError):
    exit_code = 2


class ContractError(VideoShieldError, ValueError):
    pass


class GraphError(VideoShieldError, ValueError):
    pass


class EmptyTargetError(VideoShieldError, ValueError):
    pass


class SpecError(VideoShieldError, ValueError):
    exit_code = 2
