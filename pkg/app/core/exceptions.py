"""
Domain errors.

Every error carries an ``exit_code`` the CLI hands back to the shell, the same way the
web layer used to map failures onto HTTP status codes. All of them are ``ValueError``
subclasses so library callers can catch the builtin.
"""


class GltError(ValueError):
    exit_code: int = 1


# --- Argument errors (exit 2) ---
class ArgumentError(GltError):
    exit_code = 2


class InvalidSpec(ArgumentError):
    pass


class InvalidConfig(ArgumentError):
    pass


class InvalidOrder(ArgumentError):
    pass


class InvalidRate(ArgumentError):
    pass


class InvalidFrequency(ArgumentError):
    pass


class InvalidDensity(ArgumentError):
    pass


class UnknownRun(ArgumentError):
    pass


# --- Data errors (exit 3) ---
class DataError(GltError):
    exit_code = 3


class ZeroVarianceChannel(DataError):
    def __init__(self, channel: int):
        super().__init__(f"Channel {channel} has zero standard deviation; PCC is undefined.")
        self.channel = channel


class DimensionMismatch(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class OffSphereCoordinate(DataError):
    pass


class IsolatedNode(DataError):
    def __init__(self, node: int):
        super().__init__(f"Node {node} has zero degree; D^-1/2 is undefined in strict mode.")
        self.node = node


class AsymmetricInput(DataError):
    pass


class TruncatedFile(DataError):
    pass


class BadMagic(DataError):
    pass


class InconsistentHeader(DataError):
    pass


class MissingAnnotation(DataError):
    pass


class EmptyInput(DataError):
    pass


class EmptySplit(DataError):
    pass


class DegenerateSplit(DataError):
    pass


class MissingSnapshot(DataError):
    pass


class EmptyMask(DataError):
    pass


class BatchTooSmall(DataError):
    pass


class InvalidLabel(DataError):
    pass


# --- Numeric failures (exit 4) ---
class NumericError(GltError):
    exit_code = 4


class NonFiniteValue(NumericError):
    pass


class NonFiniteLoss(NumericError):
    pass
