"""Exception hierarchy shared by every sounder module."""


class SounderError(ValueError):
    """Base class for all sounder errors."""


class InvalidDegreeError(SounderError):
    pass


class InvalidTapsError(SounderError):
    pass


class NonMaximalTapsError(SounderError):
    def __init__(self, degree: int, taps: int, period: int):
        self.degree = degree
        self.taps = taps
        self.period = period
        super().__init__(
            f"taps 0x{taps:x} are not maximal for degree {degree}: "
            f"period {period}, expected {(1 << degree) - 1}"
        )


class InvalidLagError(SounderError):
    pass


class InvalidInputError(SounderError):
    pass


class AliasingRiskError(SounderError):
    pass


class DelayOutOfRangeError(SounderError):
    pass


class InvalidRatesError(SounderError):
    pass


class PreconditionError(SounderError):
    pass


class WrongAxisError(SounderError):
    pass


class ShapeMismatchError(SounderError):
    pass


class ToggleCapacityError(SounderError):
    pass


class UnknownUnitError(SounderError):
    pass


class NonphysicalGeometryError(SounderError):
    pass


class MissingParameterError(SounderError):
    pass


class UnachievableTargetError(SounderError):
    pass


class ConfigError(SounderError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")
