"""Exception types raised across the package."""


class RotGaussError(Exception):
    """Base class for all package errors."""


class NumericError(RotGaussError):
    """Invalid numeric input (degenerate geometry, non-SPD covariance)."""


class DegenerateBox(NumericError):
    """A box edge is shorter than ``EPS_MIN``."""


class NonSPD(NumericError):
    """A covariance matrix is not symmetric positive definite."""


class NotHorizontal(RotGaussError):
    """A horizontal-only closed form was given a rotated box."""


class InvalidConfig(RotGaussError):
    pass


class ModeMismatch(RotGaussError):
    """Two offset encodings use different angle modes."""


class DivergedFit(NumericError):
    pass


class EmptyGrid(RotGaussError):
    pass


class ZeroHeading(NumericError):
    """Heading vector magnitude is too small to decode an angle."""
