"""Exceptions raised by the registration pipeline."""


class RegistrationError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateSample(RegistrationError):
    """Selected points are collinear or coincident; the fit is undetermined."""


class CoincidentPoints(RegistrationError):
    """Two points of a correspondence set share a location."""


class EmptyRow(RegistrationError):
    """A log-ratio row has no finite off-diagonal entry."""


class InsufficientInliers(RegistrationError):
    """The solver terminated with fewer than three inliers."""


class BadSpec(RegistrationError):
    """A scene specification cannot produce a valid scene."""


class ParseError(RegistrationError):
    """An input file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
