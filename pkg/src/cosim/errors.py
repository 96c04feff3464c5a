"""Exception types shared across the package."""

from __future__ import annotations


class CosimError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(CosimError):
    """A scenario, graph, tolerance or run configuration is invalid."""


class DivergenceError(CosimError):
    """A simulation produced a non-finite or absurdly large state.

    Carries the simulation time at which the failure was detected and,
    when raised from a master loop, the records produced up to that point.
    """

    def __init__(self, message: str, time: float | None = None, records: list | None = None):
        super().__init__(message)
        self.time = time
        self.records = records if records is not None else []


class EstimatorError(CosimError):
    """An error estimator could not produce a usable estimate."""


class ControllerError(CosimError):
    """The step size controller received unusable input."""
