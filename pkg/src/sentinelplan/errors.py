"""Shared exception types for the planner."""

from __future__ import annotations


class PlannerError(Exception):
    """Base class for every error raised by this package."""


class InvalidMeshError(PlannerError):
    pass


class EmptyMeshError(PlannerError):
    pass


class UnknownVertexError(PlannerError):
    pass


class ScenarioParseError(PlannerError):
    """A scenario file could not be parsed; names the offending field."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class UnsupportedVersionError(ScenarioParseError):
    pass


class GenerationFailedError(PlannerError):
    pass


class ConfigError(PlannerError):
    pass


class InfeasibleByReductionError(PlannerError):
    pass


class InvalidSolutionError(PlannerError):
    pass


class InfeasibleError(PlannerError):
    pass


class HeuristicInfeasibleError(InfeasibleError):
    pass


class ResourceLimitError(PlannerError):
    """A node or time limit was hit; carries the best incumbent, if any."""

    def __init__(self, message: str, incumbent=None):
        super().__init__(message)
        self.incumbent = incumbent


class OracleCapError(PlannerError):
    pass


class ExternalSolverError(PlannerError):
    pass
