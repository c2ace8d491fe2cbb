"""Exception hierarchy. Every error carries a short ``category`` used by the CLI
to report a machine-readable failure class."""


class LeonrsError(Exception):
    category = "error"

    def __init__(self, message, *, scenario_hash=None):
        self.scenario_hash = scenario_hash
        if scenario_hash is not None:
            message = f"{message} [scenario {scenario_hash}]"
        super().__init__(message)


class ConfigurationError(LeonrsError, ValueError):
    category = "config"

    def __init__(self, message, *, problems=None, scenario_hash=None):
        self.problems = list(problems or [])
        super().__init__(message, scenario_hash=scenario_hash)


class GeometryError(LeonrsError, ValueError):
    category = "geometry"


class DegenerateFrameError(GeometryError):
    pass


class TargetBehindArrayError(GeometryError):
    pass


class VisibilityError(GeometryError):
    category = "visibility"


class WindowError(LeonrsError, ValueError):
    category = "window"


class WeightingError(LeonrsError, ValueError):
    category = "weighting"


class UnobservableError(LeonrsError, ArithmeticError):
    """A Fisher information block (or normal matrix) is singular."""

    category = "unobservable"

    def __init__(self, message, *, detail=None, scenario_hash=None):
        self.detail = detail
        super().__init__(message, scenario_hash=scenario_hash)


class NoSignalError(LeonrsError, ValueError):
    category = "no-signal"


class SolverError(LeonrsError, RuntimeError):
    category = "solver"

    def __init__(self, message, *, status=None, scenario_hash=None):
        self.status = status
        super().__init__(message, scenario_hash=scenario_hash)


class InfeasibleError(SolverError):
    category = "infeasible"

    def __init__(self, message, *, status="infeasible", binding=None, scenario_hash=None):
        self.binding = binding
        super().__init__(message, status=status, scenario_hash=scenario_hash)


class UnboundedError(SolverError):
    category = "unbounded"
