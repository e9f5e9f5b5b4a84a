"""Exception hierarchy shared by the numerical core and the command line."""

from typing import Any, Optional


class VesimError(Exception):
    """Base error; ``detail`` is the human-readable message and ``exit_code``
    the status the CLI reports."""

    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class InvalidInputError(VesimError):
    pass


class NearSingularMisuseError(InvalidInputError):
    pass


class GeometryError(VesimError):
    pass


class AssemblyError(VesimError):
    pass


class SolverFailure(VesimError):
    def __init__(self, detail: str, best_iterate: Any = None, residual: float = float("nan")):
        super().__init__(detail)
        self.best_iterate = best_iterate
        self.residual = residual


class ConfigError(VesimError):
    exit_code = 2

    def __init__(self, detail: str, key: Optional[str] = None):
        super().__init__(detail)
        self.key = key


class SimulationAborted(VesimError):
    def __init__(self, detail: str, diagnostics: Any = None, suspension: Any = None):
        super().__init__(detail)
        self.diagnostics = diagnostics
        self.suspension = suspension


class OutputError(VesimError):
    def __init__(self, detail: str, path: Optional[str] = None):
        super().__init__(detail)
        self.path = path
