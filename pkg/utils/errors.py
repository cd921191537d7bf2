"""Exception hierarchy shared by the solvers, the CLI and the HTTP layer."""


class SimulationError(Exception):
    """Base class for every failure raised by this package."""

    exit_code = 2


class ConfigError(SimulationError, ValueError):
    exit_code = 1


class SingularEvaluationError(SimulationError, ValueError):
    """Interaction evaluated at zero separation without softening."""


class DivergentMatrixElementError(SimulationError, ValueError):
    """Requested interaction matrix element does not exist (1D even sector, bare Coulomb)."""


class ZeroNormError(SimulationError):
    pass


class ConvergenceError(SimulationError):
    pass


class BasisTruncationError(SimulationError):
    pass


class NumericalFailure(SimulationError):
    pass


class MissingRunsError(SimulationError):
    exit_code = 1

    def __init__(self, figure_id, required):
        self.figure_id = figure_id
        self.required = list(required)
        super().__init__(f"Figure {figure_id} needs runs: {', '.join(self.required)}")


class RecordStoreUnavailable(SimulationError):
    """Run-record catalog requested while no database is connected."""

    exit_code = 1
