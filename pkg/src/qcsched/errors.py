"""Exception types shared across the package."""


class QcschedError(Exception):
    """Base class for all package-specific errors."""


class InvalidCircuitError(QcschedError):
    """Raised when a circuit violates structural constraints."""


class CutInfeasibleError(QcschedError):
    """Raised when no balanced bipartition stays within the crossing budget."""


class CapacityError(QcschedError):
    """Raised when a circuit needs more qubits than the target provides."""


class TopologyError(QcschedError):
    """Raised on malformed coupling maps (disconnected, self-loops, bad indices)."""


class InfeasibleJobError(QcschedError):
    """Raised when an unfiltered infeasible job reaches the optimizer."""


class RegressionFitError(QcschedError):
    """Raised when the normal equations stay rank-deficient despite damping."""


class NoFeasiblePlanError(QcschedError):
    """Raised when a circuit fits no template QPU, cut or uncut."""


class NoFeasibleNodeError(QcschedError):
    """Raised when no classical node passes the filter stage."""


class ConfigError(QcschedError):
    """Raised on malformed or inconsistent configuration input."""


class SimulationError(QcschedError):
    """Raised when the event loop detects a broken mid-run contract."""
