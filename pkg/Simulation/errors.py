"""Exception types raised by the Simulation package.

Each class also derives from the builtin that best matches its category, so
callers that only know about ValueError / IndexError keep working.
"""


class SimulationError(Exception):
    """Base class for every error raised by the simulation library."""


class SizeError(SimulationError, ValueError):
    """Qubit count outside the supported range."""


class MomentumIndexError(SimulationError, IndexError):
    """Momentum value outside the window (-N/2, N/2]."""


class ArgumentError(SimulationError, ValueError):
    """Invalid qubit labels or mismatched dimensions."""


class DomainError(SimulationError, ValueError):
    """Input outside the mathematical domain of an operation."""


class BasisError(SimulationError, RuntimeError):
    """State is tagged with the wrong conjugate basis for the operation."""


class DegenerateTraceError(SimulationError, ValueError):
    """Partial trace requested over an empty set of traced qubits."""


class NumericalDegradationError(SimulationError, ArithmeticError):
    """A density matrix or spectrum violates its invariants beyond the numerical floor."""


class InsufficientSupportError(SimulationError, ValueError):
    """Too few usable points for a fit."""


class WindowError(SimulationError, ValueError):
    """Time series too short for the requested averaging window."""
