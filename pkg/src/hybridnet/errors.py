"""Exception hierarchy shared by all hybridnet modules."""


class HybridNetError(Exception):
    """Base class for errors raised by hybridnet."""


class InvalidParameterError(HybridNetError, ValueError):
    """A parameter violates its documented domain."""


class DomainError(InvalidParameterError):
    """A special function or closed form was evaluated outside its domain."""


class DivergentIntegralError(DomainError):
    """The requested mean power is infinite (MPT path-loss exponent <= 2)."""


class SingularityError(HybridNetError, ArithmeticError):
    """A zero link distance reached a path gain without a short-range cutoff."""


class SamplingError(HybridNetError, RuntimeError):
    """Mobile placement ran out of its candidate budget.

    Attributes:
        n_cells: number of BS cells in the failing realization.
        failed_cell: index of the first cell that could not be filled.
        budget: candidate budget per cell.
    """

    def __init__(self, message, *, n_cells, failed_cell, budget):
        super().__init__(message)
        self.n_cells = n_cells
        self.failed_cell = failed_cell
        self.budget = budget


class NoBeaconError(HybridNetError):
    """Directed MPT was requested on a realization without power beacons."""


class InfeasibleEpsilonError(HybridNetError):
    """The target outage level lies at or below the interference-limited floor."""

    def __init__(self, message, *, epsilon, floor):
        super().__init__(message)
        self.epsilon = epsilon
        self.floor = floor


class BoundInapplicableError(HybridNetError):
    """The nearest-beacon power-outage bound requires q*z*nu**-beta >= p."""
