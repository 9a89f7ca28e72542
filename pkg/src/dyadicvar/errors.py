"""Exception hierarchy.

Contract violations (bad inputs, malformed files) and invariant failures
are kept distinct so the CLI can map them to exit codes 2 and 1.
"""


class DyadicVarError(Exception):
    """Base class for all library errors."""


class ParseError(DyadicVarError):
    """Malformed textual input (rationals, words, files)."""


class ParameterError(DyadicVarError):
    """A parameter is outside its documented range."""


class ContractError(DyadicVarError):
    """A documented precondition does not hold."""


class DegeneratePairError(ContractError):
    """Slope requested at a pair with x == y."""


class EmptyIntervalError(ContractError):
    """Interval operation with x >= y."""


class DepthError(ContractError):
    """Requested resolution exceeds the table or tree depth."""


class InsufficientPrefixError(ContractError):
    """Requested depth exceeds the available bit prefix."""


class IncompleteTableError(ContractError):
    """A tree table is missing entries below its declared depth."""


class UnfairTableError(ContractError):
    """The fair-split identity M(s0) + M(s1) = 2 M(s) fails somewhere."""

    def __init__(self, violations):
        self.violations = list(violations)
        first = self.violations[0] if self.violations else None
        super().__init__(f"fairness violated at {len(self.violations)} word(s), first: {first}")


class StagingError(ContractError):
    """A staged family is not monotone or has mismatched depths."""


class InvalidBoundsError(ContractError):
    """Declared value bounds are violated by the table."""


class MachineError(ContractError):
    """Prefix-free machine table is malformed (not prefix-free, bad outputs)."""


class NonAdditiveOracleError(ContractError):
    """Interval oracle is not additive on the requested grid."""

    def __init__(self, message, worst_residual=None):
        super().__init__(message)
        self.worst_residual = worst_residual


class ScheduleError(ContractError):
    """A stage list violates its form constraints."""


class NonAtomicWitnessError(ContractError):
    """No level witnesses the required smallness of a stage within the cap."""


class PreconditionError(ContractError):
    """A verified precondition (e.g. the savings property) fails."""


class DimensionMismatchError(ContractError):
    """Cube-set operands live in different dimensions."""


class AmbiguityError(ContractError):
    """A point with a dyadic coordinate cannot be classified."""


class BoundaryError(DyadicVarError):
    """A point sits on a cube face and has no interior classification."""


class ClassError(ContractError):
    """The function class does not support the requested operation."""
