"""Exception hierarchy.

Every domain failure derives from :class:`HmmError`; the CLI maps these to
exit code 1 and prints the message, so messages name the violated condition.
"""

from __future__ import annotations

from fractions import Fraction


class HmmError(Exception):
    """Base class for all domain errors raised by this package."""


class ModelFormatError(HmmError):
    pass


class NonStochastic(HmmError):
    def __init__(self, state, deficit: Fraction):
        self.state = state
        self.deficit = deficit
        super().__init__(
            f"row {state!r} is not stochastic: row sum is {1 - deficit} (deficit {deficit})"
        )


class NegativeEntry(HmmError):
    def __init__(self, letter, row, col, value):
        self.letter, self.row, self.col, self.value = letter, row, col, value
        super().__init__(f"negative entry {value} in transitions[{letter!r}][{row!r}][{col!r}]")


class UnknownSymbol(HmmError):
    def __init__(self, symbol, kind="symbol"):
        self.symbol = symbol
        super().__init__(f"unknown {kind} {symbol!r}")


class InvalidDistribution(HmmError):
    pass


class Singular(HmmError):
    pass


class NotIrreducible(HmmError):
    pass


class TargetNotClosed(HmmError):
    pass


class CapExceeded(HmmError):
    pass


class BadErrorBounds(HmmError):
    pass


class ImpossibleObservation(HmmError):
    def __init__(self, letter, step):
        self.letter, self.step = letter, step
        super().__init__(f"letter {letter!r} at step {step} has probability 0 under the denominator")


class HitNegInfinity(HmmError):
    pass


class NodeCapExceeded(HmmError):
    pass


class ClassificationIncomplete(HmmError):
    pass


class AlphabetMismatch(HmmError):
    pass


class AllTrajectoriesDead(HmmError):
    pass


class NotDeterministic(HmmError):
    pass


class FactorizationCapExceeded(HmmError):
    pass


class EmptyAfterTrimming(HmmError):
    pass
