"""Exception types raised across the package."""


class KBoundError(Exception):
    """Base class for all errors raised by kbound."""


class ArityMismatch(KBoundError):
    pass


class ArityConflict(KBoundError):
    pass


class UnknownPredicate(KBoundError):
    pass


class InvalidRule(KBoundError):
    pass


class NotASubset(KBoundError):
    pass


class SupportNotPresent(KBoundError):
    pass


class DuplicateTrigger(KBoundError):
    pass


class AtomNotInDerivation(KBoundError):
    pass


class NotTerminating(KBoundError):
    pass


class EmptyRuleset(KBoundError):
    pass


class InvalidQuery(KBoundError):
    pass


class BudgetExceeded(KBoundError):
    """A search ran out of factbases, derivations or time."""


class InvalidDerivation(KBoundError):
    """A replayed trigger sequence is not a derivation of the requested variant."""

    def __init__(self, index: int, reason: str):
        super().__init__(f"step {index}: {reason}")
        self.index = index
        self.reason = reason


class ParseError(KBoundError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
