"""Exception hierarchy shared by every analysis module."""


class HessPlusError(Exception):
    """Base class for all library errors."""


class DimensionError(HessPlusError, ValueError):
    pass


class DomainError(HessPlusError, ValueError):
    """An outer map was evaluated outside the interval it is defined on."""


class PreconditionError(HessPlusError, ValueError):
    pass


class FamilyConstraintError(PreconditionError):
    """A family spec violates one of its construction clauses."""

    def __init__(self, clause, message=None):
        self.clause = clause
        super().__init__(message or f"family constraint violated: {clause}")


class BracketError(HessPlusError):
    """Level bisection could not be started or its verdicts were not monotone."""


class EmptyComplementError(HessPlusError):
    pass


class ParseError(HessPlusError, ValueError):
    """Raised with the offending position so callers can print a caret."""

    def __init__(self, message, text="", pos=0):
        self.text = text
        self.pos = pos
        self.message = message
        super().__init__(f"{message} at position {pos}")

    def annotated(self):
        return f"{self.text}\n{' ' * self.pos}^\nerror: {self.message}"
