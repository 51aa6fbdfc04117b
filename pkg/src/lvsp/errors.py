"""Exception types shared across the package."""


class LvspError(Exception):
    """Base class for all errors raised by lvsp."""


class ConfigurationError(LvspError, ValueError):
    """Unknown semiring name or otherwise invalid configuration."""


class PartialOperationError(LvspError, ValueError):
    """A partial tensor operation was applied outside its domain (shape clash)."""


class UnsupportedOperation(LvspError):
    """The operation needs a semiring capability the bound semiring lacks."""


class GrammarSyntaxError(LvspError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class WellDefinednessError(LvspError, ValueError):
    """Rule weights whose shapes do not follow the dimension assignment."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = [f"  {v}" for v in self.violations]
        super().__init__("weights are not well defined:\n" + "\n".join(lines))


class DescriptionMismatch(LvspError, ValueError):
    """Grammar is not in the form an item-based description requires."""


class SchedulingError(LvspError, RuntimeError):
    """An item value was read before it had been computed."""


class UndefinedPosterior(LvspError, ArithmeticError):
    """Sentence probability is zero, so posteriors cannot be normalized."""


class UnknownTerminal(LvspError, ValueError):
    """A sentence token that no rule of the grammar produces."""


class NonConvergenceWarning(UserWarning):
    """Fixpoint iteration hit its generation limit before converging."""
