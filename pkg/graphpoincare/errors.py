"""Error types raised by graphpoincare."""


class PoincareError(Exception):
    """Base class for every error raised by the library."""


class InputError(PoincareError, ValueError):
    """Invalid arguments: unknown vertex, bad parameter, malformed data."""


class WindowError(PoincareError):
    """A finite window cannot answer the query exactly."""


class HaloError(WindowError):
    """A function is undefined on a neighbor needed by a gradient."""


class PreconditionError(PoincareError):
    """A hypothesis of a theorem does not hold for the given instance."""

    def __init__(self, hypothesis: str, message: str | None = None):
        self.hypothesis = hypothesis
        super().__init__(message or f"Hypothesis not satisfied: {hypothesis}")


class SizeError(PoincareError):
    """The exact certifier would have to enumerate too many sign patterns."""


class BudgetError(PoincareError):
    """A window or sweep exceeds a configured memory budget."""

    def __init__(self, budget: str, message: str):
        self.budget = budget
        super().__init__(message)
