"""Exception hierarchy shared by every module."""


class TreelocError(Exception):
    """Base class for all errors raised by treeloc."""


class InvalidInput(TreelocError, ValueError):
    """Malformed input or a violated precondition."""


class BudgetExceeded(TreelocError):
    """A search or construction needed more depth, arity or time than allowed.

    ``best`` carries the best partial answer when one exists (for example an
    upper bound found before the search gave up).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NotSkeletal(TreelocError):
    """The tree is not a perfect k-branching tree."""


class HypothesisFailed(TreelocError):
    """The grouped-extraction hypothesis does not hold.

    ``violation`` holds the offending witness.
    """

    def __init__(self, message, violation=None):
        super().__init__(message)
        self.violation = violation


class Undecided(TreelocError):
    """A decided name does not decide enough output letters."""


class VerificationFailed(TreelocError):
    """A checked invariant failed."""
