"""Exception types raised across the package."""


class DefensorError(Exception):
    """Base class for all errors raised by defensor."""


class KappaTooLarge(DefensorError, ValueError):
    """The supermartingale exponent exceeds the game's mixability rate."""

    def __init__(self, kappa, eta):
        super().__init__(f"kappa too large: kappa={kappa!r} exceeds game eta={eta!r}")
        self.kappa = kappa
        self.eta = eta


class ContinuityViolation(DefensorError, RuntimeError):
    """Bisection ended at a point where an increment still exceeds tolerance.

    Usually means the advice is discontinuous or oscillates faster than the
    bisection tolerance resolves.
    """


class NonConstantAdvice(DefensorError, ValueError):
    """The Aggregating Algorithm was handed a second-guessing expert."""

    def __init__(self, msg="AA requires constant advice"):
        super().__init__(msg)


class SubstitutionFailure(DefensorError, RuntimeError):
    """No prediction dominates the AA generalized prediction."""


class AllWeightsZero(DefensorError, RuntimeError):
    """Every expert has infinite cumulative loss."""


class NotMixable(DefensorError, ValueError):
    """No learning rate in the search bracket passes the mixability test."""


class MonitorViolation(DefensorError, RuntimeError):
    """A runtime bound or supermartingale monitor failed during a run.

    ``trace`` holds the records up to and including the offending round.
    """

    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace


class ConfigError(DefensorError, ValueError):
    """Malformed strategy, game or run configuration."""
