"""Exception and warning types shared across the package."""


class GfRuinError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GfRuinError):
    """Malformed or inconsistent run configuration."""


class NegativeCoefficient(GfRuinError):
    """A generated weight coefficient is negative beyond round-off tolerance."""


class ZeroG0(GfRuinError):
    """The leading weight coefficient vanishes."""


class DriftViolation(GfRuinError):
    """Partial sums of the weights stop growing within the search budget."""


class DivergentNorm(GfRuinError):
    """The requested sequence norm does not converge."""


class DivergentIntegral(GfRuinError):
    """The integrated log-MGF is infinite for the given exponent/model pair."""


class WrongRegime(GfRuinError):
    """The requested solver does not apply to this (weights, innovations) pair."""


class NonFiniteMGF(GfRuinError):
    """Moment generating function quadrature failed to converge."""


class OutOfRange(GfRuinError):
    """Argument outside the domain of a mean function or its inverse."""


class RejectionBudgetExceeded(GfRuinError):
    """Acceptance-rejection sampling exhausted its trial budget."""


class NoRoot(GfRuinError):
    """A scalar equation has no root in the admissible range."""


class NoHits(GfRuinError):
    """Diagnostics requested but no simulated path crossed the threshold."""


class NonUniqueMinimumWarning(UserWarning):
    """The ruin-time objective is nearly flat around its minimum."""


class TiltCapWarning(UserWarning):
    """Schedule tilts were capped to keep sampling budgets bounded."""


class TruncationWarning(UserWarning):
    """A non-negligible share of crossings occurred near the horizon end."""


class ZeroHitsWarning(UserWarning):
    """A crude estimate produced no crossings at the replication budget."""


class WeightOverflowWarning(UserWarning):
    """Importance weights overflowed and replications were dropped."""
