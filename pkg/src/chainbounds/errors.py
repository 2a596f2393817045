"""Error types shared by every module.

Each error carries a short machine-readable ``code``; the CLI maps codes to
exit statuses.
"""


class ChainBoundsError(Exception):
    """Base class. ``code`` is a stable identifier such as ``SUM_NOT_ONE``."""

    code = "ERROR"

    def __init__(self, code: str | None = None, message: str = ""):
        if code is not None:
            self.code = code
        self.message = message
        super().__init__(f"{self.code}: {message}" if message else self.code)


class DistributionError(ChainBoundsError, ValueError):
    """Invalid probability vectors, joints or conditioning."""


class DivergenceError(ChainBoundsError, ValueError):
    """Invalid divergence arguments (exponents, supports, intervals)."""


class NetError(ChainBoundsError, ValueError):
    """Net construction, projection or axiom violations."""


class BoundError(ChainBoundsError, ValueError):
    """Bound assembly failures (missing tail cap, mismatched marginals)."""


class PacBayesError(ChainBoundsError, ValueError):
    """Invalid PAC-Bayes parameters or schedules."""


class ConfigError(ChainBoundsError, ValueError):
    """Malformed input files or inconsistent CLI configuration."""


class ToyModelError(ChainBoundsError, ValueError):
    """Invalid toy-model parameters."""
