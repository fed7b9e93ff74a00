"""
Exceptions raised by the lab.
"""


class LookalikeError(Exception):
    """Base class for lab errors."""


class ConfigError(LookalikeError, ValueError):
    """Invalid parameter, config file, or dimension mismatch."""


class EmptyClusterError(ConfigError):
    """A cluster has no members."""

    def __init__(self, cluster):
        self.cluster = cluster
        super().__init__(f'cluster {cluster} is empty')


class NumericalError(LookalikeError, ArithmeticError):
    """Non-finite input, degenerate draw, or a violated numerical check."""


class PoleError(LookalikeError, ArithmeticError):
    """An asymptotic formula was evaluated too close to an interpolation threshold."""
