"""Shared exception types.

Exit-code mapping used by the CLI: GuardError -> 3, config/usage errors -> 2.
"""


class GuardError(RuntimeError):
    """A size/enumeration guard was exceeded; the check refused to run."""


class EnumerationTooLargeError(GuardError):
    """Up-set enumeration would exceed the configured cap."""


class EmptyEventError(ValueError):
    """Conditioning event has zero probability."""


class DegenerateSupportError(ValueError):
    """Operation requires a non-degenerate support."""


class MarginalMismatchError(ValueError):
    """Comparison requires identical marginals."""


class ConfigError(ValueError):
    """Malformed experiment configuration."""
