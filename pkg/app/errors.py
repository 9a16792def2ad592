"""
Error types - for when the numbers stop adding up.

Every failure the CLI can surface maps to an exit code, so shell scripts
driving long sweeps can tell a typo from a corrupt dataset from a model
that blew up halfway through epoch 7.
"""


class IESTError(Exception):
    """Base class for everything we raise on purpose."""

    exit_code = 1


class UsageError(IESTError):
    """The command line asked for something that doesn't make sense."""

    exit_code = 2


class ConfigError(IESTError):
    """
    Config file problems: unknown keys, bad types, impossible values.

    Unknown keys are errors, not warnings. A sweep that silently ignores
    `dropout_wrod = 0.3` is a sweep that wastes a night.
    """

    exit_code = 2


class DataFormatError(IESTError):
    """A dataset, checkpoint or cache file isn't what it claims to be."""

    exit_code = 3


class NumericalError(IESTError):
    """Training produced a non-finite loss. We stop instead of pretending."""

    exit_code = 4
