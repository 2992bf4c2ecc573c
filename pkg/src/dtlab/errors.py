"""Shared exception types."""


class ConfigError(ValueError):
    """Raised when requested parameters violate an operation's preconditions.

    The command line maps this (and argparse errors) to exit code 2,
    distinguishing bad configuration from failed numerical checks.
    """
