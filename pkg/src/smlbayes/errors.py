"""Exception types shared across the package."""


class SmlbayesError(Exception):
    """Base class for all errors raised by this package."""


class DataError(SmlbayesError):
    """A problem with input data: unreadable CSV, bad cell, degenerate table."""


class ConfigError(SmlbayesError):
    """A problem with configuration: bad flag value, impossible classifier spec."""
