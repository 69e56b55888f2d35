"""Exception types shared across the package.

All of them derive from ``ValueError`` so callers can catch bad input
generically; the CLI maps them to exit code 1.
"""


class ShapeError(ValueError):
    """Array shapes are incompatible with the requested operation."""


class ConfigError(ValueError):
    """A model, run or manifest configuration is invalid."""


class ContractError(ValueError):
    """A precondition of an operation does not hold."""


class SchemaError(ValueError):
    """A file does not match its expected column or key layout."""


class ParseError(ValueError):
    """A cell or value could not be parsed."""
