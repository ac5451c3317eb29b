"""Exception types shared across the package."""


class TreecastError(Exception):
    """Base class for all treecast errors."""


class DomainError(TreecastError, ValueError):
    """A parameter or input lies outside the mathematically valid domain."""


class ResourceBudgetError(TreecastError, RuntimeError):
    """An exact computation would exceed its configured size budget."""
