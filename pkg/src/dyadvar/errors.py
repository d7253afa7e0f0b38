class ArgumentError(ValueError):
    """An argument is outside the domain of the operation."""


class TruncationError(ArgumentError):
    """The index window is too narrow for the exact tail formula."""


class PreconditionError(ArgumentError):
    """Inputs do not satisfy the configuration a closed form needs."""
