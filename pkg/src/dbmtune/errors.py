class ContractError(ValueError):
    """Raised when an operation is called with arguments violating its contract."""


class DataFormatError(ValueError):
    """A dataset file could not be parsed."""


class NoEffectiveSamples(ValueError):
    """All paired differences are zero, so the signed-rank test is undefined."""
