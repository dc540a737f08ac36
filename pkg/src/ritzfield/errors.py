"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Inconsistent or invalid configuration (shape mismatch, bad key, bad mode)."""


class DivergedError(RuntimeError):
    """A loss term became non-finite during training.

    ``term`` names the offending contribution; ``partial`` may carry the
    partial training result accumulated before the blow-up.
    """

    def __init__(self, term: str, message: str = "", partial=None):
        super().__init__(message or f"non-finite value in term '{term}'")
        self.term = term
        self.partial = partial
