"""Exceptions shared across modules."""


class ResourceCapError(RuntimeError):
    """A configured budget (steps, doublings, samples, measurements) was exhausted.

    ``partial`` carries whatever was computed before the cap was hit.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
