"""Exception types shared across the package."""


class FormatError(ValueError):
    """A problem, set, or OCP file could not be parsed.

    ``path`` is a JSON-path-like location (``$.K.factors[2].radius``).
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class CertificateError(RuntimeError):
    """A reference solution failed its KKT certificate."""

    def __init__(self, message: str, residuals: dict | None = None):
        self.residuals = dict(residuals or {})
        super().__init__(message)
