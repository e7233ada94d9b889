"""Exception hierarchy shared across the toolkit."""


class CpccdError(Exception):
    pass


class EmptyCloud(CpccdError, ValueError):
    """An operation that needs at least one point got an empty cloud."""


class InvalidArgument(CpccdError, ValueError):
    pass


class DomainError(InvalidArgument):
    """A corruption parameter fell outside its allowed domain."""


class FormatError(CpccdError, ValueError):
    """A point cloud or manifest file could not be parsed."""


class IoError(CpccdError, OSError):
    """Missing or unreadable input; ``path`` names the offender."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class ManifestError(CpccdError):
    pass


class Diverged(CpccdError, ArithmeticError):
    """Training produced a non-finite loss."""

    def __init__(self, step, message=None):
        super().__init__(message or f"non-finite loss at step {step}")
        self.step = step
