"""Exception hierarchy shared by all modules."""


class ErodersError(Exception):
    """Base class for every error raised by this package."""


class MissingOffset(ErodersError, KeyError):
    pass


class NotMonotone(ErodersError, ValueError):
    def __init__(self, lower, upper):
        self.lower = lower
        self.upper = upper
        super().__init__(
            f"table is not monotone: f({lower}) = 1 but f({upper}) = 0 although {lower} <= {upper}"
        )


class ConstantFunction(ErodersError, ValueError):
    pass


class InvalidRule(ErodersError, ValueError):
    pass


class InvalidParameters(ErodersError, ValueError):
    pass


class DimensionMismatch(ErodersError, ValueError):
    pass


class SupportMismatch(ErodersError, ValueError):
    pass


class OutOfWindow(ErodersError, ValueError):
    pass


class WindowTooSmall(ErodersError, ValueError):
    pass


class CertificateImpossible(ErodersError):
    """The convex-hull intersection is nonempty, so no eroder certificate exists."""

    def __init__(self, witness):
        self.witness = witness
        super().__init__(f"hull intersection is nonempty; common point {witness}")


class NoCertificateInSearchSpace(ErodersError):
    def __init__(self, message, search_space):
        self.search_space = search_space
        super().__init__(message)


class InvalidCertificate(ErodersError, ValueError):
    pass


class PreconditionFailed(ErodersError, ValueError):
    pass


class InsufficientHits(ErodersError):
    pass
