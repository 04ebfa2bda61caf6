"""Exception hierarchy shared by all modules."""


class MatchkitError(Exception):
    """Base class for every error raised by matchkit."""


class InputError(MatchkitError, ValueError):
    """Malformed or inadmissible input (unknown vertex, bad word, bad file)."""


class UnsupportedPolicyError(MatchkitError):
    """The operation is not defined for the requested policy."""


class DivergenceError(MatchkitError):
    """A series that only converges under the stability condition was requested
    while that condition fails."""


class GuardError(MatchkitError):
    """A size guard on an exhaustive enumeration was exceeded."""


class CapExceededError(MatchkitError):
    """A bounded search ran out of budget without a result."""

    def __init__(self, message, cap=None):
        super().__init__(message)
        self.cap = cap


class NoSampleError(MatchkitError):
    """The perfect sampler reached its horizon cap without a certificate."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
