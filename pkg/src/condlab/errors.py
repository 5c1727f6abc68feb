"""Exception hierarchy.

Oracle *failure* (conditioning on a zero-mass set) is a normal return value,
never an exception. Everything here signals misuse or malformed input.
"""


class CondlabError(Exception):
    """Base class for every error raised by condlab."""


class DomainError(CondlabError, ValueError):
    """An index, set or parameter lies outside the mathematical domain."""


class UsageError(CondlabError, ValueError):
    """A call violates an API precondition (set too large, bad epsilon, ...)."""


class DistributionFormatError(DomainError):
    """A distribution file could not be parsed or does not sum to one."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EncodingError(CondlabError, ValueError):
    """A transcript cannot be encoded with the rank/block alphabet."""


class DecodeError(CondlabError, ValueError):
    """A bit message is malformed or inconsistent with the replayed run."""
