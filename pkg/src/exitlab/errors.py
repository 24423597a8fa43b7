"""Exception types shared across the package."""


class ExitlabError(Exception):
    """Base class for errors raised by this package."""


class DomainError(ExitlabError, ValueError):
    """An argument lies outside its mathematically valid range."""


class ConfigError(ExitlabError, ValueError):
    """An experiment or channel description is malformed."""


class UnsupportedError(ExitlabError):
    """The operation is not defined for this channel family or code class."""


class EnumerationLimitError(ExitlabError):
    """An exact computation would exceed the enumeration guard."""


class EvidenceContradictionError(ExitlabError):
    """The observed data has probability zero under every hypothesis."""


class InsufficientDataError(ExitlabError):
    """Too few samples to form the requested estimate."""


class InvariantViolation(ExitlabError):
    """A computed result violates one of its declared invariants."""
