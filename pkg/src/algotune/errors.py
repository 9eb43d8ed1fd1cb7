"""Exception types shared across the package."""


class AlgotuneError(Exception):
    """Base class for all package errors."""


class DomainError(AlgotuneError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class ParseError(AlgotuneError, ValueError):
    """An instance, dual or config file could not be decoded."""


class UnsupportedKindError(ParseError):
    """A serialized record names an instance kind we do not know."""


class ResourceError(AlgotuneError, RuntimeError):
    """A hard cap (pieces, subset enumeration, steps) was exceeded."""


class InternalError(AlgotuneError, RuntimeError):
    """An algorithmic invariant was violated at runtime."""
