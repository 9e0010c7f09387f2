"""Exception types raised across the package."""


class HypersslError(Exception):
    """Base class for all package errors."""


class InvalidNode(HypersslError, ValueError):
    pass


class InvalidWeight(HypersslError, ValueError):
    pass


class DimensionError(HypersslError, ValueError):
    pass


class MissingLabel(HypersslError, ValueError):
    pass


class EmptyObservation(HypersslError, ValueError):
    pass


class EmptyClassSample(HypersslError, ValueError):
    pass


class WrongMode(HypersslError, ValueError):
    """An operation valid only for a specific exponent was called with another."""


class Undefined(HypersslError, ValueError):
    """A quantity has no meaningful value (e.g. accuracy with no unlabeled nodes)."""


class ParseError(HypersslError):
    """Malformed input file; the message names the file and line."""

    def __init__(self, path, line, msg):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {msg}")
