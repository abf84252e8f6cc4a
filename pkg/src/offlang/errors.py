"""Exception types raised across the toolkit.

Parse-time errors carry the 1-based line number of the offending row so
problems in hand-edited TSV files can be located directly.
"""


class OfflangError(Exception):
    """Base class for all toolkit errors."""


class ParseError(OfflangError):
    """A file-level problem tied to a specific line."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        prefix = ""
        if path is not None:
            prefix += f"{path}:"
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)


class MissingColumn(ParseError):
    pass


class MalformedRow(ParseError):
    pass


class DuplicateId(ParseError):
    pass


class EmptyText(ParseError):
    pass


class OutOfRangeScore(ParseError):
    pass


class NonStochasticVector(ParseError):
    pass


class SchemaVersionMismatch(ParseError):
    pass


class UnmatchedId(OfflangError):
    pass


class UnknownLabel(OfflangError):
    pass


class IoFailure(OfflangError):
    pass


class OutOfRange(OfflangError):
    """A soft score outside its documented domain."""


class UnlabeledRecord(OfflangError):
    pass


class EmptyClass(OfflangError):
    pass


class EmptyCorpus(OfflangError):
    pass


class EmptyDataset(OfflangError):
    pass


class SingleClassData(OfflangError):
    pass


class DimensionMismatch(OfflangError):
    pass


class LengthMismatch(OfflangError):
    pass


class EmptyList(OfflangError):
    pass


class IncompatibleDims(OfflangError):
    pass


class TokenizerMismatch(OfflangError):
    pass


class IdCollision(OfflangError):
    pass


class TranslationFailure(OfflangError):
    pass


class RegistryUnavailable(OfflangError):
    """A pretrained-encoder identifier could not be resolved."""


class NonConvergenceWarning(UserWarning):
    """Optimizer hit its iteration cap; the fitted model is still usable."""
