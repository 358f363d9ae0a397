"""Exception types shared across the package."""


class LabelCheckError(Exception):
    """Base class for every error raised by labelcheck."""


class UnknownUnit(LabelCheckError):
    """A symbol or unit id has no entry in the inventory."""

    def __init__(self, symbol):
        super().__init__(f"unit not in inventory: {symbol!r}")
        self.symbol = symbol


class BlankInReference(LabelCheckError):
    """A reference token sequence contains the blank unit."""


class PosteriorFormatError(LabelCheckError):
    """Malformed posterior-matrix byte stream."""


class BadMagic(PosteriorFormatError):
    pass


class TruncatedPayload(PosteriorFormatError):
    pass


class DimensionOverflow(PosteriorFormatError):
    pass


class ExplosionGuard(LabelCheckError):
    """An exhaustive enumeration would exceed its configured cap."""


class DimensionMismatch(LabelCheckError):
    """Two objects that must share dimensions do not."""


class RegionTooSmall(LabelCheckError):
    """An image region is smaller than the SSIM window."""


class NoPath(LabelCheckError):
    """No complete decoding path exists (internal error for this graph family)."""


class BeamCollapse(LabelCheckError):
    """Beam pruning removed every live state; retry with a wider beam."""


class UnsortedInput(LabelCheckError):
    """Candidate tuples are not sorted by start time."""


class OverlappingCandidates(LabelCheckError):
    """Candidate tuples overlap in time."""


class SchemaViolation(LabelCheckError):
    """Metadata document violates the schema.

    ``pointer`` is a JSON pointer (RFC 6901) to the offending field, or to the
    enclosing object for cross-field violations.
    """

    def __init__(self, message, pointer):
        super().__init__(f"{message} (at {pointer or '/'})")
        self.pointer = pointer


class FileMissing(LabelCheckError):
    """A referenced file does not exist on disk."""


class InsufficientPool(LabelCheckError):
    """The sampling pool is smaller than the requested duration."""


class EmptyReference(LabelCheckError):
    """A reference transcript tokenized to nothing."""
