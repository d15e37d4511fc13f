"""Typed error hierarchy.

Every domain failure raised by the library derives from MergeForgeError so
the CLI can map it to exit code 1 with a typed message; anything else that
escapes is a bug.
"""


class MergeForgeError(Exception):
    """Base class for all domain errors."""


# ---- checkpoint container -------------------------------------------------

class MalformedHeader(MergeForgeError):
    """Container header is not valid: bad JSON, bad fields, or offsets that
    overlap or run past the end of the file."""


class UnsupportedDtype(MergeForgeError):
    """Container declares a dtype other than F32/F16."""


class ShapeMismatch(MergeForgeError):
    """Declared shape disagrees with the data it should describe."""


class IoFailure(MergeForgeError):
    """Underlying file operation failed."""


# ---- tensor algebra -------------------------------------------------------

class NameSetMismatch(MergeForgeError):
    """Two tensor collections that must share a key set do not."""


class EmptyGroup(MergeForgeError):
    """A declared layer group contains no tensors."""


class ZeroWeightSum(MergeForgeError):
    """Weights sum to zero where normalization was requested."""


class InvalidDensity(MergeForgeError):
    """Density outside (0, 1]."""


class InvalidSpread(MergeForgeError):
    """DELLA spread is negative or leaves no keep probability mass."""


class RecipeError(MergeForgeError):
    """Merge recipe or sweep plan document is invalid (unknown or missing
    fields, out-of-range values)."""


# ---- diagnostics ----------------------------------------------------------

class LengthMismatch(MergeForgeError):
    """Paired arrays differ in length."""


class TooFewElements(MergeForgeError):
    """Fewer than two elements where a correlation is requested."""


class NoDefinedCorrelations(MergeForgeError):
    """Every layer had zero variance; no correlation evidence exists."""


# ---- data mixing / metrics ------------------------------------------------

class InvalidRatio(MergeForgeError):
    """Subsampling ratio outside (0, 1]."""


class EmptyReference(MergeForgeError):
    """Text metric called with an empty reference."""
