"""Exception hierarchy shared by all taghash modules."""


class TagHashError(Exception):
    """Base class for all taghash errors."""


class MalformedFile(TagHashError):
    """A data file violates its declared format (bad magic, dimension
    mismatch, out-of-range index, non-finite entry)."""


class InvalidConfig(TagHashError):
    """A configuration value is out of range or unknown."""


class InvalidSplit(InvalidConfig):
    """Requested train/query split sizes are infeasible."""


class InvalidK(InvalidConfig):
    """k-means cluster count is zero or exceeds the number of points."""


class DegenerateAnchor(TagHashError):
    """An anchor attracted zero similarity mass."""


class DimensionMismatch(TagHashError):
    """Matrix operands have incompatible shapes."""


class LengthMismatch(TagHashError):
    """Paired arrays (codes/ids, code words) differ in length."""


class SingularSystem(TagHashError):
    """A normal-equations system is singular and no ridge was requested."""


class InvalidSign(TagHashError):
    """A sign-matrix entry is not -1 or +1."""


class EmptyIndex(TagHashError):
    """Query against an index that holds no codes."""


class NumericalError(TagHashError):
    """Training produced a non-finite objective value."""
