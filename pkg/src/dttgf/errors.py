"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
bad input data with 3, and internal invariant violations with 4.
"""


class DttgfError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(DttgfError):
    """Invalid or inconsistent configuration."""


class InputError(DttgfError):
    """Unreadable or malformed input data."""


class ParseError(InputError):
    """Malformed input text; carries the offending line number when known."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class UnsupportedFormatError(InputError):
    """Input file is recognizable but not a supported variant."""


class SizeError(DttgfError, ValueError):
    """An input collection is too small or too large for the operation."""


class DomainError(DttgfError, ValueError):
    """A numeric argument is outside the operation's domain."""


class DimensionError(DttgfError, ValueError):
    """Two objects that must describe the same node set do not."""


class DegenerateTriangleError(DttgfError, ValueError):
    """Three collinear points were passed where a proper triangle is required."""


class DuplicatePointsError(DttgfError, ValueError):
    """Coincident points are not allowed; lists the offending indices."""

    def __init__(self, indices):
        super().__init__(f"duplicate points at indices {sorted(indices)}")
        self.indices = tuple(sorted(indices))


class MalformedTourError(DttgfError, ValueError):
    """A tour is not a permutation of the instance's nodes."""


class InternalError(DttgfError):
    """An internal invariant was violated; indicates a bug, not bad input."""
