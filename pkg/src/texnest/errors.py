"""Exception types shared across the package.

Everything derives from ValueError so callers that just want "bad input"
semantics can catch a single base class.
"""


class TexnestError(ValueError):
    """Base class for all package-specific errors."""


class FormatError(TexnestError):
    """A file on disk is malformed or uses an unsupported feature."""


class ConsistencyError(TexnestError):
    """Two pieces of data that must agree (shapes, geometry) do not."""


class CoverageError(TexnestError):
    """A reassembled volume has voxels no patch contributed to."""
