"""Exception hierarchy for the shardmend pipeline."""


class ShardmendError(Exception):
    """Base class for all pipeline errors."""


class MeshError(ShardmendError):
    """Unreadable, malformed, or unsupported mesh input."""


class DegenerateCloudError(ShardmendError):
    """A point cloud without usable extent (all points coincident, etc.)."""


class DegenerateCutError(ShardmendError):
    """A planar cut that leaves one side empty; the caller should re-draw."""


class InsufficientDensityError(ShardmendError):
    """A fragment too sparse to fix to the requested point count."""


class DegenerateDenominatorError(ShardmendError):
    """Distance-factor denominator collapsed to ~0 (degenerate ground truth)."""


class ConfigError(ShardmendError):
    """Invalid pipeline configuration; message names the offending field."""
