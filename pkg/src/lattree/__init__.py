"""Linked Array Tree: constant step-count integer-keyed maps."""
from .core import (
    KEY_LIMIT,
    ArrayTree,
    DataArray,
    Decomposition,
    Footprint,
    IndexArray,
    Lat,
    LatConfig,
    LeafArray,
    StepCounters,
    decompose_bits,
    decompose_div,
)
from .errors import (
    CapacityOverflow,
    CorruptionError,
    InvalidConfig,
    IoFailure,
    KeyOutOfRange,
    LatError,
    UnknownStructure,
    UnsupportedCombination,
)
from .variants import AsymmetricConfig, AsymmetricLat, UnlinkedLat, decompose_mixed

__version__ = "0.1.0"
