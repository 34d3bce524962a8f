"""Tree variants without a leaf list: symmetric unlinked and asymmetric.

Dropping the successor links means a newly allocated or freed data array
never needs its left neighbour, which makes sparse inserts and deletes
cheaper.  Ordered iteration falls back to a depth-first tree walk.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import List, Optional, Sequence, Tuple

from .core import KEY_LIMIT, ArrayTree, Decomposition, LatConfig, _is_pow2
from .errors import InvalidConfig, KeyOutOfRange, LatError


def decompose_mixed(key: int, radices: Sequence[int]) -> List[int]:
    """Mixed-radix digits of ``key``; digit ``i`` indexes level ``i``.

    >>> decompose_mixed(300, [8, 4, 4, 4])
    [4, 2, 3, 0]
    """
    if not 0 <= key < prod(radices):
        raise KeyOutOfRange(f"key {key} outside 0..{prod(radices) - 1}")
    digits = [0] * len(radices)
    for i in range(len(radices) - 1, -1, -1):
        key, digits[i] = divmod(key, radices[i])
    return digits


class UnlinkedLat(ArrayTree):
    """Symmetric array tree whose data arrays carry no successor link."""

    def __init__(self, config: Optional[LatConfig] = None, *, debug: bool = False, **kwargs):
        if config is None:
            config = LatConfig(**kwargs)
        elif kwargs:
            raise TypeError("pass either a LatConfig or keyword parameters, not both")
        self.config = config
        super().__init__(
            [config.radix] * config.height,
            config.decomposition is Decomposition.BIT_SLICE,
            config.auto_grow,
            debug,
        )

    @property
    def radix(self) -> int:
        return self.config.radix

    def grow(self) -> None:
        super().grow()
        self.config = LatConfig(
            radix=self.config.radix,
            height=self._height,
            key_bits=self.config.key_bits,
            auto_grow=self.config.auto_grow,
            decomposition=self.config.decomposition,
        )


@dataclass(frozen=True)
class AsymmetricConfig:
    """Per-level radices, root level first.

    ``key_bits`` defaults to the widest key width the shape can hold.
    """

    radices: Tuple[int, ...]
    key_bits: Optional[int] = None

    def __post_init__(self):
        radices = tuple(self.radices)
        if not radices:
            raise InvalidConfig("at least one level is required")
        if any(not isinstance(r, int) or r < 2 for r in radices):
            raise InvalidConfig(f"every radix must be an integer >= 2, got {radices}")
        size = prod(radices)
        if size > KEY_LIMIT:
            raise InvalidConfig(f"product of radices {size} exceeds the 64-bit key domain")
        key_bits = self.key_bits
        if key_bits is None:
            key_bits = size.bit_length() - 1
        if not 1 <= key_bits <= 64:
            raise InvalidConfig(f"key_bits must be in 1..64, got {key_bits}")
        if size < 1 << key_bits:
            raise InvalidConfig(f"radices {radices} cannot hold {key_bits}-bit keys")
        object.__setattr__(self, "radices", radices)
        object.__setattr__(self, "key_bits", key_bits)

    @property
    def max_size(self) -> int:
        return prod(self.radices)

    @property
    def bit_widths(self) -> Optional[Tuple[int, ...]]:
        """Bits consumed per level, or None unless every radix is a power of two."""
        if all(_is_pow2(r) for r in self.radices):
            return tuple(r.bit_length() - 1 for r in self.radices)
        return None


class AsymmetricLat(ArrayTree):
    """Unlinked array tree with a different radix on each level.

    The shape is fixed at construction; keys past ``max_size`` are rejected.
    """

    def __init__(self, config=None, *, debug: bool = False, **kwargs):
        if config is None:
            config = AsymmetricConfig(**kwargs)
        elif not isinstance(config, AsymmetricConfig):
            config = AsymmetricConfig(tuple(config), **kwargs)
        self.config = config
        super().__init__(config.radices, config.bit_widths is not None, auto_grow=False, debug=debug)

    def grow(self) -> None:
        raise LatError("asymmetric trees have a fixed shape")


def default_asymmetric_radices(key_bits: int, radix: int = 256) -> Tuple[int, ...]:
    """A shape for ``key_bits``-wide keys whose top level is narrower than the rest.

    Lower levels take ``log2(radix)`` bits each; the top level takes what is
    left over, and when nothing is left over the top slice is split in two.
    """
    if not _is_pow2(radix) or radix < 4:
        raise InvalidConfig("radix must be a power of two >= 4")
    p = radix.bit_length() - 1
    full, rest = divmod(key_bits, p)
    if rest:
        widths = [rest] + [p] * full
    else:
        widths = [p // 2, p - p // 2] + [p] * (full - 1)
    return tuple(1 << w for w in widths)
