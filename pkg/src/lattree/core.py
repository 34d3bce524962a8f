"""Linked Array Tree: a fixed-radix, non-moving integer-keyed map.

A key is split into one remainder per level (its digits in base ``radix``,
most significant first).  Each remainder indexes a slot of the array at its
level, so every lookup touches exactly ``height`` arrays no matter how many
values are stored.  Data arrays at the bottom level are chained in ascending
key order so that ordered iteration never has to climb the tree.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator, List, Optional, Sequence, Tuple

from .errors import CapacityOverflow, CorruptionError, InvalidConfig, KeyOutOfRange

# Keys are unsigned integers of at most 64 bits.
KEY_LIMIT = 1 << 64

SLOT_BYTES = 8


class Decomposition(str, Enum):
    DIVISION = "division"
    BIT_SLICE = "bit_slice"


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class LatConfig:
    """Shape parameters of one symmetric tree.

    ``height`` may be left out, in which case it is derived from
    ``key_bits`` so that every ``key_bits``-wide key fits.  ``decomposition``
    defaults to ``bit_slice`` for power-of-two radices and ``division``
    otherwise.
    """

    radix: int = 256
    height: Optional[int] = None
    key_bits: int = 64
    auto_grow: bool = True
    decomposition: Optional[Decomposition] = None

    def __post_init__(self):
        if not isinstance(self.radix, int) or self.radix < 2:
            raise InvalidConfig(f"radix must be an integer >= 2, got {self.radix!r}")
        if not isinstance(self.key_bits, int) or not 1 <= self.key_bits <= 64:
            raise InvalidConfig(f"key_bits must be in 1..64, got {self.key_bits!r}")

        decomposition = self.decomposition
        if decomposition is None:
            decomposition = Decomposition.BIT_SLICE if _is_pow2(self.radix) else Decomposition.DIVISION
        else:
            try:
                decomposition = Decomposition(decomposition)
            except ValueError:
                raise InvalidConfig(f"unknown decomposition {self.decomposition!r}") from None
        if decomposition is Decomposition.BIT_SLICE and not _is_pow2(self.radix):
            raise InvalidConfig(f"bit_slice decomposition needs a power-of-two radix, got {self.radix}")
        object.__setattr__(self, "decomposition", decomposition)

        height = self.height
        if height is None:
            height = _height_for(self.radix, self.key_bits)
        if not isinstance(height, int) or height < 1:
            raise InvalidConfig(f"height must be an integer >= 1, got {height!r}")
        if self.radix ** height > KEY_LIMIT:
            raise InvalidConfig(f"radix**height = {self.radix}**{height} exceeds the 64-bit key domain")
        object.__setattr__(self, "height", height)

    @property
    def max_size(self) -> int:
        return self.radix ** self.height

    @property
    def bits_per_level(self) -> Optional[int]:
        if self.decomposition is Decomposition.BIT_SLICE:
            return self.radix.bit_length() - 1
        return None


def _height_for(radix: int, key_bits: int) -> int:
    # For radix 2**p this is ceil(key_bits / p); the top slice is zero-padded.
    height, span = 1, radix
    while span < (1 << key_bits):
        height += 1
        span *= radix
    return height


def decompose_div(key: int, radix: int, height: int) -> List[int]:
    """Remainders of ``key`` by repeated division, most significant first.

    >>> decompose_div(254, 4, 4)
    [3, 3, 3, 2]
    """
    if not 0 <= key < radix ** height:
        raise KeyOutOfRange(f"key {key} outside 0..{radix}**{height}")
    stack = []
    for _ in range(height):
        key, rem = divmod(key, radix)
        stack.append(rem)
    # Computed least significant first, consumed from the root down.
    stack.reverse()
    return stack


def decompose_bits(key: int, p: int, height: int) -> List[int]:
    """Remainders of ``key`` read directly as ``p``-bit slices of its binary form.

    Slice ``i`` holds bits ``i*p .. i*p+p-1`` counted from the most
    significant end of a ``p*height``-bit word, which is exactly what
    ``decompose_div(key, 2**p, height)`` produces.
    """
    if p < 1 or height < 1:
        raise ValueError("p and height must be positive")
    if not 0 <= key < 1 << (p * height):
        raise ValueError(f"key {key} does not fit in {p * height} bits")
    mask = (1 << p) - 1
    return [(key >> (p * (height - 1 - i))) & mask for i in range(height)]


@dataclass
class StepCounters:
    """Instrumentation tallies; they only grow until ``reset()`` is called."""

    array_visits: int = 0
    slot_inspections: int = 0
    allocations: int = 0
    frees: int = 0

    @property
    def steps(self) -> int:
        """Search-style iteration count: arrays entered plus slots examined."""
        return self.array_visits + self.slot_inspections

    def snapshot(self) -> "StepCounters":
        return replace(self)

    def reset(self) -> None:
        self.array_visits = self.slot_inspections = 0
        self.allocations = self.frees = 0


@dataclass(frozen=True)
class Footprint:
    arrays: int
    slots: int
    bytes: int


class _Array:
    """Bit ``i`` of ``bitmap`` is set iff slot ``i`` is filled."""

    __slots__ = ("slots", "occupancy", "bitmap")

    def __init__(self, radix: int):
        self.slots: list = [None] * radix
        self.occupancy = 0
        self.bitmap = 0

    def __repr__(self):
        return f"<{type(self).__name__} radix={len(self.slots)} occupancy={self.occupancy}>"


class IndexArray(_Array):
    """Index-level array; its slots link child arrays."""

    __slots__ = ()

    def __init__(self, radix: int):
        self.slots = [None] * radix
        self.occupancy = 0
        self.bitmap = 0


class LeafArray(_Array):
    """Data-level array without a successor link."""

    __slots__ = ()


class DataArray(LeafArray):
    """Data-level array chained to its successor; ``base_key`` is the key of slot 0."""

    __slots__ = ("next", "base_key")

    def __init__(self, radix: int, base_key: int):
        self.slots = [None] * radix
        self.occupancy = 0
        self.bitmap = 0
        self.next: Optional[DataArray] = None
        self.base_key = base_key

    def __repr__(self):
        return f"<DataArray base_key={self.base_key} occupancy={self.occupancy}>"


def occupied_slots(array: _Array) -> List[int]:
    """Indices of the filled slots of ``array``, ascending."""
    if array.occupancy * 8 >= len(array.slots):
        return [i for i, s in enumerate(array.slots) if s is not None]
    found = []
    bitmap = array.bitmap
    while bitmap:
        low = bitmap & -bitmap
        found.append(low.bit_length() - 1)
        bitmap ^= low
    return found


def _leaf_items(leaf: _Array, base: int) -> Iterator[Tuple[int, object]]:
    slots = leaf.slots
    if leaf.occupancy * 8 >= len(slots):
        for i, value in enumerate(slots):
            if value is not None:
                yield base + i, value
        return
    bitmap = leaf.bitmap
    while bitmap:
        low = bitmap & -bitmap
        i = low.bit_length() - 1
        yield base + i, slots[i]
        bitmap ^= low


class ArrayTree:
    """Descent machinery shared by all tree variants.

    Levels are described by a list of per-level radices, so symmetric and
    asymmetric shapes use the same get/put/remove code paths and the same
    step accounting.  Subclasses decide what a data array looks like and
    hook into the moments when a data array gains its first value or loses
    its last one.
    """

    header_bytes = 8

    def __init__(self, radices: Sequence[int], bitwise: bool, auto_grow: bool = False, debug: bool = False):
        self._radices = list(radices)
        self._bitwise = bitwise
        self.auto_grow = auto_grow
        self.debug = debug
        self.counters = StepCounters()
        self._count = 0
        self._reshape()
        if self._height == 1:
            self._root = self._alloc_leaf(0)
        else:
            self._root = self._alloc_index(0)

    # -- shape ---------------------------------------------------------

    def _reshape(self) -> None:
        radices = self._radices
        height = len(radices)
        strides = [1] * height
        for i in range(height - 2, -1, -1):
            strides[i] = strides[i + 1] * radices[i + 1]
        self._height = height
        self._last = height - 1
        self._strides = strides
        self._max_size = strides[0] * radices[0]
        if self._bitwise:
            ops = [(s.bit_length() - 1, r - 1) for s, r in zip(strides, radices)]
        else:
            ops = list(zip(strides, radices))
        self._ops = ops
        self._index_ops = ops[:-1]
        # Fast path for symmetric bit-sliced shapes.
        self._uniform_mask = 0
        if self._bitwise and len(set(radices)) == 1:
            self._uniform_mask = radices[0] - 1
            self._shifts = [shift for shift, _ in ops]
            self._index_shifts = self._shifts[:-1]
        self._leaf_radix = radices[-1]

    @property
    def height(self) -> int:
        return self._height

    @property
    def radices(self) -> Tuple[int, ...]:
        return tuple(self._radices)

    @property
    def max_size(self) -> int:
        return self._max_size

    @property
    def root(self) -> IndexArray:
        return self._root

    def __len__(self) -> int:
        return self._count

    def __contains__(self, key) -> bool:
        return self.get(key) is not None

    def remainders(self, key: int) -> List[int]:
        mask = self._uniform_mask
        if mask:
            return [(key >> shift) & mask for shift in self._shifts]
        if self._bitwise:
            return [(key >> shift) & mask for shift, mask in self._ops]
        return [key // stride % radix for stride, radix in self._ops]

    # -- allocation ----------------------------------------------------

    def _alloc_index(self, level: int) -> IndexArray:
        self.counters.allocations += 1
        return IndexArray(self._radices[level])

    def _alloc_leaf(self, base_key: int) -> LeafArray:
        self.counters.allocations += 1
        return LeafArray(self._leaf_radix)

    def _link_leaf(self, leaf, key: int) -> None:
        """Called when ``leaf`` goes from empty to holding one value."""

    def _unlink_leaf(self, leaf, key: int) -> None:
        """Called when ``leaf`` loses its last value, before it is freed."""

    # -- map operations ------------------------------------------------

    def get(self, key: int):
        """Value stored under ``key``, or None."""
        if key < 0 or key >= self._max_size:
            return None
        node = self._root
        visits = 1
        mask = self._uniform_mask
        if mask:
            for shift in self._index_shifts:
                node = node.slots[(key >> shift) & mask]
                if node is None:
                    self.counters.array_visits += visits
                    return None
                visits += 1
            self.counters.array_visits += visits
            return node.slots[key & mask]
        if self._bitwise:
            for shift, mask in self._index_ops:
                node = node.slots[(key >> shift) & mask]
                if node is None:
                    self.counters.array_visits += visits
                    return None
                visits += 1
            self.counters.array_visits += visits
            return node.slots[key & (self._leaf_radix - 1)]
        for stride, radix in self._index_ops:
            node = node.slots[key // stride % radix]
            if node is None:
                self.counters.array_visits += visits
                return None
            visits += 1
        self.counters.array_visits += visits
        return node.slots[key % self._leaf_radix]

    def put(self, key: int, value):
        """Store ``value`` under ``key``; returns the value it replaced, if any.

        Any object except None may be stored.  Keys beyond ``max_size`` grow
        the tree when ``auto_grow`` is set and raise KeyOutOfRange otherwise.
        """
        if value is None:
            raise TypeError("None cannot be stored; it marks an empty slot")
        if key < 0 or key >= self._max_size:
            self._make_room(key)
        rems = self.remainders(key)
        last = self._last
        node = self._root
        for level in range(last):
            rem = rems[level]
            child = node.slots[rem]
            if child is None:
                if level == last - 1:
                    child = self._alloc_leaf(key - rems[last])
                else:
                    child = self._alloc_index(level + 1)
                node.slots[rem] = child
                node.occupancy += 1
                node.bitmap |= 1 << rem
            node = child
        self.counters.array_visits += self._height

        slot = rems[last]
        old = node.slots[slot]
        node.slots[slot] = value
        if old is None:
            node.occupancy += 1
            node.bitmap |= 1 << slot
            self._count += 1
            if node.occupancy == 1:
                self._link_leaf(node, key)
        return old

    def _make_room(self, key: int) -> None:
        if key < 0 or key >= KEY_LIMIT or not self.auto_grow:
            raise KeyOutOfRange(f"key {key} outside 0..{self._max_size - 1}")
        while key >= self._max_size:
            self.grow()

    def remove(self, key: int):
        """Delete ``key``; returns the removed value, or None if it was absent.

        A data array that becomes empty is unlinked and freed, and so is
        every ancestor index array left empty by that, except the root.
        """
        if key < 0 or key >= self._max_size:
            return None
        counters = self.counters
        rems = self.remainders(key)
        last = self._last
        path = [self._root]
        node = self._root
        for level in range(last):
            node = node.slots[rems[level]]
            if node is None:
                counters.array_visits += len(path)
                return None
            path.append(node)
        counters.array_visits += self._height

        slot = rems[last]
        old = node.slots[slot]
        if old is None:
            return None
        node.slots[slot] = None
        node.occupancy -= 1
        node.bitmap &= ~(1 << slot)
        self._count -= 1

        counters.slot_inspections += 1
        if not self._is_empty(node):
            return old
        self._unlink_leaf(node, key)
        level = last
        while level > 0:
            parent = path[level - 1]
            rem = rems[level - 1]
            parent.slots[rem] = None
            parent.occupancy -= 1
            parent.bitmap &= ~(1 << rem)
            counters.frees += 1
            level -= 1
            if level == 0:
                break
            counters.slot_inspections += 1
            if not self._is_empty(parent):
                break
        return old

    def _is_empty(self, array: _Array) -> bool:
        if self.debug:
            occupied = sum(s is not None for s in array.slots)
            if occupied != array.occupancy:
                raise CorruptionError(f"{array!r} holds {occupied} entries")
        return array.occupancy == 0

    def grow(self) -> None:
        """Add a level on top; the old root becomes slot 0 of the new root."""
        radix = self._radices[0]
        if self._max_size * radix > KEY_LIMIT:
            raise CapacityOverflow(f"growing past {self._max_size * radix} exceeds the 64-bit key domain")
        new_root = IndexArray(radix)
        self.counters.allocations += 1
        if self._count:
            new_root.slots[0] = self._root
            new_root.occupancy = 1
            new_root.bitmap = 1
        else:
            # An empty old root would become an empty non-root array; drop it.
            self.counters.frees += 1
        self._root = new_root
        self._radices.insert(0, radix)
        self._reshape()

    # -- iteration -----------------------------------------------------

    def iterate(self) -> Iterator[Tuple[int, object]]:
        return self.tree_walk_iterate()

    def items(self) -> Iterator[Tuple[int, object]]:
        return self.iterate()

    def keys(self) -> Iterator[int]:
        for key, _ in self.iterate():
            yield key

    __iter__ = keys

    def tree_walk_iterate(self) -> Iterator[Tuple[int, object]]:
        """Depth-first walk yielding pairs in ascending key order.

        Keys are rebuilt from the slot path, so no stored key is needed.
        """
        radices = self._radices
        last = self._last
        root = self._root
        if last == 0:
            yield from _leaf_items(root, 0)
            return
        leaf_radix = radices[last]
        # A frame is (level, key prefix, array, iterator over filled slots).
        stack = [(0, 0, root, iter(occupied_slots(root)))]
        while stack:
            top, prefix, array, pending = stack[-1]
            radix = radices[top]
            slots = array.slots
            for i in pending:
                child_prefix = prefix * radix + i
                child = slots[i]
                level = top + 1
                # Follow single-child chains without stacking a frame for each.
                while level < last and child.occupancy == 1:
                    i = child.bitmap.bit_length() - 1
                    child_prefix = child_prefix * radices[level] + i
                    child = child.slots[i]
                    level += 1
                if level < last:
                    stack.append((level, child_prefix, child, iter(occupied_slots(child))))
                    break
                if child.occupancy == 1:
                    i = child.bitmap.bit_length() - 1
                    yield child_prefix * leaf_radix + i, child.slots[i]
                else:
                    yield from _leaf_items(child, child_prefix * leaf_radix)
            else:
                stack.pop()

    def walk_arrays(self) -> Iterator[Tuple[int, int, _Array]]:
        """Every allocated array as ``(level, key_prefix, array)``, depth first."""
        stack = [(0, 0, self._root)]
        last = self._last
        radices = self._radices
        while stack:
            level, prefix, array = stack.pop()
            yield level, prefix, array
            if level < last:
                for i in range(len(array.slots) - 1, -1, -1):
                    child = array.slots[i]
                    if child is not None:
                        stack.append((level + 1, prefix * radices[level] + i, child))

    def locate(self, key: int) -> Optional[Tuple[LeafArray, int]]:
        """The ``(data array, slot)`` holding ``key``, without touching counters."""
        if not 0 <= key < self._max_size:
            return None
        rems = self.remainders(key)
        node = self._root
        for rem in rems[:-1]:
            node = node.slots[rem]
            if node is None:
                return None
        if node.slots[rems[-1]] is None:
            return None
        return node, rems[-1]

    # -- accounting ----------------------------------------------------

    def memory_footprint(self) -> Footprint:
        arrays = slots = 0
        for _, _, array in self.walk_arrays():
            arrays += 1
            slots += len(array.slots)
        return Footprint(arrays, slots, arrays * self.header_bytes + slots * SLOT_BYTES)

    def validate(self) -> None:
        """Walk the whole structure and raise CorruptionError on any broken invariant."""
        seen = set()
        arrays = stored = 0
        for level, prefix, array in self.walk_arrays():
            if id(array) in seen:
                raise CorruptionError(f"{array!r} is linked twice")
            seen.add(id(array))
            arrays += 1
            if len(array.slots) != self._radices[level]:
                raise CorruptionError(f"{array!r} at level {level} has the wrong radix")
            occupied = sum(s is not None for s in array.slots)
            if occupied != array.occupancy:
                raise CorruptionError(f"{array!r} holds {occupied} entries")
            bitmap = sum(1 << i for i, s in enumerate(array.slots) if s is not None)
            if bitmap != array.bitmap:
                raise CorruptionError(f"{array!r} has a stale bitmap")
            if occupied == 0 and array is not self._root:
                raise CorruptionError(f"empty non-root {array!r} at level {level}")
            is_leaf = isinstance(array, LeafArray)
            if is_leaf != (level == self._last):
                raise CorruptionError(f"{array!r} sits at level {level}")
            if is_leaf:
                stored += occupied
                self._check_leaf(array, prefix * self._leaf_radix)
        if stored != self._count:
            raise CorruptionError(f"count is {self._count} but {stored} values are stored")
        live = self.counters.allocations - self.counters.frees
        if live != arrays:
            raise CorruptionError(f"allocations - frees = {live} but {arrays} arrays are reachable")

    def _check_leaf(self, leaf, base_key: int) -> None:
        pass


class Lat(ArrayTree):
    """Symmetric linked array tree.

    >>> t = Lat(radix=4, height=4)
    >>> t.put(254, "v")
    >>> t.get(254)
    'v'
    >>> t.max_size
    256
    """

    # occupancy, successor link and base key
    header_bytes = 24

    def __init__(self, config: Optional[LatConfig] = None, *, debug: bool = False, **kwargs):
        if config is None:
            config = LatConfig(**kwargs)
        elif kwargs:
            raise TypeError("pass either a LatConfig or keyword parameters, not both")
        self.config = config
        self.head: Optional[DataArray] = None
        super().__init__(
            [config.radix] * config.height,
            config.decomposition is Decomposition.BIT_SLICE,
            config.auto_grow,
            debug,
        )

    @property
    def radix(self) -> int:
        return self.config.radix

    def _alloc_leaf(self, base_key: int) -> DataArray:
        self.counters.allocations += 1
        return DataArray(self._leaf_radix, base_key)

    def grow(self) -> None:
        super().grow()
        self.config = replace(self.config, height=self._height)

    # -- leaf list -----------------------------------------------------

    def find_left(self, key: int) -> Optional[DataArray]:
        """Nearest data array strictly left of the one that holds ``key``.

        The search starts from ``key - key % radix - 1`` so it can never land
        on the array of ``key`` itself, then descends from the root.  Arrays
        on the probe's own path are scanned from the probe's remainder
        downward; once the walk has turned left, arrays are scanned from
        their last slot.
        """
        probe = key - key % self._leaf_radix - 1
        if probe < 0 or self._height == 1:
            return None
        return self._scan_left(self._root, 0, True, self.remainders(probe))

    def _scan_left(self, array, level, on_branch, rems):
        # Scans slots from ``start`` downward.  The bitmap finds the next
        # linked slot directly; every slot passed over is still counted.
        if level == self._last:
            return array
        start = rems[level] if on_branch else len(array.slots) - 1
        first = start
        bitmap = array.bitmap
        counters = self.counters
        while start >= 0:
            below = bitmap & ((2 << start) - 1)
            if not below:
                break
            i = below.bit_length() - 1
            counters.slot_inspections += start - i + 1
            found = self._scan_left(array.slots[i], level + 1, on_branch and i == first, rems)
            if found is not None:
                return found
            start = i - 1
        counters.slot_inspections += start + 1
        return None

    def _link_leaf(self, leaf: DataArray, key: int) -> None:
        left = self.find_left(key)
        if left is None:
            leaf.next = self.head
            self.head = leaf
        else:
            leaf.next = left.next
            left.next = leaf

    def _unlink_leaf(self, leaf: DataArray, key: int) -> None:
        if self.head is leaf:
            self.head = leaf.next
        else:
            left = self.find_left(key)
            if left is None or left.next is not leaf:
                raise CorruptionError(f"{leaf!r} is missing from the leaf list")
            left.next = leaf.next
        leaf.next = None

    def leaves(self) -> Iterator[DataArray]:
        leaf = self.head
        while leaf is not None:
            yield leaf
            leaf = leaf.next

    def iterate(self) -> Iterator[Tuple[int, object]]:
        """Pairs in ascending key order, following the leaf list."""
        leaf = self.head
        while leaf is not None:
            if leaf.occupancy == 1:
                i = leaf.bitmap.bit_length() - 1
                yield leaf.base_key + i, leaf.slots[i]
            else:
                yield from _leaf_items(leaf, leaf.base_key)
            leaf = leaf.next

    def _check_leaf(self, leaf: DataArray, base_key: int) -> None:
        if leaf.base_key != base_key:
            raise CorruptionError(f"{leaf!r} sits where base key {base_key} belongs")

    def validate(self) -> None:
        super().validate()
        leaves = [a for level, _, a in self.walk_arrays() if level == self._last and a.occupancy]
        chain = []
        for leaf in self.leaves():
            if len(chain) > len(leaves):
                raise CorruptionError("leaf list does not terminate")
            chain.append(leaf)
        if [id(a) for a in chain] != [id(a) for a in leaves]:
            raise CorruptionError("leaf list does not match the allocated data arrays")
        bases = [a.base_key for a in chain]
        if any(b <= a for a, b in zip(bases, bases[1:])):
            raise CorruptionError("leaf list is not in ascending base-key order")
