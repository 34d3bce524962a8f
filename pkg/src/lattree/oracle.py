"""Differential testing against a plain reference map.

Scripts are generated from SplitMix64 so the same seed yields the same
script in any language, and they round-trip through a small text format::

    seed=7 key_bits=32
    put 1234 99
    get 1234
    remove 55
    iterate 0
"""
from __future__ import annotations

import contextlib
import gc
import io
import os
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterable, Iterator, List, Optional, Protocol, Tuple, Union

MASK64 = (1 << 64) - 1


class SplitMix64:
    """Vigna's SplitMix64 generator (the seeding generator of xoshiro/xoroshiro)."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def bits(self, k: int) -> int:
        """A uniform ``k``-bit integer taken from the high bits of one draw."""
        return self.next() >> (64 - k)

    def below(self, bound: int) -> int:
        """Uniform integer in ``range(bound)``; rejection sampling keeps it unbiased."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = (1 << 64) % bound
        while True:
            r = self.next()
            if r >= threshold:
                return r % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


class OrderedIntMap(Protocol):
    """The map interface every structure under test implements."""

    def get(self, key: int) -> Optional[Any]: ...

    def put(self, key: int, value: Any) -> Optional[Any]: ...

    def remove(self, key: int) -> Optional[Any]: ...

    def iterate(self) -> Iterable[Tuple[int, Any]]: ...

    def __len__(self) -> int: ...


class ReferenceMap:
    """A dict that sorts on iteration; shares nothing with the trees."""

    def __init__(self):
        self._data = {}

    def get(self, key):
        return self._data.get(key)

    def put(self, key, value):
        old = self._data.get(key)
        self._data[key] = value
        return old

    def remove(self, key):
        return self._data.pop(key, None)

    def iterate(self):
        data = self._data
        return iter([(k, data[k]) for k in sorted(data)])

    def __len__(self):
        return len(self._data)


class OpKind(str, Enum):
    PUT = "put"
    GET = "get"
    REMOVE = "remove"
    ITERATE = "iterate"


class Distribution(str, Enum):
    SEQUENTIAL = "sequential"
    UNIFORM_RANDOM = "uniform_random"
    CLUSTERED = "clustered"


@dataclass(frozen=True)
class Op:
    kind: OpKind
    key: int = 0
    value: Optional[int] = None


@dataclass(frozen=True)
class OpScript:
    seed: int
    key_bits: int
    ops: Tuple[Op, ...]

    def __len__(self):
        return len(self.ops)


@dataclass(frozen=True)
class Divergence:
    index: int
    expected: Any
    actual: Any


@dataclass(frozen=True)
class Verdict:
    first_divergence: Optional[Divergence] = None

    @property
    def passed(self) -> bool:
        return self.first_divergence is None


# Out of every 2000 ops: 900 puts, 600 gets, 499 removes, 1 full iteration.
# A full iteration costs O(size), so it is kept rare.
_MIX = 2000
_PUT_CUT, _GET_CUT, _REMOVE_CUT = 900, 1500, 1999
_MAX_RUN = 64


def _key_source(rng: SplitMix64, key_bits: int, distribution: Distribution) -> Iterator[int]:
    domain = 1 << key_bits
    if distribution is Distribution.SEQUENTIAL:
        k = 0
        while True:
            yield k % domain
            k += 1
    elif distribution is Distribution.UNIFORM_RANDOM:
        while True:
            yield rng.bits(key_bits)
    else:
        while True:
            start = rng.bits(key_bits)
            for offset in range(1 + rng.below(_MAX_RUN)):
                yield (start + offset) % domain


def gen_script(seed: int, n_ops: int, key_bits: int = 32, distribution="uniform_random") -> OpScript:
    """Deterministic mixed-operation script.

    Gets and removes target an already-put key half of the time so that hits
    and misses are both exercised even over a 64-bit key domain.
    """
    if n_ops < 1:
        raise ValueError("n_ops must be at least 1")
    if not 1 <= key_bits <= 64:
        raise ValueError("key_bits must be in 1..64")
    distribution = Distribution(distribution)
    rng = SplitMix64(seed)
    keys = _key_source(rng, key_bits, distribution)
    put_keys: List[int] = []
    ops = []
    for _ in range(n_ops):
        roll = rng.below(_MIX)
        if roll < _PUT_CUT:
            key = next(keys)
            put_keys.append(key)
            ops.append(Op(OpKind.PUT, key, rng.next()))
        elif roll < _REMOVE_CUT:
            kind = OpKind.GET if roll < _GET_CUT else OpKind.REMOVE
            if put_keys and rng.below(2):
                key = put_keys[rng.below(len(put_keys))]
            else:
                key = next(keys)
            ops.append(Op(kind, key))
        else:
            ops.append(Op(OpKind.ITERATE))
    return OpScript(seed, key_bits, tuple(ops))


@contextlib.contextmanager
def gc_paused():
    """Suspend the cyclic collector.

    Trees hold no reference cycles, so refcounting alone frees them; a
    cyclic collection pass over millions of arrays would dominate timings.
    """
    enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()


def run_differential(script: OpScript, structure: OrderedIntMap) -> Verdict:
    """Replay ``script`` against ``structure`` and a fresh ReferenceMap in lockstep.

    Returns at the first operation whose result differs.  A final full
    iteration is compared too, reported at index ``len(script)``.
    An exception from the structure counts as a divergence.
    """
    return run_lockstep(script, {"structure": structure})["structure"]


def run_lockstep(script: OpScript, structures: Dict[str, OrderedIntMap]) -> Dict[str, Verdict]:
    """Like run_differential for several structures sharing one reference map.

    A structure stops receiving operations once it has diverged.
    """
    with gc_paused():
        return _lockstep(script, structures)


def _lockstep(script, structures):
    model = ReferenceMap()
    live = dict(structures)
    verdicts = {name: Verdict() for name in structures}
    for index, op in enumerate(script.ops):
        expected = _apply(model, op)
        for name, structure in list(live.items()):
            try:
                actual = _apply(structure, op)
            except Exception as exc:
                actual = exc
            if isinstance(actual, Exception) or expected != actual:
                verdicts[name] = Verdict(Divergence(index, expected, actual))
                del live[name]
        if not live:
            return verdicts
    expected = list(model.iterate())
    for name, structure in live.items():
        try:
            actual = list(structure.iterate())
        except Exception as exc:
            actual = exc
        if isinstance(actual, Exception) or expected != actual:
            verdicts[name] = Verdict(Divergence(len(script.ops), expected, actual))
    return verdicts


def _apply(target, op: Op):
    if op.kind is OpKind.PUT:
        return target.put(op.key, op.value)
    if op.kind is OpKind.GET:
        return target.get(op.key)
    if op.kind is OpKind.REMOVE:
        return target.remove(op.key)
    return list(target.iterate())


def dump_script(script: OpScript, dest: Union[str, os.PathLike, io.TextIOBase]) -> None:
    lines = [f"seed={script.seed} key_bits={script.key_bits}"]
    for op in script.ops:
        if op.kind is OpKind.PUT:
            lines.append(f"put {op.key} {op.value}")
        else:
            lines.append(f"{op.kind.value} {op.key}")
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w") as fp:
            fp.write(text)


def parse_script(text: str) -> OpScript:
    lines = [line.strip() for line in text.splitlines()]
    lines = [line for line in lines if line and not line.startswith("#")]
    if not lines:
        raise ValueError("empty script")
    header = dict(field.split("=", 1) for field in lines[0].split())
    try:
        seed, key_bits = int(header["seed"]), int(header["key_bits"])
    except (KeyError, ValueError):
        raise ValueError(f"bad script header {lines[0]!r}") from None
    ops = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        try:
            kind = OpKind(parts[0])
            key = int(parts[1]) if len(parts) > 1 else 0
            value = int(parts[2]) if len(parts) > 2 else None
        except (ValueError, IndexError):
            raise ValueError(f"line {lineno}: cannot parse {line!r}") from None
        if (kind is OpKind.PUT) != (value is not None):
            raise ValueError(f"line {lineno}: only put carries a value")
        ops.append(Op(kind, key, value))
    return OpScript(seed, key_bits, tuple(ops))


def load_script(path: Union[str, os.PathLike]) -> OpScript:
    with open(path) as fp:
        return parse_script(fp.read())
