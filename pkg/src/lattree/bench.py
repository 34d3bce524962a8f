"""Workload generation, timing, memory curves and CSV output.

Every structure is driven through the same map interface (get/put/remove/
iterate), so array trees and the ordered-map baselines are timed by the
same loops.  Stored values equal their keys, which makes the reported
checksums easy to predict.
"""
from __future__ import annotations

import csv
import io
import os
import statistics
import tempfile
import time
from dataclasses import dataclass, fields
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Union

from .core import Lat, LatConfig
from .errors import IoFailure, UnknownStructure, UnsupportedCombination
from .oracle import SplitMix64, gc_paused
from .variants import AsymmetricConfig, AsymmetricLat, UnlinkedLat, default_asymmetric_radices

CSV_HEADER = ["structure", "workload", "n", "radix", "height", "seed", "total_ns", "ns_per_op", "arrays", "slots", "bytes"]

# Salt for the generator that orders sparse searches and deletes, so the
# order is independent of the insertion order drawn from the same seed.
_ORDER_SALT = 0x5DEECE66D


class WorkloadKind(str, Enum):
    INTENSIVE_INSERT = "intensive_insert"
    INTENSIVE_SEARCH = "intensive_search"
    INTENSIVE_DELETE = "intensive_delete"
    SPARSE_INSERT = "sparse_insert"
    SPARSE_SEARCH = "sparse_search"
    SPARSE_DELETE = "sparse_delete"
    INTENSIVE_ITERATE = "intensive_iterate"
    SPARSE_ITERATE = "sparse_iterate"

    @property
    def sparse(self) -> bool:
        return self.value.startswith("sparse")

    @property
    def phase(self) -> str:
        return self.value.split("_", 1)[1]


class SortedDictMap:
    """Baseline: ``sortedcontainers.SortedDict`` (sorted-list ordered map)."""

    def __init__(self):
        from sortedcontainers import SortedDict

        self._d = SortedDict()

    def get(self, key):
        return self._d.get(key)

    def put(self, key, value):
        d = self._d
        old = d.get(key)
        d[key] = value
        return old

    def remove(self, key):
        return self._d.pop(key, None)

    def iterate(self):
        return iter(self._d.items())

    def __len__(self):
        return len(self._d)


class BTreeMap:
    """Baseline: the ``BTrees`` B+-tree with unsigned 64-bit keys and values."""

    def __init__(self):
        from BTrees.QQBTree import QQBTree

        self._t = QQBTree()

    def get(self, key):
        return self._t.get(key)

    def put(self, key, value):
        t = self._t
        old = t.get(key)
        t[key] = value
        return old

    def remove(self, key):
        return self._t.pop(key, None)

    def iterate(self):
        return iter(self._t.items())

    def __len__(self):
        return len(self._t)


@dataclass(frozen=True)
class BenchConfig:
    radix: int = 256
    key_bits: int = 64
    radices: Optional[Sequence[int]] = None


def _lat_config(cfg: BenchConfig) -> LatConfig:
    return LatConfig(radix=cfg.radix, key_bits=cfg.key_bits)


def _asymmetric(cfg: BenchConfig) -> AsymmetricLat:
    radices = cfg.radices or default_asymmetric_radices(cfg.key_bits, cfg.radix)
    return AsymmetricLat(AsymmetricConfig(tuple(radices), cfg.key_bits))


STRUCTURES: Dict[str, Callable[[BenchConfig], object]] = {
    "lat_linked": lambda cfg: Lat(_lat_config(cfg)),
    "lat_unlinked": lambda cfg: UnlinkedLat(_lat_config(cfg)),
    "lat_asymmetric": _asymmetric,
    "baseline_ordered_map": lambda cfg: SortedDictMap(),
    "baseline_btree_map": lambda cfg: BTreeMap(),
}


def build_structure(name: str, config: BenchConfig = BenchConfig()):
    try:
        factory = STRUCTURES[name]
    except KeyError:
        raise UnknownStructure(f"unknown structure {name!r}; choose from {', '.join(STRUCTURES)}") from None
    return factory(config)


@dataclass(frozen=True)
class Workload:
    kind: WorkloadKind
    n: int
    seed: int = 0
    key_bits: int = 64

    def __post_init__(self):
        object.__setattr__(self, "kind", WorkloadKind(self.kind))
        if self.n < 1:
            raise ValueError("workload size n must be at least 1")
        if self.kind.sparse and self.n > 1 << self.key_bits:
            raise ValueError(f"cannot draw {self.n} distinct {self.key_bits}-bit keys")

    def keys(self) -> Sequence[int]:
        """Keys in insertion order."""
        if not self.kind.sparse:
            return range(self.n)
        return sparse_keys(self.n, self.key_bits, self.seed)

    def access_order(self, keys: Sequence[int]) -> Sequence[int]:
        """Keys in the order the timed search or delete phase visits them."""
        if not self.kind.sparse:
            return keys
        order = list(keys)
        SplitMix64(self.seed ^ _ORDER_SALT).shuffle(order)
        return order


def sparse_keys(n: int, key_bits: int, seed: int) -> List[int]:
    """``n`` distinct uniform ``key_bits``-wide keys, in draw order."""
    rng = SplitMix64(seed)
    seen = set()
    keys = []
    while len(keys) < n:
        k = rng.bits(key_bits)
        if k not in seen:
            seen.add(k)
            keys.append(k)
    return keys


@dataclass
class BenchRecord:
    structure: str
    workload: str
    n: int
    radix: Optional[int]
    height: Optional[int]
    seed: int
    total_ns: int
    arrays: Optional[int] = None
    slots: Optional[int] = None
    bytes: Optional[int] = None
    checksum: Optional[int] = None

    @property
    def ns_per_op(self) -> float:
        return self.total_ns / self.n


def _shape(structure):
    height = getattr(structure, "height", None)
    radices = getattr(structure, "radices", None)
    return (radices[0] if radices else None), height


def _record(name, kind, n, seed, total_ns, structure, checksum=None) -> BenchRecord:
    radix, height = _shape(structure)
    rec = BenchRecord(name, kind, n, radix, height, seed, total_ns, checksum=checksum)
    footprint = getattr(structure, "memory_footprint", None)
    if footprint is not None:
        fp = footprint()
        rec.arrays, rec.slots, rec.bytes = fp.arrays, fp.slots, fp.bytes
    return rec


def _populate(structure, keys):
    put = structure.put
    for k in keys:
        put(k, k)
    return structure


def _time_insert(structure, keys):
    put = structure.put
    start = time.perf_counter_ns()
    for k in keys:
        put(k, k)
    return time.perf_counter_ns() - start, len(structure)


def _time_search(structure, keys):
    get = structure.get
    acc = 0
    start = time.perf_counter_ns()
    for k in keys:
        acc += get(k)
    return time.perf_counter_ns() - start, acc


def _time_delete(structure, keys):
    remove = structure.remove
    acc = 0
    start = time.perf_counter_ns()
    for k in keys:
        acc += remove(k)
    return time.perf_counter_ns() - start, acc


def _time_iterate(structure, keys):
    acc = 0
    start = time.perf_counter_ns()
    for _, v in structure.iterate():
        acc += v
    return time.perf_counter_ns() - start, acc


def run_bench(
    structure: str,
    workload: Workload,
    config: BenchConfig = BenchConfig(),
    repeats: int = 3,
    warmup: int = 1,
) -> BenchRecord:
    """Time one workload; report the median of ``repeats`` runs after ``warmup`` discarded runs.

    Population for search, delete and iterate workloads is not timed.
    Memory columns describe the structure left behind by the last run.
    """
    if structure not in STRUCTURES:
        raise UnknownStructure(f"unknown structure {structure!r}; choose from {', '.join(STRUCTURES)}")
    if workload.key_bits > config.key_bits:
        raise UnsupportedCombination(
            f"{workload.key_bits}-bit workload keys do not fit a {config.key_bits}-bit structure")
    keys = workload.keys()
    order = workload.access_order(keys)
    phase = workload.kind.phase

    with gc_paused():
        times, checksum, last = _run_phases(structure, config, keys, order, phase, warmup + repeats)
    total_ns = int(statistics.median(times[warmup:]))
    return _record(structure, workload.kind.value, workload.n, workload.seed, total_ns, last, checksum)


def _run_phases(structure, config, keys, order, phase, runs):
    times = []
    checksum = last = shared = None
    for _ in range(runs):
        last = target = None
        if phase == "insert":
            target = build_structure(structure, config)
            elapsed, checksum = _time_insert(target, keys)
        elif phase == "delete":
            target = _populate(build_structure(structure, config), keys)
            elapsed, checksum = _time_delete(target, order)
        else:
            if shared is None:
                shared = _populate(build_structure(structure, config), keys)
            target = shared
            timer = _time_search if phase == "search" else _time_iterate
            elapsed, checksum = timer(target, order)
        times.append(elapsed)
        last = target
    return times, checksum, last


def memory_curve(
    structure: str,
    key_bits: int,
    pattern: str,
    steps: int,
    seed: int = 0,
    config: Optional[BenchConfig] = None,
) -> List[BenchRecord]:
    """Insert the whole ``key_bits`` domain in ``steps`` batches, sampling memory after each.

    ``intensive`` inserts keys in ascending order, ``sparse`` in a random
    permutation.  ``n`` and ``total_ns`` in each record are cumulative.
    """
    if pattern not in ("intensive", "sparse"):
        raise ValueError(f"pattern must be 'intensive' or 'sparse', got {pattern!r}")
    if not 1 <= key_bits <= 20:
        raise UnsupportedCombination("memory curves enumerate the key domain; key_bits must be in 1..20")
    domain = 1 << key_bits
    if not 1 <= steps <= domain:
        raise ValueError(f"steps must be in 1..{domain}")
    if config is None:
        config = BenchConfig(key_bits=key_bits)
    elif config.key_bits != key_bits:
        config = BenchConfig(config.radix, key_bits, config.radices)
    target = build_structure(structure, config)

    keys = list(range(domain))
    if pattern == "sparse":
        SplitMix64(seed).shuffle(keys)
    workload = f"{pattern}_insert"
    records = []
    total_ns = 0
    with gc_paused():
        for step in range(steps):
            batch = keys[step * domain // steps:(step + 1) * domain // steps]
            elapsed, _ = _time_insert(target, batch)
            total_ns += elapsed
            done = (step + 1) * domain // steps
            records.append(_record(structure, workload, done, seed, total_ns, target))
    return records


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.3f}"
    return str(value)


def _row(rec: BenchRecord) -> List[str]:
    return [_cell(getattr(rec, name)) for name in CSV_HEADER]


def emit_csv(records: Iterable[BenchRecord], destination: Union[str, os.PathLike, io.TextIOBase]) -> None:
    """Write records under the fixed header.

    A path destination is written through a temporary file in the same
    directory and renamed into place, so a failure never leaves a partial file.
    """
    rows = [CSV_HEADER] + [_row(r) for r in records]
    if hasattr(destination, "write"):
        csv.writer(destination, lineterminator="\n").writerows(rows)
        return
    path = os.fspath(destination)
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".lat-", suffix=".csv", dir=directory)
        try:
            with os.fdopen(fd, "w", newline="") as fp:
                csv.writer(fp, lineterminator="\n").writerows(rows)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_csv(source: Union[str, os.PathLike, io.TextIOBase]) -> List[BenchRecord]:
    """Parse a file written by ``emit_csv`` back into records (checksums are not stored)."""
    if not hasattr(source, "read"):
        with open(source, newline="") as fp:
            return read_csv(fp)
    reader = csv.reader(source)
    header = next(reader, None)
    if header != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header!r}")
    int_fields = {f.name for f in fields(BenchRecord)} - {"structure", "workload"}
    records = []
    for row in reader:
        data = dict(zip(CSV_HEADER, row))
        data.pop("ns_per_op")
        for name in int_fields & data.keys():
            data[name] = int(data[name]) if data[name] != "" else None
        records.append(BenchRecord(**data))
    return records


def format_table(records: Sequence[BenchRecord]) -> str:
    """Plain aligned summary for the terminal."""
    head = ["structure", "workload", "n", "ns/op", "arrays", "bytes", "checksum"]
    rows = [[r.structure, r.workload, str(r.n), f"{r.ns_per_op:.1f}", _cell(r.arrays), _cell(r.bytes), _cell(r.checksum)]
            for r in records]
    widths = [max(len(x) for x in col) for col in zip(head, *rows)]
    lines = ["  ".join(x.ljust(w) for x, w in zip(line, widths)).rstrip() for line in [head] + rows]
    return "\n".join(lines)
