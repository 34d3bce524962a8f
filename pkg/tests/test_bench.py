import io

import pytest

from lattree import IoFailure, UnknownStructure
from lattree.bench import (
    CSV_HEADER,
    STRUCTURES,
    BenchConfig,
    BenchRecord,
    Workload,
    WorkloadKind,
    build_structure,
    emit_csv,
    memory_curve,
    read_csv,
    run_bench,
    sparse_keys,
)
from lattree.oracle import ReferenceMap


def test_workload_keys():
    assert list(Workload("intensive_insert", 5).keys()) == [0, 1, 2, 3, 4]
    keys = Workload("sparse_insert", 1000, seed=3, key_bits=20).keys()
    assert len(set(keys)) == 1000 and all(0 <= k < 2 ** 20 for k in keys)
    assert keys == Workload("sparse_search", 1000, seed=3, key_bits=20).keys()
    assert keys != Workload("sparse_insert", 1000, seed=4, key_bits=20).keys()


def test_sparse_access_order_is_a_fresh_permutation():
    w = Workload("sparse_delete", 500, seed=1, key_bits=32)
    keys = w.keys()
    order = w.access_order(keys)
    assert sorted(order) == sorted(keys) and order != keys
    assert order == w.access_order(keys)


def test_workload_rejects_empty_and_impossible():
    with pytest.raises(ValueError):
        Workload("intensive_search", 0)
    with pytest.raises(ValueError):
        Workload("sparse_insert", 300, key_bits=8)
    with pytest.raises(ValueError):
        Workload("bogus", 10)


@pytest.mark.parametrize("name", sorted(STRUCTURES))
@pytest.mark.parametrize("kind", [k.value for k in WorkloadKind])
def test_every_structure_runs_every_workload(name, kind):
    n = 300
    cfg = BenchConfig(radix=16, key_bits=24)
    rec = run_bench(name, Workload(kind, n, seed=9, key_bits=24), cfg, repeats=1, warmup=0)
    assert rec.structure == name and rec.workload == kind and rec.n == n
    assert rec.ns_per_op == rec.total_ns / n
    keys = Workload(kind, n, seed=9, key_bits=24).keys()
    phase = WorkloadKind(kind).phase
    expected = n if phase == "insert" else sum(keys)
    assert rec.checksum == expected
    if name.startswith("lat"):
        assert rec.arrays is not None and rec.bytes is not None
    else:
        assert rec.arrays is rec.slots is rec.bytes is None


@pytest.mark.parametrize("name", sorted(STRUCTURES))
def test_insert_workload_content_matches_oracle(name):
    keys = sparse_keys(2000, 32, 5)
    s = build_structure(name, BenchConfig(radix=16, key_bits=32))
    model = ReferenceMap()
    for k in keys:
        s.put(k, k)
        model.put(k, k)
    assert list(s.iterate()) == list(model.iterate())


def test_memory_fields_match_structure_walk():
    rec = run_bench("lat_linked", Workload("intensive_insert", 10_000, key_bits=64), repeats=1, warmup=0)
    assert (rec.radix, rec.height) == (256, 8)
    t = build_structure("lat_linked")
    for k in range(10_000):
        t.put(k, k)
    fp = t.memory_footprint()
    assert (rec.arrays, rec.slots, rec.bytes) == (fp.arrays, fp.slots, fp.bytes)
    assert fp.arrays == t.counters.allocations - t.counters.frees


def test_unknown_structure():
    with pytest.raises(UnknownStructure):
        run_bench("splay_tree", Workload("intensive_insert", 10))
    with pytest.raises(UnknownStructure):
        build_structure("splay_tree")


def test_memory_curve_intensive_full_coverage():
    curve = memory_curve("lat_linked", 16, "intensive", 16, config=BenchConfig(radix=16))
    assert len(curve) == 16
    assert [r.n for r in curve] == [4096 * (i + 1) for i in range(16)]
    assert curve[-1].slots == 69_904
    sizes = [r.bytes for r in curve]
    assert sizes == sorted(sizes)
    deltas = [b - a for a, b in zip(sizes, sizes[1:])]
    # Every 4096-key batch fills exactly one level-1 subtree.
    assert len(set(deltas)) == 1


def test_memory_curve_sparse_flattens():
    curve = memory_curve("lat_linked", 12, "sparse", 8, seed=2, config=BenchConfig(radix=16))
    sizes = [0] + [r.bytes for r in curve]
    deltas = [b - a for a, b in zip(sizes, sizes[1:])]
    assert deltas[0] > deltas[-1]
    assert curve[-1].slots == 16 + 256 + 4096


def test_memory_curve_baseline_has_no_memory_columns():
    curve = memory_curve("baseline_ordered_map", 10, "sparse", 4)
    assert all(r.bytes is None for r in curve)


def test_memory_curve_rejects_wide_keys():
    with pytest.raises(ValueError):
        memory_curve("lat_linked", 24, "intensive", 4)
    with pytest.raises(ValueError):
        memory_curve("lat_linked", 8, "diagonal", 4)


def _records():
    return [
        BenchRecord("lat_linked", "intensive_insert", 1000, 256, 8, 42, 123456, 5, 1280, 10360),
        BenchRecord("baseline_ordered_map", "sparse_search", 7, None, None, 1, 999),
    ]


def test_csv_header_only(tmp_path):
    path = tmp_path / "r.csv"
    emit_csv([], path)
    assert path.read_text() == ",".join(CSV_HEADER) + "\n"


def test_csv_one_record():
    buf = io.StringIO()
    emit_csv(_records()[:1], buf)
    lines = buf.getvalue().splitlines()
    assert lines == [
        "structure,workload,n,radix,height,seed,total_ns,ns_per_op,arrays,slots,bytes",
        "lat_linked,intensive_insert,1000,256,8,42,123456,123.456,5,1280,10360",
    ]


def test_csv_missing_memory_is_empty():
    buf = io.StringIO()
    emit_csv(_records()[1:], buf)
    assert buf.getvalue().splitlines()[1] == "baseline_ordered_map,sparse_search,7,,,1,999,142.714,,,"


def test_csv_round_trip(tmp_path):
    path = tmp_path / "r.csv"
    emit_csv(_records(), path)
    assert read_csv(path) == _records()


def test_csv_failure_leaves_nothing(tmp_path):
    with pytest.raises(IoFailure):
        emit_csv(_records(), tmp_path / "missing-dir" / "r.csv")
    assert list(tmp_path.iterdir()) == []
