import io
from collections import Counter

import pytest
from scipy.stats import chi2

from lattree import AsymmetricLat, Lat, UnlinkedLat
from lattree.oracle import (
    Op,
    OpKind,
    OpScript,
    ReferenceMap,
    SplitMix64,
    dump_script,
    gen_script,
    load_script,
    parse_script,
    run_differential,
)


def test_splitmix64_reference_outputs():
    # Published test vector for seed 1234567.
    rng = SplitMix64(1234567)
    assert [rng.next() for _ in range(5)] == [
        6457827717110365317,
        3203168211198807973,
        9817491932198370423,
        4593380528125082431,
        16408922859458223821,
    ]
    assert SplitMix64(0).next() == 0xE220A8397B1DCDAF


def test_below_and_shuffle():
    rng = SplitMix64(3)
    assert all(0 <= rng.below(7) < 7 for _ in range(1000))
    items = list(range(50))
    rng.shuffle(items)
    assert sorted(items) == list(range(50)) and items != list(range(50))
    with pytest.raises(ValueError):
        rng.below(0)


def test_sequential_script():
    script = gen_script(1, 10, 8, "sequential")
    assert len(script) == 10
    assert {op.key for op in script.ops if op.kind is not OpKind.ITERATE} <= set(range(10))
    puts = [op.key for op in script.ops if op.kind is OpKind.PUT]
    assert puts == sorted(puts)


def test_same_seed_same_script():
    for dist in ("sequential", "uniform_random", "clustered"):
        assert gen_script(99, 2000, 20, dist) == gen_script(99, 2000, 20, dist)
    assert gen_script(1, 500, 32) != gen_script(2, 500, 32)


def test_script_needs_ops():
    with pytest.raises(ValueError):
        gen_script(1, 0, 8)


def test_uniform_keys_pass_chi_square():
    script = gen_script(5, 10_000, 16, "uniform_random")
    fresh = [op.key for op in script.ops if op.kind is OpKind.PUT]
    bins = Counter(k >> 12 for k in fresh)
    expected = len(fresh) / 16
    stat = sum((bins[b] - expected) ** 2 / expected for b in range(16))
    assert stat < chi2.ppf(0.999, df=15)


def test_clustered_keys_form_runs():
    script = gen_script(5, 5000, 32, "clustered")
    puts = [op.key for op in script.ops if op.kind is OpKind.PUT]
    adjacent = sum(1 for a, b in zip(puts, puts[1:]) if b == a + 1)
    assert adjacent > len(puts) // 3


def test_script_mixes_every_kind():
    counts = Counter(op.kind for op in gen_script(8, 20_000, 32).ops)
    assert set(counts) == set(OpKind)
    assert counts[OpKind.PUT] > counts[OpKind.GET] > counts[OpKind.ITERATE]


def test_reference_model_against_itself():
    script = gen_script(4, 3000, 12, "clustered")
    assert run_differential(script, ReferenceMap()).passed


class Faulty(ReferenceMap):
    def __init__(self, bad_index):
        super().__init__()
        self.calls = 0
        self.bad_index = bad_index

    def _tick(self, result):
        self.calls += 1
        if self.calls - 1 == self.bad_index:
            return "wrong"
        return result

    def get(self, key):
        return self._tick(super().get(key))

    def put(self, key, value):
        return self._tick(super().put(key, value))

    def remove(self, key):
        return self._tick(super().remove(key))


def test_injected_fault_is_reported_at_its_index():
    script = OpScript(0, 8, (Op(OpKind.PUT, 1, 5), Op(OpKind.GET, 1), Op(OpKind.GET, 2), Op(OpKind.REMOVE, 1)))
    verdict = run_differential(script, Faulty(2))
    assert not verdict.passed
    d = verdict.first_divergence
    assert (d.index, d.expected, d.actual) == (2, None, "wrong")


def test_exception_is_a_divergence():
    script = OpScript(0, 16, (Op(OpKind.PUT, 3, 1), Op(OpKind.PUT, 9999, 2)))
    verdict = run_differential(script, Lat(radix=4, height=2, auto_grow=False))
    d = verdict.first_divergence
    assert d.index == 1 and d.expected is None
    assert isinstance(d.actual, Exception)


def test_lost_content_caught_by_final_iteration():
    class Forgetful(ReferenceMap):
        def iterate(self):
            return iter([])

    script = OpScript(0, 8, (Op(OpKind.PUT, 3, 1),))
    verdict = run_differential(script, Forgetful())
    assert verdict.first_divergence.index == 1


@pytest.mark.parametrize("factory", [
    lambda: Lat(radix=16, key_bits=24),
    lambda: UnlinkedLat(radix=16, key_bits=24),
    lambda: AsymmetricLat((256, 16, 16, 16, 16)),
])
@pytest.mark.parametrize("dist", ["sequential", "uniform_random", "clustered"])
def test_trees_pass_differential(factory, dist):
    script = gen_script(17, 5000, 24, dist)
    verdict = run_differential(script, factory())
    assert verdict.passed, verdict.first_divergence


def test_replay_is_deterministic():
    script = gen_script(2, 3000, 16, "clustered")
    a, b = Lat(radix=4, key_bits=16), Lat(radix=4, key_bits=16)
    run_differential(script, a)
    run_differential(script, b)
    assert list(a.iterate()) == list(b.iterate())
    assert a.counters == b.counters


def test_text_format_round_trip(tmp_path):
    script = gen_script(7, 1000, 64, "uniform_random")
    path = tmp_path / "s.txt"
    dump_script(script, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "seed=7 key_bits=64"
    assert all(len(line.split()) in (2, 3) for line in lines[1:])
    assert load_script(path) == script
    buf = io.StringIO()
    dump_script(script, buf)
    assert parse_script(buf.getvalue()) == script


def test_parse_accepts_bare_iterate_and_rejects_garbage():
    script = parse_script("seed=1 key_bits=8\nput 3 4\niterate\nget 3\n")
    assert [op.kind for op in script.ops] == [OpKind.PUT, OpKind.ITERATE, OpKind.GET]
    for bad in ("", "nonsense\n", "seed=1 key_bits=8\nfly 3\n", "seed=1 key_bits=8\nput 3\n", "seed=1 key_bits=8\nget 3 4\n"):
        with pytest.raises(ValueError):
            parse_script(bad)
