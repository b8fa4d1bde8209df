import random

import pytest
from hypothesis import given, settings, strategies as st

from backyard.bins import (
    BinomialBinTable,
    PHFBinTable,
    PlainBinTable,
    make_bin_table,
    pack_fields,
    phf_bin_delete,
    phf_bin_insert,
    phf_bin_lookup,
    plain_bin_delete,
    plain_bin_insert,
    plain_bin_lookup,
    process_bin_queue,
    unpack_fields,
)
from backyard.errors import DuplicateError, ParameterError, StructuralFailure


@given(st.integers(1, 70).flatmap(lambda w: st.tuples(st.just(w), st.lists(st.integers(0, (1 << w) - 1)))))
def test_pack_round_trip(args):
    w, vals = args
    words = pack_fields(vals, w)
    assert len(words) == -(-len(vals) * w // 64)
    assert all(0 <= x < 1 << 64 for x in words)
    assert unpack_fields(words, w, len(vals)) == vals


def test_pack_layout_is_little_endian():
    assert pack_fields([1, 2, 3], 4) == [0x321]
    assert pack_fields([1] * 17, 4)[1] == 1
    with pytest.raises(ParameterError):
        pack_fields([16], 4)


def test_plain_examples():
    t = PlainBinTable(3, 4, 32)
    assert plain_bin_lookup(t, 0, 9) is None
    assert plain_bin_insert(t, 0, 9) == "inserted"
    assert t.rows[0][0] == 9 and plain_bin_lookup(t, 0, 9) == 0
    with pytest.raises(DuplicateError):
        t.insert(0, 9)
    for x in (1, 2, 3):
        assert plain_bin_insert(t, 0, x) == "inserted"
    before = list(t.rows[0])
    assert plain_bin_insert(t, 0, 77) == "bin_full"
    assert t.rows[0] == before and t.load(0) == 4
    assert plain_bin_delete(t, 0, 9) == "removed"
    assert plain_bin_lookup(t, 0, 9) is None
    assert plain_bin_delete(t, 0, 9) == "absent"
    assert plain_bin_insert(t, 0, 5) == "inserted" and t.rows[0][0] == 5


def test_phf_examples():
    t = PHFBinTable(4, 8, 32, rng=1, L_bin=1000)
    assert process_bin_queue(t, 100) == 0
    assert phf_bin_insert(t, 2, 41) == "enqueued"
    assert t.queue_len == 0
    j = phf_bin_lookup(t, 2, 41)
    assert j is not None and j >= 0 and t.g[2][t._h(2, 41)] == j
    assert phf_bin_lookup(t, 1, 41) is None
    assert phf_bin_delete(t, 2, 41) == "removed"
    assert phf_bin_lookup(t, 2, 41) is None
    assert phf_bin_delete(t, 2, 41) == "absent"


def test_phf_collision_forces_rehash():
    t = PHFBinTable(1, 8, 32, rng=2, L_bin=1000)
    t.nu[0] = 8
    t.ha[0], t.hb[0] = 0, 17  # every key lands on hash value 17
    t.insert(0, 3)
    assert t.rehashes_collision == 0
    t.insert(0, 4)
    assert t.rehashes_collision == 1
    assert t.contains(0, 3) and t.contains(0, 4)
    assert len(set(t.g[0])) == 2


def test_phf_nu_one_rehashes_on_first_update():
    t = PHFBinTable(1, 8, 32, rng=3, L_bin=1000)
    t.nu[0] = 1
    t.insert(0, 10)
    assert t.rehashes_forced == 1 and t.contains(0, 10)


def test_phf_tombstones_cleared_by_rehash():
    t = PHFBinTable(1, 4, 32, rng=4, L_bin=1000)
    t.nu[0] = 4
    for x in (1, 2, 3):
        t.insert(0, x)
    t.delete(0, 2)
    assert t.tomb[0] == 0 and t.rehashes_forced == 1
    assert sorted(t.members(0)) == [1, 3]


def test_phf_small_budget_keeps_membership():
    t = PHFBinTable(2, 8, 32, rng=5, L_bin=1)
    for x in range(6):
        t.insert(x % 2, x)
        assert all(t.contains(y % 2, y) for y in range(x + 1))
    assert t.queue_len > 0
    while t.queue_len:
        t.drive(1)
    assert sorted(t.members(0) + t.members(1)) == list(range(6))


def test_phf_queue_overflow_is_structural():
    t = PHFBinTable(8, 8, 32, rng=6, L_bin=0, queue_capacity=3)
    with pytest.raises(StructuralFailure):
        for x in range(10):
            t.insert(x % 8, x)
    with pytest.raises(StructuralFailure):
        t.insert(0, 99)


def test_phf_descriptor_budget():
    for d in (8, 16, 64):
        t = PHFBinTable(1, d, 32)
        lg = (d - 1).bit_length()
        assert t.descriptor_bits_per_bin() <= 3 * d * lg + 2 * 64


def test_phf_rehash_resamples_are_few():
    t = PHFBinTable(64, 16, 32, rng=7, L_bin=64)
    rng = random.Random(7)
    for x in rng.sample(range(1 << 30), 900):
        b = x % 64
        if t.has_vacancy(b):
            t.insert(b, x)
    att = t.rehash_attempts
    assert len(att) > 50
    assert sum(att) / len(att) <= 2
    assert max(att) <= 20


def _fuzz(table, ops, seed, drain=False):
    rng = random.Random(seed)
    model = [set() for _ in range(table.m)]
    ids = list(range(40))
    for _ in range(ops):
        b = rng.randrange(table.m)
        x = rng.choice(ids)
        r = rng.random()
        if r < 0.45:
            if x in model[b]:
                assert table.contains(b, x)
                continue
            ok = table.insert(b, x)
            assert ok == (len(model[b]) < table.d)
            if ok:
                model[b].add(x)
        elif r < 0.75:
            assert table.delete(b, x) == (x in model[b])
            model[b].discard(x)
        else:
            assert table.contains(b, x) == (x in model[b])
        assert table.load(b) == len(model[b]) <= table.d
    for b in range(table.m):
        assert sorted(table.members(b)) == sorted(model[b])


@pytest.mark.parametrize("mode", ["plain", "phf", "binomial"])
def test_model_fuzz(mode):
    t = make_bin_table(mode, 16, 8, 32, rng=8, L_bin=6, queue_capacity=10**6, q=40)
    _fuzz(t, 100_000, 8)


def test_phf_fuzz_mid_rehash_windows():
    # a tiny step budget keeps rehashes spread over many calls
    t = PHFBinTable(4, 16, 32, rng=9, L_bin=2, queue_capacity=10**6)
    _fuzz(t, 50_000, 9)
    assert t.rehashes > 100


@pytest.mark.parametrize("mode", ["plain", "phf", "binomial"])
def test_export_restore(mode):
    kw = {"empty_code": 1 << 20} if mode == "plain" else {}
    t = make_bin_table(mode, 8, 8, 21, rng=10, L_bin=1000, q=1 << 20, **kw)
    rng = random.Random(10)
    for x in rng.sample(range(1 << 20), 40):
        if t.has_vacancy(x % 8):
            t.insert(x % 8, x)
    for x in list(t.members(3))[:2]:
        t.delete(3, x)
    t.drive(10**6)
    u = make_bin_table(mode, 8, 8, 21, rng=11, L_bin=1000, q=1 << 20, **kw)
    u.restore(t.export())
    for b in range(8):
        assert sorted(u.members(b)) == sorted(t.members(b))
        assert all(u.contains(b, x) for x in t.members(b))
    assert u.export() == t.export()


def test_binomial_rejects_out_of_range():
    t = BinomialBinTable(2, 3, 10)
    with pytest.raises(ParameterError):
        t.insert(0, 10)
    assert t.bits()["cells"] == 2 * t.code.bits
