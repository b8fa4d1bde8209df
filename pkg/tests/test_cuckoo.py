import random

import pytest

from backyard.cuckoo import (
    CuckooState,
    cuckoo_delete,
    cuckoo_insert,
    cuckoo_lookup,
    cuckoo_new,
    evict_reconstruct,
    table_size,
)
from backyard.errors import ParameterError, StructuralFailure
from backyard.hash_family import make_rng, sample_kwise, MERSENNE_61
from backyard.permutations import ChoppedPerm, FeistelPerm, IdentityPerm, TablePerm


def perm_state(ell, u, seed, L=10, **kw):
    r = table_size(ell, 0.2)
    u -= u % r
    rng = random.Random(seed)
    return CuckooState(ell, 0.2, "permutation", perms=(TablePerm.random(u, rng), TablePerm.random(u, rng)),
                       L=L, r=r, **kw)


def test_table_size_and_errors():
    assert table_size(1024, 0.2) == 1229
    assert cuckoo_new(1024).r == 1229
    with pytest.raises(ParameterError):
        cuckoo_new(0)
    with pytest.raises(ParameterError):
        CuckooState(4, 0.0, "permutation", perms=(IdentityPerm(15), IdentityPerm(15)), r=4)


def test_first_insert_lands_in_t1():
    s = CuckooState(4, 0.0, hashes=(lambda x: 2, lambda x: 1), r=4)
    assert cuckoo_insert(s, 7) == "ok"
    assert s.T[0][2] == 7 and not s.queue
    assert s.where(7) == (0, 2)


def test_l_zero_keeps_key_in_queue():
    s = CuckooState(8, L=0, rng=1)
    s.insert(5)
    assert list(s.queue) == [5]
    assert cuckoo_lookup(s, 5)
    assert cuckoo_delete(s, 5) == "removed"
    assert not cuckoo_lookup(s, 5)
    assert cuckoo_delete(s, 5) == "absent"


def test_duplicate_insert_is_noop():
    s = CuckooState(8, rng=2)
    s.insert(5)
    s.insert(5)
    assert len(s) == 1 and s.members() == [5]


def test_second_cycle_parks_key_without_livelock():
    # three keys, two cells in total: every walk must end in a second cycle
    s = CuckooState(3, 0.0, hashes=(lambda x: 0, lambda x: 0), r=1, L=10, queue_capacity=10)
    for x in (1, 2, 3):
        s.insert(x)
    assert s.second_cycles >= 1
    for _ in range(10_000):
        s.process(10)
        assert len(s.queue) == 1
        assert all(s.contains(x) for x in (1, 2, 3))
        assert sorted(s.members()) == [1, 2, 3]
    assert s.max_moves <= 10


def test_queue_overflow_is_structural():
    s = CuckooState(4, 0.0, hashes=(lambda x: 0, lambda x: 0), r=1, L=1, queue_capacity=2)
    # two cells plus two queue slots hold four keys; the fifth overflows
    assert [cuckoo_insert(s, x) for x in range(1, 6)] == ["ok"] * 4 + ["structural_failure"]
    assert s.failed and s.queue_high == 3
    with pytest.raises(StructuralFailure):
        s.insert(6)


def test_reconstruct_examples():
    s = CuckooState(4, 0.0, "permutation", perms=(IdentityPerm(16), IdentityPerm(16)), r=4)
    assert s.reconstruct(0, 3, 1) == 13
    s.insert(13)
    assert s.T[0][3] == 1
    assert evict_reconstruct(s, 0, 3) == 13
    f = FeistelPerm(lambda v: 0, 4, 4)
    t = CuckooState(4, 0.0, "permutation", perms=(f, f), r=4)
    chopper = ChoppedPerm(f, 4)
    for x in range(16):
        assert t.locate(x, 0) == chopper.chop(x)


def test_reconstruct_round_trip_exhaustive_2_10():
    s = perm_state(64, 1 << 10, 3)
    for x in range(s.universe_size):
        for b in (0, 1):
            c, i = s.locate(x, b)
            assert s.reconstruct(b, c, i) == x


def test_identities_never_confuse_lookup_2_12():
    u = 1 << 12
    rng = random.Random(4)
    s = CuckooState(256, 0.0, "permutation", perms=(TablePerm.random(u, rng), TablePerm.random(u, rng)), r=256)
    present = set(rng.sample(range(u), 200))
    for x in present:
        s.insert(x)
    while s.queue:
        s.process(100)
    assert [x for x in range(u) if s.contains(x)] == sorted(present)


def _fuzz(s, ops, seed, u):
    rng = random.Random(seed)
    model = set()
    pool = rng.sample(range(u), 2 * s.ell)
    for _ in range(ops):
        x = rng.choice(pool)
        r = rng.random()
        if r < 0.45 and len(model) < s.ell:
            s.insert(x)
            model.add(x)
            assert s.last_moves <= s.L
        elif r < 0.7:
            assert s.delete(x) == (x in model)
            model.discard(x)
        else:
            assert s.contains(x) == (x in model)
        assert len(s) == len(model)
    assert sorted(s.members()) == sorted(model)
    for x in model:
        w = s.where(x)
        hits = (x in s.queue) + sum(s.T[b][s.locate(x, b)[0]] == s.locate(x, b)[1] for b in (0, 1))
        assert w is not None and hits == 1


def test_function_mode_model_fuzz():
    s = CuckooState(256, rng=5)
    _fuzz(s, 100_000, 5, 1 << 32)


def test_permutation_mode_model_fuzz():
    s = perm_state(256, 1 << 16, 6)
    _fuzz(s, 100_000, 6, s.universe_size)


def test_modes_agree_on_the_same_sequence():
    u = 1 << 16
    f = CuckooState(128, rng=7, universe_size=u)
    p = perm_state(128, u, 7)
    rng = random.Random(7)
    pool = rng.sample(range(p.universe_size), 256)
    for _ in range(20_000):
        x = rng.choice(pool)
        op = rng.random()
        if op < 0.45 and len(f) < 128:
            f.insert(x)
            p.insert(x)
        elif op < 0.7:
            assert f.delete(x) == p.delete(x)
        assert f.contains(x) == p.contains(x)
    assert sorted(f.members()) == sorted(p.members())


def test_permutation_failure_rate_not_worse():
    # full load at r = ceil(1.2 * 1.25 * ell) on paired seeds; count structural failures
    ell, u, trials = 48, 1 << 14, 100
    r = -(-12 * 125 * ell // 1000)
    fails = {"function": 0, "permutation": 0}
    for seed in range(trials):
        keys = random.Random(seed).sample(range(u - u % r), ell)
        rng = make_rng(seed)
        states = {
            "function": CuckooState(ell, r=r, L=2, queue_capacity=3, universe_size=u,
                                    hashes=(sample_kwise(8, u, r, rng, MERSENNE_61),
                                            sample_kwise(8, u, r, rng, MERSENNE_61))),
            "permutation": CuckooState(ell, 0.2, "permutation", r=r, L=2, queue_capacity=3,
                                       perms=(TablePerm.random(u - u % r, rng), TablePerm.random(u - u % r, rng))),
        }
        for name, s in states.items():
            try:
                for x in keys:
                    s.insert(x)
            except StructuralFailure:
                fails[name] += 1
    assert fails["function"] > 0
    p = (fails["function"] + fails["permutation"]) / (2 * trials)
    sigma = (2 * trials * p * (1 - p)) ** 0.5
    assert fails["permutation"] <= fails["function"] + 3 * sigma


def test_bits_and_descriptor():
    s = perm_state(64, 1 << 10, 8)
    assert s.cell_bits == (s.q).bit_length()
    assert s.bits()["cells"] == 2 * s.r * s.cell_bits
    assert s.descriptor()["mode"] == "permutation"
