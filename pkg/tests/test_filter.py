import numpy as np
import pytest

from backyard.errors import CapacityError, ParameterError
from backyard.filter import (
    DEFINITELY_ABSENT,
    MAYBE_PRESENT,
    MembershipFilter,
    bits_envelope,
    filter_insert,
    filter_new,
    filter_query,
    reduced_universe,
)


def test_reduced_universe_examples():
    assert reduced_universe(1000, 0.01) == 100_000
    assert reduced_universe(10, 0.25) == 40
    assert reduced_universe(3, 0.7) == 5
    for bad in (0, 1, -0.5, 2):
        with pytest.raises(ParameterError):
            reduced_universe(10, bad)


def test_filter_universe_and_errors():
    f = filter_new(1000, 0.01, 1)
    assert f.R == 100_000 == f.dict.u
    with pytest.raises(ParameterError):
        filter_new(10, 1.0)
    with pytest.raises(ParameterError):
        MembershipFilter(10, 0.1, backend="bloom")


def test_empty_filter_rejects_everything():
    f = filter_new(100, 0.01, 2)
    xs = np.random.default_rng(2).integers(0, 1 << 32, size=2000, dtype=np.uint64)
    assert not f.query_many(xs).any()
    assert filter_query(f, 12345) == DEFINITELY_ABSENT


@pytest.mark.parametrize("backend", ["succinct", "backyard"])
def test_no_false_negatives_and_capacity(backend):
    n = 500
    f = MembershipFilter(n, 0.01, seed=3, backend=backend)
    keys = np.random.default_rng(3).choice(1 << 32, 5 * n, replace=False).tolist()
    inserted = []
    for x in keys:
        if f.inserted == n:
            break
        assert filter_insert(f, x) == "ok"
        inserted.append(x)
    assert all(filter_query(f, x) == MAYBE_PRESENT for x in inserted)
    assert f.query_many(inserted).all()
    f.insert(inserted[0])  # duplicate hashed value: no-op
    assert f.inserted == n
    fresh = next(x for x in keys if f.h(x) not in {f.h(y) for y in inserted})
    with pytest.raises(CapacityError):
        f.insert(fresh)


def test_query_many_matches_query():
    f = filter_new(300, 0.05, 4)
    gen = np.random.default_rng(4)
    for x in gen.integers(0, 1 << 32, size=300).tolist():
        f.insert(x)
    qs = gen.integers(0, 1 << 32, size=5000, dtype=np.uint64)
    assert f.query_many(qs).tolist() == [f.query(int(x)) == MAYBE_PRESENT for x in qs]


def test_fpr_over_several_hash_draws():
    n, delta, q = 2000, 0.05, 20_000
    rates = []
    for seed in range(5):
        f = filter_new(n, delta, seed)
        gen = np.random.default_rng(seed)
        keys = gen.choice(1 << 31, n, replace=False)
        for x in keys.tolist():
            if f.inserted < n:
                f.insert(x)
        probes = gen.integers(1 << 31, 1 << 32, size=q, dtype=np.uint64)
        rates.append(f.query_many(probes).mean())
    sigma = (delta * (1 - delta) / (q * len(rates))) ** 0.5
    assert np.mean(rates) <= delta + 3 * sigma


def test_bits_report():
    f = filter_new(1000, 0.01, 5)
    b = f.bits()
    assert b["bits_descriptors"] > 0
    assert b["bits_total"] <= b["envelope"]
    assert b["envelope"] == pytest.approx(bits_envelope(1000, 0.01) + b["bits_descriptors"])
    assert b["lower_bound"] == pytest.approx(1000 * np.log2(100))
