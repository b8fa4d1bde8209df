import itertools
import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from backyard.errors import DomainError, ParameterError
from backyard.hash_family import (
    MERSENNE_61,
    KWiseHash,
    PairwiseHash,
    eval_kwise,
    eval_pairwise,
    hash_from_descriptor,
    next_prime,
    sample_kwise,
    sample_pairwise,
)


def test_sample_pairwise_field_covers_universe():
    h = sample_pairwise(100, 10, random.Random(3))
    assert h.p >= 100 and h.p == next_prime(100) == 101
    assert 0 <= h.a < h.p and 0 <= h.b < h.p


def test_pairwise_identity_and_arithmetic():
    ident = PairwiseHash(1, 0, 101, 101)
    assert all(ident(x) == x for x in range(101))
    assert eval_pairwise(PairwiseHash(1, 0, 101, 10), 7) == 7
    assert eval_pairwise(PairwiseHash(3, 5, 101, 10), 7) == 6
    const = PairwiseHash(0, 4, 101, 10)
    assert {const(x) for x in range(101)} == {4}


def test_pairwise_errors():
    with pytest.raises(ParameterError):
        sample_pairwise(100, 0)
    with pytest.raises(ParameterError):
        sample_pairwise(0, 10)
    with pytest.raises(DomainError):
        eval_pairwise(PairwiseHash(1, 0, 101, 10, 100), 100)


def test_pairwise_collision_rate():
    rng = random.Random(11)
    gen = np.random.default_rng(11)
    R = 256
    collisions = 0
    trials = 100_000
    for _ in range(trials // 1000):
        h = sample_pairwise(1 << 32, R, rng)
        xs = gen.integers(0, 1 << 32, size=(1000, 2), dtype=np.uint64)
        xs = xs[xs[:, 0] != xs[:, 1]]
        collisions += int((h.eval_many(xs[:, 0]) == h.eval_many(xs[:, 1])).sum())
    assert collisions / trials <= 2 / R


def test_kwise_errors_and_degenerate_cases():
    with pytest.raises(ParameterError):
        sample_kwise(0, 10, 10)
    const = sample_kwise(1, 50, 7, random.Random(1))
    assert len({const(x) for x in range(50)}) == 1
    two = sample_kwise(2, 50, 7, random.Random(1))
    b, a = two.coeffs
    assert all(two(x) == PairwiseHash(a, b, two.p, 7)(x) for x in range(50))
    with pytest.raises(DomainError):
        eval_kwise(KWiseHash([1, 2], 7, 7), 7)


def test_kwise_direct_arithmetic():
    h = KWiseHash([2, 0, 1], 7, 7)
    assert h(3) == 4
    assert h(0) == 2


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_exact_kwise_uniformity(p, k):
    # every k distinct inputs, over all p^k polynomials, hit each output tuple exactly once
    polys = [KWiseHash(c, p, p) for c in itertools.product(range(p), repeat=k)]
    for xs in itertools.combinations(range(p), k):
        counts = Counter(tuple(h.field_value(x) for x in xs) for h in polys)
        assert len(counts) == p**k
        assert set(counts.values()) == {1}


def test_kwise_enumeration_example():
    polys = [KWiseHash(c, 7, 7) for c in itertools.product(range(7), repeat=3)]
    assert len(polys) == 343
    for xs in itertools.combinations(range(7), 3):
        assert len({tuple(h(x) for x in xs) for h in polys}) == 343


def test_determinism_across_instances():
    a = sample_kwise(8, 1 << 32, 1000, 42)
    b = sample_kwise(8, 1 << 32, 1000, 42)
    assert a.coeffs == b.coeffs
    assert [a(x) for x in range(0, 1 << 32, 1 << 24)] == [b(x) for x in range(0, 1 << 32, 1 << 24)]


def test_range_bias_bound():
    h = sample_kwise(4, 1000, 10, 1, prime=1009)
    assert h.range_bias == pytest.approx(9 / 1009)


@settings(max_examples=200, deadline=None)
@given(k=st.integers(1, 70), x=st.integers(0, (1 << 32) - 1), R=st.integers(1, 1 << 40), seed=st.integers(0, 2**32))
def test_native_matches_field_arithmetic(k, x, R, seed):
    h = sample_kwise(k, 1 << 32, R, seed, prime=MERSENNE_61)
    want = h.field_value(x) % R
    assert h(x) == want
    assert h.fast(x) == want
    assert int(h.eval_many([x])[0]) == want
    assert 0 <= want < R


@settings(max_examples=100, deadline=None)
@given(k=st.integers(1, 12), seed=st.integers(0, 2**32), xs=st.lists(st.integers(0, 65536), min_size=1, max_size=20))
def test_small_prime_paths_agree(k, seed, xs):
    h = sample_kwise(k, 65537, 97, seed, prime=65537)
    assert [h(x) for x in xs] == [h.field_value(x) % 97 for x in xs] == [h.fast(x) for x in xs]
    assert h.eval_many(xs).tolist() == [h(x) for x in xs]


def test_descriptor_round_trip():
    for h in (sample_pairwise(1000, 17, 5), sample_kwise(6, 1 << 32, 99, 5, MERSENNE_61)):
        g = hash_from_descriptor(h.descriptor())
        assert all(g(x) == h(x) for x in range(500))
        assert g.descriptor_bits == h.descriptor_bits > 0


def test_next_prime_values():
    assert [next_prime(v) for v in (0, 2, 3, 4, 100, 1 << 16)] == [2, 2, 3, 5, 101, 65537]
