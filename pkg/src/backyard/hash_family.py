"""Polynomial hash families over prime fields.

A degree ``k - 1`` polynomial with uniformly random coefficients over a
field of prime order ``p`` is exactly k-wise independent on ``[0, p)``; the
final ``mod R`` reduction maps into the requested range with a bias of at
most ``(p mod R) / p`` per output value.

Coefficients are stored constant-term first, so ``coeffs[i]`` multiplies
``x**i``.
"""

from __future__ import annotations

import builtins
import random
from functools import partial
from math import ceil, log2
from typing import Sequence

import gmpy2
import numpy as np

from . import _native
from .errors import DomainError, ParameterError

MERSENNE_61 = _native.MERSENNE_61

# below this many coefficients the interpreter loop beats the native call overhead
_NATIVE_MIN_K = 4


def make_rng(seed=None) -> random.Random:
    """Return ``seed`` if it already is a ``random.Random``, else a new one seeded with it."""
    if isinstance(seed, random.Random):
        return seed
    return random.Random(seed)


def next_prime(n: int) -> int:
    """Smallest prime ``>= n``."""
    if n <= 2:
        return 2
    return int(gmpy2.next_prime(n - 1))


def field_bits(p: int) -> int:
    """Bits needed to store one element of a field of order ``p``."""
    return max(1, (p - 1).bit_length())


class PairwiseHash:
    """``x -> ((a*x + b) mod p) mod R`` on the domain ``[0, universe_size)``."""

    __slots__ = ("a", "b", "p", "range", "universe_size")

    def __init__(self, a: int, b: int, p: int, range: int, universe_size: int | None = None):
        if universe_size is None:
            universe_size = p
        if range < 1:
            raise ParameterError("range must be positive")
        if universe_size < 1 or universe_size > p:
            raise ParameterError("universe must be non-empty and fit inside the field")
        if not (0 <= a < p and 0 <= b < p):
            raise ParameterError("coefficients must lie in [0, p)")
        self.a = a
        self.b = b
        self.p = p
        self.range = range
        self.universe_size = universe_size

    def __call__(self, x: int) -> int:
        return (self.a * x + self.b) % self.p % self.range

    @property
    def fast(self):
        return self.__call__

    def eval_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.uint64)
        if self.p < (1 << 32):
            coeffs = np.array([self.b, self.a], dtype=np.uint64)
            return _native.horner_small_many(coeffs, xs, self.p, self.range)
        return np.array([self(int(x)) for x in xs], dtype=np.uint64)

    @property
    def descriptor_bits(self) -> int:
        return 2 * field_bits(self.p)

    def descriptor(self) -> dict:
        return {
            "kind": "pairwise",
            "p": self.p,
            "range": self.range,
            "universe": self.universe_size,
            "coeffs": [self.b, self.a],
        }

    def __repr__(self) -> str:
        return f"PairwiseHash(a={self.a}, b={self.b}, p={self.p}, range={self.range})"


class KWiseHash:
    """Random polynomial of degree ``k - 1`` over GF(p), reduced mod ``range``."""

    __slots__ = ("coeffs", "p", "range", "universe_size", "_rev", "_carr", "_native", "fast")

    def __init__(self, coeffs: Sequence[int], p: int, range: int, universe_size: int | None = None):
        coeffs = [int(c) for c in coeffs]
        if not coeffs:
            raise ParameterError("need at least one coefficient")
        if range < 1:
            raise ParameterError("range must be positive")
        if universe_size is None:
            universe_size = p
        if universe_size < 1 or universe_size > p:
            raise ParameterError("universe must be non-empty and fit inside the field")
        if any(not 0 <= c < p for c in coeffs):
            raise ParameterError("coefficients must lie in [0, p)")
        self.coeffs = tuple(coeffs)
        self.p = p
        self.range = range
        self.universe_size = universe_size
        self._rev = tuple(reversed(coeffs))
        self._carr = np.array(coeffs, dtype=np.uint64) if p <= MERSENNE_61 else None
        if len(coeffs) >= _NATIVE_MIN_K and p == MERSENNE_61:
            self._native = _native.horner61
            # unchecked evaluator with the least call overhead
            self.fast = partial(_native.horner61_mod, self._carr, range)
        elif len(coeffs) >= _NATIVE_MIN_K and p < (1 << 32):
            self._native = None
            self.fast = partial(_native.horner_small_mod, self._carr, p, range)
        else:
            self._native = None
            self.fast = self.__call__

    @property
    def k(self) -> int:
        return len(self.coeffs)

    def __call__(self, x: int) -> int:
        if self._native is not None:
            return int(self._native(self._carr, x)) % self.range
        p = self.p
        acc = 0
        for c in self._rev:
            acc = (acc * x + c) % p
        return acc % self.range

    def field_value(self, x: int) -> int:
        """Polynomial value in ``[0, p)`` before the range reduction (pure-Python Horner)."""
        p = self.p
        acc = 0
        for c in self._rev:
            acc = (acc * x + c) % p
        return acc

    def eval_many(self, xs) -> np.ndarray:
        """Vectorised evaluation over an integer array."""
        xs = np.asarray(xs, dtype=np.uint64)
        if self.p == MERSENNE_61:
            return _native.horner61_many(self._carr, xs, self.range)
        if self.p < (1 << 32):
            return _native.horner_small_many(self._carr, xs, self.p, self.range)
        return np.array([self(int(x)) for x in xs], dtype=np.uint64)

    @property
    def range_bias(self) -> float:
        """Upper bound on the excess probability of any single output value."""
        return (self.p % self.range) / self.p

    @property
    def descriptor_bits(self) -> int:
        return self.k * field_bits(self.p)

    def descriptor(self) -> dict:
        return {
            "kind": "kwise",
            "p": self.p,
            "range": self.range,
            "universe": self.universe_size,
            "coeffs": list(self.coeffs),
        }

    def __repr__(self) -> str:
        return f"KWiseHash(k={self.k}, p={self.p}, range={self.range})"


def hash_from_descriptor(desc: dict):
    if desc["kind"] == "pairwise":
        b, a = desc["coeffs"]
        return PairwiseHash(a, b, desc["p"], desc["range"], desc["universe"])
    if desc["kind"] == "kwise":
        return KWiseHash(desc["coeffs"], desc["p"], desc["range"], desc["universe"])
    raise ParameterError(f"unknown hash descriptor kind {desc['kind']!r}")


def _choose_prime(universe_size: int, range: int, prime: int | None) -> int:
    if prime is None:
        return next_prime(max(universe_size, range))
    if prime < universe_size:
        raise ParameterError("field must be at least as large as the universe")
    if not gmpy2.is_prime(prime):
        raise ParameterError(f"{prime} is not prime")
    return prime


def sample_pairwise(universe_size: int, range: int, rng=None, prime: int | None = None) -> PairwiseHash:
    """Draw ``(a, b)`` uniformly; the field defaults to the smallest prime ``>= max(universe, range)``."""
    if universe_size < 1 or range < 1:
        raise ParameterError("universe_size and range must be positive")
    rng = make_rng(rng)
    p = _choose_prime(universe_size, range, prime)
    return PairwiseHash(rng.randrange(p), rng.randrange(p), p, range, universe_size)


def sample_kwise(k: int, universe_size: int, range: int, rng=None, prime: int | None = None) -> KWiseHash:
    if k < 1:
        raise ParameterError("k must be at least 1")
    if universe_size < 1 or range < 1:
        raise ParameterError("universe_size and range must be positive")
    rng = make_rng(rng)
    p = _choose_prime(universe_size, range, prime)
    return KWiseHash([rng.randrange(p) for _ in builtins.range(k)], p, range, universe_size)


def _check_domain(h, x: int) -> None:
    if not 0 <= x < h.universe_size:
        raise DomainError(f"{x} outside universe [0, {h.universe_size})")


def eval_pairwise(h: PairwiseHash, x: int) -> int:
    _check_domain(h, x)
    return h(x)


def eval_kwise(h: KWiseHash, x: int) -> int:
    _check_domain(h, x)
    return h(x)


def word_bits(universe_size: int) -> int:
    """Width of a machine word able to hold any element of the universe."""
    return max(1, ceil(log2(universe_size))) if universe_size > 1 else 1
