"""Subset ranking and information-theoretic bit counts."""

from __future__ import annotations

from bisect import bisect_right

import gmpy2
from gmpy2 import comb, fac


def ceil_log2(v: int) -> int:
    """``ceil(log2(v))`` for a positive integer, computed exactly."""
    if v < 1:
        raise ValueError("need a positive integer")
    return (v - 1).bit_length()


def info_bound(u: int, n: int) -> int:
    """Bits needed to name one ``n``-subset of a ``u``-universe."""
    return ceil_log2(int(comb(u, n)))


def rank_subset(elems) -> int:
    """Colexicographic rank of a set of distinct non-negative integers."""
    return int(sum(comb(s, i + 1) for i, s in enumerate(sorted(elems))))


def _largest_with_comb_at_most(r: int, i: int) -> int:
    # largest s with comb(s, i) <= r; bracketed by the i-th root of r * i!
    lo = int(gmpy2.iroot(r * fac(i), i)[0])
    hi = lo + i
    while comb(hi, i) <= r:
        hi += i
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if comb(mid, i) <= r:
            lo = mid
        else:
            hi = mid - 1
    return lo


def unrank_subset(rank: int, size: int) -> list[int]:
    """Inverse of ``rank_subset``; returns the subset in increasing order."""
    out = []
    rank = gmpy2.mpz(rank)
    for i in range(size, 0, -1):
        s = _largest_with_comb_at_most(rank, i)
        out.append(s)
        rank -= comb(s, i)
    out.reverse()
    return out


class BoundedSubsetCode:
    """Bijection between subsets of ``[0, q)`` with at most ``d`` elements and ``[0, total)``.

    Codes of ``j``-subsets occupy the block starting at ``sum_{i<j} C(q, i)``.
    """

    __slots__ = ("q", "d", "offsets", "total", "bits")

    def __init__(self, q: int, d: int):
        self.q = q
        self.d = d
        offsets = [0]
        for j in range(d + 1):
            offsets.append(offsets[-1] + int(comb(q, j)))
        self.offsets = offsets
        self.total = offsets[-1]
        self.bits = ceil_log2(self.total)

    def size_of(self, code: int) -> int:
        return bisect_right(self.offsets, code) - 1

    def encode(self, elems) -> int:
        return self.offsets[len(elems)] + rank_subset(elems)

    def decode(self, code: int) -> list[int]:
        j = self.size_of(code)
        return unrank_subset(code - self.offsets[j], j)
