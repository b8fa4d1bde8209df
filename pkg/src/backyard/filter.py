"""Approximate membership by hashing into a reduced universe.

A pairwise hash ``h`` maps keys to ``[0, R)`` with ``R = ceil(n / delta)`` and
an exact dictionary stores ``h(S)``.  A non-member collides with one of the
``n`` stored values with probability at most ``n / R <= delta`` over ``h``.
"""

from __future__ import annotations

from fractions import Fraction
from math import ceil, log2

import numpy as np

from .backyard import BackyardDict
from .errors import CapacityError, ParameterError
from .hash_family import make_rng, next_prime, sample_pairwise
from .permutations import _as_fraction
from .succinct import SuccinctDict

MAYBE_PRESENT = "maybe_present"
DEFINITELY_ABSENT = "definitely_absent"


def reduced_universe(n: int, delta) -> int:
    """``ceil(n / delta)`` computed exactly."""
    d = _as_fraction(delta)
    if not 0 < d < 1:
        raise ParameterError("delta must lie strictly between 0 and 1")
    if n < 1:
        raise ParameterError("n must be positive")
    return ceil(Fraction(n) / d)


class MembershipFilter:
    def __init__(self, n: int, delta, seed=None, universe_size: int = 1 << 32, backend: str = "succinct",
                 eps: float = 0.25, **dict_kw):
        self.R = reduced_universe(n, delta)
        self.n = n
        self.delta = float(delta)
        self.universe_size = universe_size
        rng = make_rng(seed)
        self.h = sample_pairwise(universe_size, self.R, rng, next_prime(max(universe_size, self.R)))
        self.backend = backend
        if backend == "succinct":
            dict_kw.setdefault("gamma", 0.0)
            dict_kw.setdefault("perm_mode", "nr")
            self.dict = SuccinctDict(self.R, n, eps=eps, seed=rng, **dict_kw)
        elif backend == "backyard":
            dict_kw.setdefault("check_space", False)
            self.dict = BackyardDict(n, eps, u=self.R, seed=rng, **dict_kw)
        else:
            raise ParameterError(f"unknown backend {backend!r}")
        self.inserted = 0

    def insert(self, x: int) -> None:
        v = self.h(x)
        if self.dict.contains(v):
            return
        if len(self.dict) >= self.n:
            raise CapacityError(f"filter already holds {self.n} distinct hashed values")
        self.dict.insert(v)
        self.inserted += 1

    def query(self, x: int) -> str:
        return MAYBE_PRESENT if self.dict.contains(self.h(x)) else DEFINITELY_ABSENT

    def __contains__(self, x: int) -> bool:
        return self.dict.contains(self.h(x))

    def query_many(self, xs) -> np.ndarray:
        """Boolean array of ``maybe_present`` answers."""
        hv = self.h.eval_many(np.asarray(xs, dtype=np.uint64))
        # each distinct hashed value is looked up once
        vals, inv = np.unique(hv, return_inverse=True)
        look = self.dict.contains
        hit = np.fromiter((look(v) for v in vals.tolist()), dtype=bool, count=len(vals))
        return hit[inv]

    def bits(self) -> dict:
        """Audited bits of the filter, including the hash descriptor."""
        if self.backend == "succinct":
            audit = self.dict.bits_used()
            total = audit.bits_total + self.h.descriptor_bits
            desc = audit.bits_hash_descriptors + self.h.descriptor_bits
        else:
            words = self.dict.space_words()
            total = words["total"] * 64 + self.h.descriptor_bits
            desc = self.h.descriptor_bits
        return {
            "bits_total": total,
            "bits_descriptors": desc,
            "bits_per_element": total / self.n,
            "lower_bound": self.n * log2(1 / self.delta),
            "envelope": bits_envelope(self.n, self.delta) + desc,
        }


def bits_envelope(n: int, delta: float) -> float:
    """``1.25 n log2(1/delta) + 64 n^0.95``, before descriptor bits."""
    return 1.25 * n * log2(1 / delta) + 64 * n**0.95


def filter_new(n: int, delta, rng=None, **kw) -> MembershipFilter:
    return MembershipFilter(n, delta, seed=rng, **kw)


def filter_insert(f: MembershipFilter, x: int) -> str:
    f.insert(x)
    return "ok"


def filter_query(f: MembershipFilter, x: int) -> str:
    return f.query(x)
