"""Succinct dictionary built from chopped permutations.

Keys of ``[0, u)`` are first split by a one-round Feistel map into
``m_outer`` outer bins; the low part ``x_R`` is what the outer bin stores.
Inside an outer bin the two-level scheme runs on ``x_R`` with three shared
permutations: ``pi0`` chopped into (inner bin, quotient) for the first level,
``pi1`` and ``pi2`` for a permutation-mode cuckoo table.  Only quotients and
cuckoo identities are stored, which is where the space saving comes from.

Universes are truncated so every divisibility constraint holds exactly; the
few keys cut off by truncation are kept in a bitmap.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import ceil, log, log2, sqrt

import numpy as np

from .bins import make_bin_table
from .combinatorics import ceil_log2, info_bound
from .cuckoo import CuckooState, default_queue_capacity, table_size
from .errors import CapacityError, DomainError, ParameterError, StructuralFailure
from .hash_family import field_bits, make_rng, next_prime, sample_kwise
from .permutations import (
    ChoppedPerm,
    FeistelPerm,
    TABLE_PERM_MAX,
    TablePerm,
    even_width,
    max_nr_k,
    sample_perm,
    truncate_universe,
)


def outer_bin_count(n: int, gamma: float) -> int:
    """Smallest power of two ``>= n**gamma``."""
    target = n ** gamma
    m = 1
    while m < target - 1e-9:
        m *= 2
    return m


def outer_capacity(n: int, m_outer: int) -> int:
    """Mean outer-bin load plus ``4*sqrt(mean * ln m_outer)`` slack, capped at ``n``."""
    mean = n / m_outer
    return min(n, ceil(mean + 4 * sqrt(mean * log(m_outer)) - 1e-9))


@dataclass(frozen=True)
class SuccinctParams:
    u: int
    n: int
    gamma: float
    eps: float
    c: float
    m_outer: int
    u_outer: int
    right_size: int
    d_outer: int
    d: int
    m: int
    ell: int
    r: int
    u_bin: int
    L: int = 10
    L_bin: int = 32
    fill_slack: float = 0.2

    @property
    def q_first(self) -> int:
        return self.u_bin // self.m

    @property
    def q_cuckoo(self) -> int:
        return self.u_bin // self.r

    def as_dict(self) -> dict:
        return asdict(self)


def derive_succinct_params(u: int, n: int, gamma: float = 0.9, eps: float = 0.25, c: float = 2.0,
                           L: int = 10, L_bin: int = 32, fill_slack: float = 0.2,
                           d: int | None = None) -> SuccinctParams:
    if not u >= n >= 1:
        raise ParameterError("need u >= n >= 1")
    if not 0 < eps < 1:
        raise ParameterError("eps must lie strictly between 0 and 1")
    if gamma < 0 or gamma > 1:
        raise ParameterError("gamma must lie in [0, 1]")
    m_outer = outer_bin_count(n, gamma)
    if m_outer > u:
        raise ParameterError("more outer bins than universe elements")
    u_outer, _ = truncate_universe(u, m_outer)
    right = u_outer // m_outer
    d_outer = outer_capacity(n, m_outer)
    if d is None:
        d = ceil(c * log2(1 / eps) / eps**2 - 1e-9)
    m_in = max(1, ceil((1 + eps / 2) * d_outer / d - 1e-9))
    ell = max(1, ceil(eps * d_outer / 16 - 1e-9))
    r = table_size(ell, fill_slack)
    # one truncated universe that both the inner bin count and the table size divide
    r = -(-r // m_in) * m_in
    if right < r:
        raise ParameterError(f"per-bin universe {right} is smaller than the cuckoo table size {r}")
    u_bin, _ = truncate_universe(right, r)
    return SuccinctParams(u=u, n=n, gamma=gamma, eps=eps, c=c, m_outer=m_outer, u_outer=u_outer,
                          right_size=right, d_outer=d_outer, d=d, m=m_in, ell=ell, r=r, u_bin=u_bin,
                          L=L, L_bin=L_bin, fill_slack=fill_slack)


@dataclass
class SpaceAudit:
    bits_first_level: int
    bits_second_level: int
    bits_side: int
    bits_hash_descriptors: int
    bits_bookkeeping: int
    bits_random_tables: int
    info_bound: int
    eps: float
    breakdown: dict = field(default_factory=dict)

    @property
    def bits_total(self) -> int:
        return (self.bits_first_level + self.bits_second_level + self.bits_side
                + self.bits_hash_descriptors + self.bits_bookkeeping)

    @property
    def ratio(self) -> float:
        return self.bits_total / self.info_bound if self.info_bound else float("inf")

    @property
    def target(self) -> float:
        return (1 + 3 * self.eps) * self.info_bound

    @property
    def within_target(self) -> bool:
        return self.bits_total <= self.target

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(bits_total=self.bits_total, ratio=self.ratio, target=self.target,
                 within_target=self.within_target)
        return d


class _OuterBin:
    __slots__ = ("table", "cuckoo", "load")

    def __init__(self, table, cuckoo):
        self.table = table
        self.cuckoo = cuckoo
        self.load = 0


class SuccinctDict:
    """Exact dynamic set over ``[0, u)`` with at most ``n`` keys, stored as quotients.

    ``perm_mode`` picks the shared permutations: ``'table'`` (explicit random
    tables, per-bin universe up to 2^20) or ``'nr'`` (composed Naor-Reingold
    units with ``perm_k``-wise round functions, composed until
    ``delta_target`` is met).  ``encoding`` is ``'quotient'`` (one cell per
    element), ``'binomial'`` (one subset code per bin) or ``'phf'`` (quotient
    cells with per-bin perfect hashing).
    """

    def __init__(self, u: int, n: int, gamma: float = 0.9, eps: float = 0.25, perm_mode: str = "nr",
                 seed=None, c: float = 2.0, encoding: str = "quotient", perm_k: int | None = None,
                 delta_target=None, k_outer: int = 8, L: int = 10, L_bin: int = 32,
                 params: SuccinctParams | None = None, outer_f=None, d: int | None = None, perms=None):
        if params is None:
            params = derive_succinct_params(u, n, gamma, eps, c, L, L_bin, d=d)
        self.params = p = params
        self.u = p.u
        self.n = p.n
        self.perm_mode = perm_mode
        self.encoding = encoding
        self.rng = rng = make_rng(seed)
        if perm_mode == "table" and p.u_bin > TABLE_PERM_MAX:
            raise ParameterError(f"explicit permutation tables need a per-bin universe of at most {TABLE_PERM_MAX}")
        if p.m_outer > 1:
            f = outer_f if outer_f is not None else sample_kwise(k_outer, p.right_size, p.m_outer, rng,
                                                                 next_prime(max(p.right_size, p.m_outer)))
            self.outer = FeistelPerm(f, p.m_outer, p.right_size, "xor")
            self._f = getattr(f, "fast", f)
        else:
            self.outer = None
            self._f = None
        w = even_width(p.u_bin)
        if perm_k is None:
            perm_k = max(2, min(p.d_outer, max_nr_k(w)))
        if delta_target is None:
            delta_target = Fraction(1, max(2, p.n))
        self.perm_k = perm_k
        self.delta_target = delta_target
        if perms is None:
            perms = [sample_perm(p.u_bin, perm_mode, rng, k=perm_k, delta_target=delta_target) for _ in range(3)]
        self.pi0 = ChoppedPerm(perms[0], p.m, p.right_size)
        self.pi1, self.pi2 = perms[1], perms[2]
        self._pi0_apply = perms[0].apply
        self.q0 = p.q_first
        q_bits = max(1, ceil_log2(self.q0 + 1))
        self.bins = []
        for _ in range(p.m_outer):
            if encoding == "quotient":
                table = make_bin_table("plain", p.m, p.d, q_bits, empty_code=self.q0)
            elif encoding == "binomial":
                table = make_bin_table("binomial", p.m, p.d, q_bits, q=self.q0)
            elif encoding == "phf":
                table = make_bin_table("phf", p.m, p.d, max(1, ceil_log2(self.q0)), rng=rng, L_bin=p.L_bin,
                                       queue_capacity=4 * max(1, ceil_log2(max(2, p.d_outer))))
            else:
                raise ParameterError(f"unknown bin encoding {encoding!r}")
            ob = _OuterBin(table, None)
            ob.cuckoo = CuckooState(p.ell, p.fill_slack, "permutation", perms=(self.pi1, self.pi2),
                                    L=p.L, hook=self._make_hook(table), r=p.r)
            self.bins.append(ob)
        self._phf = encoding == "phf"
        self.side_size = (p.u - p.u_outer) + p.m_outer * (p.right_size - p.u_bin)
        self.side = bytearray(-(-self.side_size // 8))
        self.side_count = 0
        self.size = 0
        self.failed = False
        self.outer_failures = 0

    # -- routing -------------------------------------------------------------

    def _make_hook(self, table):
        q0, apply, phf = self.q0, self._pi0_apply, self.encoding == "phf"

        def hook(y: int) -> bool:
            ib, qt = divmod(apply(y), q0)
            if not table.has_vacancy(ib):
                return False
            if phf:
                table.insert(ib, qt, drive=False, check=False)
            else:
                table.insert(ib, qt)
            return True

        return hook

    def split(self, x: int) -> tuple[int, int]:
        """``(outer bin, per-bin key)``; the key may fall in the truncated tail."""
        p = self.params
        if self.outer is None:
            return 0, x
        xl, xr = divmod(x, p.right_size)
        return xl ^ self._f(xr), xr

    def join(self, ob: int, y: int) -> int:
        if self.outer is None:
            return y
        return (ob ^ self._f(y)) * self.params.right_size + y

    def _side_index(self, x: int):
        p = self.params
        if x >= p.u_outer:
            return x - p.u_outer
        ob, y = self.split(x)
        if y >= p.u_bin:
            return (p.u - p.u_outer) + ob * (p.right_size - p.u_bin) + (y - p.u_bin)
        return None

    def _side_get(self, i: int) -> bool:
        return bool(self.side[i >> 3] >> (i & 7) & 1)

    def _check(self, x: int) -> None:
        if self.failed:
            raise StructuralFailure("dictionary is in the failed state; rebuild it")
        if not 0 <= x < self.u:
            raise DomainError(f"{x} outside universe [0, {self.u})")

    # -- operations ----------------------------------------------------------

    def contains(self, x: int) -> bool:
        self._check(x)
        p = self.params
        if x >= p.u_outer:
            return self._side_get(x - p.u_outer)
        ob, y = self.split(x)
        if y >= p.u_bin:
            return self._side_get(self._side_index(x))
        B = self.bins[ob]
        ib, qt = divmod(self._pi0_apply(y), self.q0)
        return B.table.contains(ib, qt) or B.cuckoo.contains(y)

    lookup = contains
    __contains__ = contains

    def insert(self, x: int) -> None:
        self._check(x)
        p = self.params
        ob, y = self.split(x) if x < p.u_outer else (None, None)
        if ob is None or y >= p.u_bin:
            i = self._side_index(x)
            if self._side_get(i):
                return
            if self.size >= self.n:
                raise CapacityError(f"dictionary already holds {self.n} keys")
            self.side[i >> 3] |= 1 << (i & 7)
            self.side_count += 1
            self.size += 1
            return
        B = self.bins[ob]
        ib, qt = divmod(self._pi0_apply(y), self.q0)
        table, cuckoo = B.table, B.cuckoo
        if table.contains(ib, qt) or cuckoo.contains(y):
            return
        if self.size >= self.n:
            raise CapacityError(f"dictionary already holds {self.n} keys")
        if B.load >= p.d_outer:
            self.failed = True
            self.outer_failures += 1
            raise StructuralFailure(f"outer bin {ob} exceeded its capacity of {p.d_outer}")
        try:
            if table.has_vacancy(ib):
                if self._phf:
                    table.insert(ib, qt, drive=False, check=False)
                else:
                    table.insert(ib, qt)
                cuckoo.process(cuckoo.L)
            else:
                cuckoo.insert(y)
            if self._phf:
                table.drive(p.L_bin)
        except StructuralFailure:
            self.failed = True
            raise
        B.load += 1
        self.size += 1

    def delete(self, x: int) -> bool:
        self._check(x)
        p = self.params
        ob, y = self.split(x) if x < p.u_outer else (None, None)
        if ob is None or y >= p.u_bin:
            i = self._side_index(x)
            if not self._side_get(i):
                return False
            self.side[i >> 3] &= ~(1 << (i & 7)) & 0xFF
            self.side_count -= 1
            self.size -= 1
            return True
        B = self.bins[ob]
        ib, qt = divmod(self._pi0_apply(y), self.q0)
        try:
            if self._phf:
                removed = B.table.delete(ib, qt, drive=False) or B.cuckoo.delete(y)
                B.table.drive(p.L_bin)
            else:
                removed = B.table.delete(ib, qt) or B.cuckoo.delete(y)
        except StructuralFailure:
            self.failed = True
            raise
        if removed:
            B.load -= 1
            self.size -= 1
        return removed

    def __len__(self) -> int:
        return self.size

    # -- inspection ----------------------------------------------------------

    def members(self) -> list[int]:
        out = []
        pi0 = self.pi0
        for ob, B in enumerate(self.bins):
            for ib in range(self.params.m):
                for qt in B.table.members(ib):
                    out.append(self.join(ob, pi0.unchop(ib, qt)))
            for y in B.cuckoo.members():
                out.append(self.join(ob, y))
        p = self.params
        for i in range(self.side_size):
            if self._side_get(i):
                if i < p.u - p.u_outer:
                    out.append(p.u_outer + i)
                else:
                    j = i - (p.u - p.u_outer)
                    ob, off = divmod(j, p.right_size - p.u_bin)
                    out.append(self.join(ob, p.u_bin + off))
        return out

    def outer_loads(self) -> list[int]:
        return [B.load for B in self.bins]

    def stats(self) -> dict:
        return {
            "size": self.size,
            "side": self.side_count,
            "second_level": sum(len(B.cuckoo) for B in self.bins),
            "max_outer_load": max(self.outer_loads()),
            "d_outer": self.params.d_outer,
            "cuckoo_queue_high": max(B.cuckoo.queue_high for B in self.bins),
            "bin_queue_high": max(B.table.queue_high for B in self.bins),
            "failed": self.failed,
        }

    def bits_used(self) -> SpaceAudit:
        return bits_used(self)


def _descriptor_bits(perm) -> tuple[int, int]:
    """(descriptor bits, explicit random-table bits) of a permutation tree."""
    inner = getattr(perm, "inner", None)
    if isinstance(perm, TablePerm):
        return 0, perm.descriptor_bits
    if inner is not None:
        return _descriptor_bits(inner)
    return perm.descriptor_bits, 0


def bits_used(sd: SuccinctDict) -> SpaceAudit:
    """Bit-level audit of everything the dictionary keeps between operations.

    Explicit random permutation tables are reported in ``bits_random_tables``
    and left out of the total, matching the idealised truly-random setting.
    """
    first = second = book = 0
    for B in sd.bins:
        tb = B.table.bits()
        first += tb["cells"] + tb["occupancy"]
        book += tb["bookkeeping"]
        cb = B.cuckoo.bits()
        second += cb["cells"] + cb["queue"]
    desc = tables = 0
    for perm in (sd.pi0.inner, sd.pi1, sd.pi2):
        a, b = _descriptor_bits(perm)
        desc += a
        tables += b
    if sd.outer is not None:
        desc += sd.outer.descriptor_bits
    p = sd.params
    breakdown = {
        "m_outer": p.m_outer,
        "d_outer": p.d_outer,
        "inner_bins": p.m,
        "d": p.d,
        "r": p.r,
        "u_bin": p.u_bin,
        "q_first": p.q_first,
        "q_cuckoo": p.q_cuckoo,
        "encoding": sd.encoding,
        "perm_mode": sd.perm_mode,
        "perm_k": sd.perm_k,
    }
    return SpaceAudit(bits_first_level=first, bits_second_level=second, bits_side=sd.side_size,
                      bits_hash_descriptors=desc, bits_bookkeeping=book, bits_random_tables=tables,
                      info_bound=info_bound(p.u, p.n), eps=p.eps, breakdown=breakdown)


def outer_bin_load_stats(f, S, m_outer: int | None = None, right_size: int | None = None):
    """Exact outer-bin loads of ``S``; returns ``(max_load, histogram)``.

    ``f`` is a ``FeistelPerm`` or a hash into ``[0, m_outer)`` together with
    ``m_outer`` and ``right_size``.
    """
    if isinstance(f, FeistelPerm):
        m_outer, right_size, g = f.left_size, f.right_size, f.f
    else:
        g = f
    xs = np.asarray(list(S), dtype=np.uint64)
    xl = (xs // np.uint64(right_size)).astype(np.int64)
    xr = xs % np.uint64(right_size)
    if hasattr(g, "eval_many"):
        fv = g.eval_many(xr).astype(np.int64) % m_outer
    else:
        fv = np.fromiter((g(int(v)) % m_outer for v in xr), dtype=np.int64, count=len(xr))
    bins = xl ^ fv
    hist = np.bincount(bins, minlength=m_outer)
    return int(hist.max()) if len(hist) else 0, hist


__all__ = [
    "SpaceAudit",
    "SuccinctDict",
    "SuccinctParams",
    "bits_used",
    "derive_succinct_params",
    "field_bits",
    "info_bound",
    "outer_bin_count",
    "outer_bin_load_stats",
    "outer_capacity",
]
