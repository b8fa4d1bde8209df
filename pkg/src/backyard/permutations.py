"""Invertible permutations of integer universes.

Every permutation exposes ``apply``, ``invert``, ``universe_size``,
``descriptor()`` and ``descriptor_bits``.  The building blocks are affine
maps over a prime field, one-round Feistel maps, a half swap, explicit random
tables, cycle-walking restrictions and ordered composition.  ``ChoppedPerm``
turns any of them into a ``(bin, quotient)`` splitter.
"""

from __future__ import annotations

from fractions import Fraction
from functools import partial

import numpy as np

from . import _native
from .errors import DomainError, IgnoredElement, ParameterError
from .hash_family import (
    field_bits,
    hash_from_descriptor,
    make_rng,
    next_prime,
    sample_kwise,
)

TABLE_PERM_MAX = 1 << 20


class PairwisePerm:
    """``x -> (a*x + b) mod p`` with ``a != 0``, cycle-walked down to ``[0, universe_size)``."""

    __slots__ = ("a", "b", "p", "universe_size", "_ainv")

    def __init__(self, a: int, b: int, p: int, universe_size: int | None = None):
        if universe_size is None:
            universe_size = p
        if not 0 < a < p or not 0 <= b < p:
            raise ParameterError("need 0 < a < p and 0 <= b < p")
        if not 1 <= universe_size <= p:
            raise ParameterError("universe must fit inside the field")
        self.a = a
        self.b = b
        self.p = p
        self.universe_size = universe_size
        self._ainv = pow(a, -1, p)

    def apply(self, x: int) -> int:
        a, b, p, u = self.a, self.b, self.p, self.universe_size
        y = (a * x + b) % p
        while y >= u:
            y = (a * y + b) % p
        return y

    def invert(self, y: int) -> int:
        ainv, b, p, u = self._ainv, self.b, self.p, self.universe_size
        x = (y - b) * ainv % p
        while x >= u:
            x = (x - b) * ainv % p
        return x

    @property
    def descriptor_bits(self) -> int:
        return 2 * field_bits(self.p)

    def descriptor(self) -> dict:
        return {"kind": "affine", "a": self.a, "b": self.b, "p": self.p, "universe": self.universe_size}


def sample_pairwise_perm(universe_size: int, rng=None, prime: int | None = None) -> PairwisePerm:
    rng = make_rng(rng)
    p = prime if prime is not None else next_prime(max(2, universe_size))
    return PairwisePerm(rng.randrange(1, p), rng.randrange(p), p, universe_size)


class FeistelPerm:
    """One Feistel round: ``(x_L, x_R) -> (x_L op f(x_R), x_R)``.

    ``x_L = x // right_size`` is the high part and ``x_R = x % right_size`` the
    low part.  ``mode='xor'`` needs a power-of-two ``left_size``; ``'add'``
    works for any ``left_size`` and combines modulo it.
    """

    __slots__ = ("f", "left_size", "right_size", "mode", "universe_size")

    def __init__(self, f, left_size: int, right_size: int, mode: str = "xor"):
        if left_size < 1 or right_size < 1:
            raise ParameterError("both halves must be non-empty")
        if mode not in ("xor", "add"):
            raise ParameterError(f"unknown Feistel mode {mode!r}")
        if mode == "xor" and left_size & (left_size - 1):
            raise ParameterError("xor mode needs a power-of-two left size")
        self.f = f
        self.left_size = left_size
        self.right_size = right_size
        self.mode = mode
        self.universe_size = left_size * right_size

    def split(self, x: int) -> tuple[int, int]:
        return divmod(x, self.right_size)

    def apply(self, x: int) -> int:
        xl, xr = divmod(x, self.right_size)
        t = self.f(xr) % self.left_size
        yl = xl ^ t if self.mode == "xor" else (xl + t) % self.left_size
        return yl * self.right_size + xr

    def invert(self, y: int) -> int:
        yl, yr = divmod(y, self.right_size)
        t = self.f(yr) % self.left_size
        xl = yl ^ t if self.mode == "xor" else (yl - t) % self.left_size
        return xl * self.right_size + yr

    def left_of(self, x: int) -> int:
        """High part of ``apply(x)`` without assembling the full output."""
        xl, xr = divmod(x, self.right_size)
        t = self.f(xr) % self.left_size
        return xl ^ t if self.mode == "xor" else (xl + t) % self.left_size

    @property
    def descriptor_bits(self) -> int:
        return getattr(self.f, "descriptor_bits", 0)

    def descriptor(self) -> dict:
        return {
            "kind": "feistel",
            "left": self.left_size,
            "right": self.right_size,
            "mode": self.mode,
            "f": self.f.descriptor(),
        }


class SwapHalves:
    """Exchange the high and low ``w/2`` bits of a ``w``-bit value."""

    __slots__ = ("w", "half", "mask", "universe_size")

    def __init__(self, w: int):
        if w <= 0 or w % 2:
            raise ParameterError("width must be a positive even number")
        self.w = w
        self.half = w // 2
        self.mask = (1 << self.half) - 1
        self.universe_size = 1 << w

    def apply(self, x: int) -> int:
        return ((x & self.mask) << self.half) | (x >> self.half)

    invert = apply

    descriptor_bits = 0

    def descriptor(self) -> dict:
        return {"kind": "swap", "w": self.w}


class ComposedPerm:
    """Apply ``rounds`` left to right; invert right to left."""

    __slots__ = ("rounds", "universe_size", "_fwd", "_bwd")

    def __init__(self, rounds, universe_size: int | None = None):
        rounds = list(rounds)
        if universe_size is None:
            if not rounds:
                raise ParameterError("an empty composition needs an explicit universe size")
            universe_size = rounds[0].universe_size
        if any(r.universe_size != universe_size for r in rounds):
            raise ParameterError("all rounds must share one universe")
        self.rounds = rounds
        self.universe_size = universe_size
        self._fwd = tuple(r.apply for r in rounds)
        self._bwd = tuple(r.invert for r in reversed(rounds))

    def apply(self, x: int) -> int:
        for f in self._fwd:
            x = f(x)
        return x

    def invert(self, y: int) -> int:
        for f in self._bwd:
            y = f(y)
        return y

    @property
    def descriptor_bits(self) -> int:
        return sum(r.descriptor_bits for r in self.rounds)

    def descriptor(self) -> dict:
        return {"kind": "composed", "universe": self.universe_size, "rounds": [r.descriptor() for r in self.rounds]}


class NRPerm(ComposedPerm):
    """Composition of Naor-Reingold units, evaluated by a compiled kernel when ``w <= 32``.

    ``rounds`` must be whole units as built by ``nr_unit``; the interpreted
    composition is kept as the reference and for wider universes.
    """

    __slots__ = ("w", "_native_args", "_inv_args")

    def __init__(self, rounds, w: int):
        super().__init__(rounds, 1 << w)
        self.w = w
        self._native_args = self._inv_args = None
        if w <= 32 and len(rounds) % 5 == 0:
            units = [rounds[i:i + 5] for i in range(0, len(rounds), 5)]
            A = np.array([[u[0].a, u[4].a] for u in units], dtype=np.int64)
            Ainv = np.array([[u[0]._ainv, u[4]._ainv] for u in units], dtype=np.int64)
            B = np.array([[u[0].b, u[4].b] for u in units], dtype=np.int64)
            G = np.array([[u[1].f.coeffs, u[3].f.coeffs] for u in units], dtype=np.int64)
            p_perm, p_half = units[0][0].p, units[0][1].f.p
            h = w // 2
            self._native_args = (A, B, G, p_perm, p_half, h)
            self._inv_args = (Ainv, B, G, p_perm, p_half, h)

    def native_walk(self, limit: int):
        """Compiled ``(apply, invert)`` restricted to ``[0, limit)``, or ``None``."""
        if self._native_args is None:
            return None
        return (partial(_native.nr_apply, *self._native_args, limit),
                partial(_native.nr_invert, *self._inv_args, limit))

    def apply(self, x: int) -> int:
        if self._native_args is None:
            return ComposedPerm.apply(self, x)
        return int(_native.nr_apply(*self._native_args, self.universe_size, x))

    def invert(self, y: int) -> int:
        if self._native_args is None:
            return ComposedPerm.invert(self, y)
        return int(_native.nr_invert(*self._inv_args, self.universe_size, y))

    def descriptor(self) -> dict:
        d = ComposedPerm.descriptor(self)
        d["nr_width"] = self.w
        return d


class TablePerm:
    """An explicit uniformly random permutation, kept with its inverse."""

    __slots__ = ("table", "inverse", "universe_size")

    def __init__(self, table):
        table = [int(v) for v in table]
        u = len(table)
        if u < 1 or u > TABLE_PERM_MAX:
            raise ParameterError(f"explicit tables are limited to [1, {TABLE_PERM_MAX}] entries")
        inverse = [-1] * u
        for i, v in enumerate(table):
            if not 0 <= v < u or inverse[v] >= 0:
                raise ParameterError("table is not a permutation")
            inverse[v] = i
        self.table = table
        self.inverse = inverse
        self.universe_size = u

    @classmethod
    def random(cls, universe_size: int, rng=None) -> "TablePerm":
        if not 1 <= universe_size <= TABLE_PERM_MAX:
            raise ParameterError(f"explicit tables are limited to [1, {TABLE_PERM_MAX}] entries")
        rng = make_rng(rng)
        gen = np.random.default_rng(rng.getrandbits(64))
        obj = cls.__new__(cls)
        perm = gen.permutation(universe_size)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(universe_size)
        obj.table = perm.tolist()
        obj.inverse = inv.tolist()
        obj.universe_size = universe_size
        return obj

    def apply(self, x: int) -> int:
        return self.table[x]

    def invert(self, y: int) -> int:
        return self.inverse[y]

    @property
    def descriptor_bits(self) -> int:
        """Bits of the explicit table; reported apart from the structure's own bits."""
        return self.universe_size * field_bits(self.universe_size)

    def descriptor(self) -> dict:
        return {"kind": "table", "table": list(self.table)}


class CycleWalk:
    """Restrict a permutation of ``[0, U)`` to ``[0, universe_size)`` by iterating it."""

    __slots__ = ("inner", "universe_size", "_fa", "_fi")

    def __init__(self, inner, universe_size: int):
        if not 1 <= universe_size <= inner.universe_size:
            raise ParameterError("restricted universe must be inside the inner universe")
        self.inner = inner
        self.universe_size = universe_size
        native = getattr(inner, "native_walk", None)
        fns = native(universe_size) if native is not None else None
        self._fa, self._fi = fns if fns is not None else (self._walk_apply, self._walk_invert)

    def apply(self, x: int) -> int:
        return self._fa(x)

    def invert(self, y: int) -> int:
        return self._fi(y)

    def _walk_apply(self, x: int) -> int:
        f, u = self.inner.apply, self.universe_size
        y = f(x)
        while y >= u:
            y = f(y)
        return y

    def _walk_invert(self, y: int) -> int:
        f, u = self.inner.invert, self.universe_size
        x = f(y)
        while x >= u:
            x = f(x)
        return x

    @property
    def descriptor_bits(self) -> int:
        return self.inner.descriptor_bits

    def descriptor(self) -> dict:
        return {"kind": "walk", "universe": self.universe_size, "inner": self.inner.descriptor()}


class IdentityPerm:
    __slots__ = ("universe_size",)

    def __init__(self, universe_size: int):
        self.universe_size = universe_size

    def apply(self, x: int) -> int:
        return x

    invert = apply
    descriptor_bits = 0

    def descriptor(self) -> dict:
        return {"kind": "identity", "universe": self.universe_size}


def truncate_universe(u: int, m: int) -> tuple[int, range]:
    """Largest multiple of ``m`` not above ``u``, plus the tail that gets cut off."""
    if m < 1 or m > u:
        raise ParameterError("need 1 <= m <= u")
    u_prime = u - u % m
    return u_prime, range(u_prime, u)


class ChoppedPerm:
    """Split ``inner(x)`` into a bin index in ``[0, m)`` and a quotient in ``[0, u'/m)``.

    ``inner`` permutes ``[0, u')`` where ``u'`` is a multiple of ``m``.  Keys in
    ``[u', full_universe)`` are not handled here and raise ``IgnoredElement``.
    """

    __slots__ = ("inner", "m", "u", "full_universe", "q")

    def __init__(self, inner, m: int, full_universe: int | None = None):
        u = inner.universe_size
        if m < 1 or u % m:
            raise ParameterError("bin count must divide the permuted universe")
        if full_universe is None:
            full_universe = u
        if full_universe < u:
            raise ParameterError("full universe cannot be smaller than the permuted one")
        self.inner = inner
        self.m = m
        self.u = u
        self.full_universe = full_universe
        self.q = u // m

    def chop(self, x: int) -> tuple[int, int]:
        if x >= self.u or x < 0:
            if self.u <= x < self.full_universe:
                raise IgnoredElement(f"{x} lies in the truncated tail")
            raise DomainError(f"{x} outside universe [0, {self.full_universe})")
        return divmod(self.inner.apply(x), self.q)

    def unchop(self, bin: int, quotient: int) -> int:
        if not 0 <= bin < self.m or not 0 <= quotient < self.q:
            raise DomainError("bin or quotient out of range")
        return self.inner.invert(bin * self.q + quotient)

    @property
    def descriptor_bits(self) -> int:
        return self.inner.descriptor_bits

    def descriptor(self) -> dict:
        return {"kind": "chopped", "m": self.m, "full": self.full_universe, "inner": self.inner.descriptor()}


def chop(perm: ChoppedPerm, x: int) -> tuple[int, int]:
    return perm.chop(x)


def unchop(perm: ChoppedPerm, bin: int, quotient: int) -> int:
    return perm.unchop(bin, quotient)


def feistel_apply(perm: FeistelPerm, x: int) -> int:
    if not 0 <= x < perm.universe_size:
        raise DomainError(f"{x} outside universe [0, {perm.universe_size})")
    return perm.apply(x)


def feistel_invert(perm: FeistelPerm, y: int) -> int:
    if not 0 <= y < perm.universe_size:
        raise DomainError(f"{y} outside universe [0, {perm.universe_size})")
    return perm.invert(y)


def perm_apply(perm, x: int) -> int:
    return perm.apply(x)


def perm_invert(perm, y: int) -> int:
    return perm.invert(y)


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        # decimal reading, so 0.1 means 1/10 rather than the nearest double
        return Fraction(str(v))
    return Fraction(v)


def nr_unit_delta(k: int, w: int) -> Fraction:
    """Dependence of one two-round unit on a ``w``-bit universe: ``k^2/2^(w/2) + k^2/2^w``."""
    return Fraction(k * k, 1 << (w // 2)) + Fraction(k * k, 1 << w)


def nr_rounds_needed(delta, target) -> int:
    """Least ``t`` with ``(2*delta)^t / 2 <= target``."""
    delta = _as_fraction(delta)
    target = _as_fraction(target)
    if target <= 0:
        raise ParameterError("target must be positive")
    if target >= delta:
        return 1
    if 2 * delta >= 1:
        raise ParameterError("target unreachable: composing units does not reduce dependence when 2*delta >= 1")
    t = 1
    v = delta
    while v > target:
        v *= 2 * delta
        t += 1
    return t


def nr_unit(k: int, w: int, rng=None) -> list:
    """``P1, F_g1, swap, F_g2, P2`` over ``[0, 2^w)`` in application order."""
    rng = make_rng(rng)
    half = 1 << (w // 2)
    u = 1 << w
    p_perm = next_prime(u)
    p_half = next_prime(half)
    p1 = sample_pairwise_perm(u, rng, p_perm)
    g1 = sample_kwise(k, half, half, rng, p_half)
    g2 = sample_kwise(k, half, half, rng, p_half)
    p2 = sample_pairwise_perm(u, rng, p_perm)
    return [p1, FeistelPerm(g1, half, half), SwapHalves(w), FeistelPerm(g2, half, half), p2]


def nr_perm_new(k: int, delta_target, universe_bits: int, rng=None) -> ComposedPerm:
    """Compose enough independent units to reach ``delta_target``-dependence on ``k`` inputs."""
    if k < 2:
        raise ParameterError("k must be at least 2")
    if universe_bits <= 0 or universe_bits % 2:
        raise ParameterError("universe must be 2^w with w even and positive")
    rng = make_rng(rng)
    t = nr_rounds_needed(nr_unit_delta(k, universe_bits), delta_target)
    rounds = []
    for _ in range(t):
        rounds.extend(nr_unit(k, universe_bits, rng))
    return NRPerm(rounds, universe_bits)


def even_width(universe_size: int) -> int:
    """Smallest even ``w >= 2`` with ``2^w >= universe_size``."""
    w = max(2, (universe_size - 1).bit_length())
    return w + (w % 2)


def max_nr_k(w: int, unit_delta_cap=Fraction(1, 4)) -> int:
    """Largest ``k`` whose single-unit dependence on ``2^w`` stays within the cap."""
    k = 2
    while nr_unit_delta(k + 1, w) <= unit_delta_cap:
        k += 1
    return k


def sample_perm(universe_size: int, mode: str, rng=None, k: int = 2, delta_target=None) -> object:
    """Random permutation of ``[0, universe_size)``.

    ``mode`` is ``'table'`` (explicit random table), ``'nr'`` (composed
    Naor-Reingold units, cycle-walked from the next even power of two) or
    ``'affine'`` (a single pairwise permutation).
    """
    rng = make_rng(rng)
    if mode == "table":
        return TablePerm.random(universe_size, rng)
    if mode == "affine":
        return sample_pairwise_perm(universe_size, rng)
    if mode == "nr":
        w = even_width(universe_size)
        if delta_target is None:
            delta_target = nr_unit_delta(k, w)
        inner = nr_perm_new(k, delta_target, w, rng)
        if inner.universe_size == universe_size:
            return inner
        return CycleWalk(inner, universe_size)
    raise ParameterError(f"unknown permutation mode {mode!r}")


def perm_from_descriptor(desc: dict):
    kind = desc["kind"]
    if kind == "affine":
        return PairwisePerm(desc["a"], desc["b"], desc["p"], desc["universe"])
    if kind == "feistel":
        return FeistelPerm(hash_from_descriptor(desc["f"]), desc["left"], desc["right"], desc["mode"])
    if kind == "swap":
        return SwapHalves(desc["w"])
    if kind == "composed" and "nr_width" in desc:
        return NRPerm([perm_from_descriptor(r) for r in desc["rounds"]], desc["nr_width"])
    if kind == "composed":
        return ComposedPerm([perm_from_descriptor(r) for r in desc["rounds"]], desc["universe"])
    if kind == "table":
        return TablePerm(desc["table"])
    if kind == "walk":
        return CycleWalk(perm_from_descriptor(desc["inner"]), desc["universe"])
    if kind == "identity":
        return IdentityPerm(desc["universe"])
    if kind == "chopped":
        return ChoppedPerm(perm_from_descriptor(desc["inner"]), desc["m"], desc["full"])
    raise ParameterError(f"unknown permutation kind {kind!r}")

