"""Two-level dictionary: capacity-``d`` bins backed by a de-amortized cuckoo table.

The first level hashes each key with a k-wise independent ``h0`` into one of
``m`` bins.  Keys that find their bin full go to the cuckoo structure, whose
insertion loop first offers every element it handles back to the element's
bin.  With the default parameters the first level holds all but a small
fraction of the keys, so the cuckoo tables need only ``eps*n/4`` words.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from math import ceil, log2

import numpy as np

from .bins import make_bin_table
from .combinatorics import ceil_log2
from .cuckoo import CuckooState, default_queue_capacity, table_size
from .errors import CapacityError, DomainError, ParameterError, StructuralFailure
from .hash_family import MERSENNE_61, make_rng, sample_kwise
from .permutations import sample_perm, truncate_universe


@dataclass(frozen=True)
class BackyardParams:
    n: int
    eps: float
    c: float
    d: int
    m: int
    ell: int
    cuckoo_words: int
    r: int
    L: int = 10
    L_bin: int = 32
    k: int = 64
    fill_slack: float = 0.2
    u: int = 1 << 32

    @property
    def core_words(self) -> int:
        return self.m * self.d + self.cuckoo_words

    @property
    def word_bound(self) -> float:
        return (1 + self.eps) * self.n

    def as_dict(self) -> dict:
        return asdict(self)


def derive_params(n: int, eps: float = 0.25, c: float = 2.0, check_space: bool = True, **overrides) -> BackyardParams:
    """Apply the sizing rules (logs base 2) and check the word budget.

    ``d = ceil(c*log2(1/eps)/eps^2)``, ``m = ceil((1 + eps/2)*n/d)``,
    ``ell = ceil(eps*n/16)``, cuckoo words ``ceil(eps*n/4)`` and
    ``r = ceil((1 + fill_slack)*ell)``.  Any field may be overridden.
    """
    if not 0 < eps < 1:
        raise ParameterError("eps must lie strictly between 0 and 1")
    if n < 1:
        raise ParameterError("n must be positive")
    if c <= 0:
        raise ParameterError("c must be positive")
    fill_slack = overrides.pop("fill_slack", 0.2)
    d = overrides.pop("d", None) or ceil(c * log2(1 / eps) / eps**2 - 1e-9)
    m = overrides.pop("m", None) or ceil((1 + eps / 2) * n / d - 1e-9)
    ell = overrides.pop("ell", None) or max(1, ceil(eps * n / 16 - 1e-9))
    cuckoo_words = overrides.pop("cuckoo_words", None) or max(1, ceil(eps * n / 4 - 1e-9))
    r = overrides.pop("r", None) or table_size(ell, fill_slack)
    k = overrides.pop("k", None) or min(64, n)
    p = BackyardParams(n=n, eps=eps, c=c, d=d, m=m, ell=ell, cuckoo_words=cuckoo_words, r=r, k=k,
                       fill_slack=fill_slack, **overrides)
    if check_space:
        if p.core_words > p.word_bound:
            raise ParameterError(
                f"word budget violated: m*d + cuckoo words = {p.core_words} > (1+eps)n = {p.word_bound}")
        if 2 * p.r > p.cuckoo_words:
            raise ParameterError(f"cuckoo tables need {2 * p.r} words but the budget is {p.cuckoo_words}")
    return p


class BackyardDict:
    """Exact dynamic set over ``[0, u)`` holding at most ``n`` keys.

    ``mode_bins`` is ``'plain'`` or ``'phf'``; ``mode_cuckoo`` is
    ``'function'`` or ``'permutation'``.  ``h0`` may be replaced by any
    callable into ``[0, m)`` for scripted experiments.
    """

    def __init__(self, n: int, eps: float = 0.25, c: float = 2.0, u: int = 1 << 32,
                 mode_bins: str = "plain", mode_cuckoo: str = "function", L: int = 10,
                 L_bin: int = 32, seed=None, params: BackyardParams | None = None, h0=None,
                 cuckoo_pair=None, perm_mode: str | None = None, perm_k: int = 4,
                 cuckoo_k: int = 8, check_space: bool = True, **overrides):
        if params is None:
            params = derive_params(n, eps, c, check_space=check_space, L=L, L_bin=L_bin, u=u, **overrides)
        self.params = params
        self.n = params.n
        self.u = params.u
        self.mode_bins = mode_bins
        self.mode_cuckoo = mode_cuckoo
        self.rng = make_rng(seed)
        rng = self.rng
        word = max(1, ceil_log2(self.u))
        self.h0 = h0 if h0 is not None else sample_kwise(params.k, self.u, params.m, rng, MERSENNE_61)
        self._h0 = getattr(self.h0, "fast", self.h0)
        self.bin_queue_capacity = 4 * max(1, ceil_log2(max(2, self.n)))
        self.t0 = make_bin_table(mode_bins, params.m, params.d, word, rng=rng, L_bin=params.L_bin,
                                 queue_capacity=self.bin_queue_capacity)
        self._phf = mode_bins == "phf"
        self.u_main = self.u
        if mode_cuckoo == "function":
            self.cuckoo = CuckooState(params.ell, params.fill_slack, "function", hashes=cuckoo_pair, L=params.L,
                                      hook=self._hook, r=params.r, universe_size=self.u, rng=rng, k=cuckoo_k)
        elif mode_cuckoo == "permutation":
            u_main, _ = truncate_universe(self.u, params.r)
            self.u_main = u_main
            if cuckoo_pair is None:
                pm = perm_mode or ("table" if u_main <= (1 << 20) else "nr")
                cuckoo_pair = (sample_perm(u_main, pm, rng, k=perm_k), sample_perm(u_main, pm, rng, k=perm_k))
            self.cuckoo = CuckooState(params.ell, params.fill_slack, "permutation", perms=cuckoo_pair,
                                      L=params.L, hook=self._hook, r=params.r)
        else:
            raise ParameterError(f"unknown cuckoo mode {mode_cuckoo!r}")
        # keys in [u_main, u) cannot be quotiented by the cuckoo permutations; one bit each
        self.side = bytearray(-(-(self.u - self.u_main) // 8))
        self.side_count = 0
        self.size = 0
        self.failed = False
        self.hash_evals = 0
        self.ops = 0
        self.max_op_steps = 0
        self.budget_violations = 0
        self.step_budget = self._step_budget()

    # -- internals -----------------------------------------------------------

    def _step_budget(self) -> int:
        p = self.params
        if self._phf:
            return 40 + 24 * p.L + p.L_bin + max(1, ceil_log2(p.d))
        return 2 * p.d + 24 + p.L * (p.d + 16)

    def _hook(self, y: int) -> bool:
        self.hash_evals += 1
        b = self._h0(y)
        t0 = self.t0
        if not t0.has_vacancy(b):
            return False
        if self._phf:
            t0.insert(b, y, drive=False, check=False)
        else:
            t0.insert(b, y)
        return True

    def _steps_now(self) -> int:
        return self.t0.steps + self.cuckoo.steps + self.hash_evals

    def _account(self, start: int) -> None:
        used = self._steps_now() - start
        self.ops += 1
        if used > self.max_op_steps:
            self.max_op_steps = used
        if used > self.step_budget:
            self.budget_violations += 1

    def _check(self, x: int) -> None:
        if self.failed:
            raise StructuralFailure("dictionary is in the failed state; rebuild it")
        if not 0 <= x < self.u:
            raise DomainError(f"{x} outside universe [0, {self.u})")

    def _side_has(self, x: int) -> bool:
        i = x - self.u_main
        return bool(self.side[i >> 3] >> (i & 7) & 1)

    def _fail(self, exc: StructuralFailure):
        self.failed = True
        raise exc

    # -- public operations ---------------------------------------------------

    def contains(self, x: int) -> bool:
        self._check(x)
        start = self._steps_now()
        if x >= self.u_main:
            found = self._side_has(x)
        else:
            self.hash_evals += 1
            found = self.t0.contains(self._h0(x), x) or self.cuckoo.contains(x)
        self._account(start)
        return found

    lookup = contains
    __contains__ = contains

    def insert(self, x: int) -> None:
        """Add ``x``; inserting a member is a no-op.  Raises ``CapacityError`` at ``n`` keys."""
        self._check(x)
        start = self._steps_now()
        try:
            if x >= self.u_main:
                if not self._side_has(x):
                    if self.size >= self.n:
                        raise CapacityError(f"dictionary already holds {self.n} keys")
                    i = x - self.u_main
                    self.side[i >> 3] |= 1 << (i & 7)
                    self.side_count += 1
                    self.size += 1
                return
            self.hash_evals += 1
            b = self._h0(x)
            t0, cuckoo = self.t0, self.cuckoo
            if t0.contains(b, x) or cuckoo.contains(x):
                return
            if self.size >= self.n:
                raise CapacityError(f"dictionary already holds {self.n} keys")
            self.size += 1
            if t0.has_vacancy(b):
                if self._phf:
                    t0.insert(b, x, drive=False, check=False)
                else:
                    t0.insert(b, x)
                cuckoo.process(cuckoo.L)
            else:
                cuckoo.insert(x)
            if self._phf:
                t0.drive(self.params.L_bin)
        except StructuralFailure as exc:
            self._fail(exc)
        finally:
            self._account(start)

    def delete(self, x: int) -> bool:
        self._check(x)
        start = self._steps_now()
        try:
            if x >= self.u_main:
                if not self._side_has(x):
                    return False
                i = x - self.u_main
                self.side[i >> 3] &= ~(1 << (i & 7)) & 0xFF
                self.side_count -= 1
                self.size -= 1
                return True
            self.hash_evals += 1
            b = self._h0(x)
            if self._phf:
                removed = self.t0.delete(b, x, drive=False) or self.cuckoo.delete(x)
                self.t0.drive(self.params.L_bin)
            else:
                removed = self.t0.delete(b, x) or self.cuckoo.delete(x)
            if removed:
                self.size -= 1
            return removed
        except StructuralFailure as exc:
            self._fail(exc)
        finally:
            self._account(start)

    def __len__(self) -> int:
        return self.size

    # -- inspection ----------------------------------------------------------

    def location(self, x: int):
        """``'bin'``, ``'cuckoo'``, ``'queue'``, ``'side'`` or ``None``."""
        if x >= self.u_main:
            return "side" if self._side_has(x) else None
        if self.t0.find(self.h0(x), x) is not None:
            return "bin"
        w = self.cuckoo.where(x)
        if w is None:
            return None
        return "queue" if w[0] == "queue" else "cuckoo"

    def members(self) -> list[int]:
        out = []
        for b in range(self.params.m):
            out.extend(self.t0.members(b))
        out.extend(self.cuckoo.members())
        for i in range(self.u - self.u_main):
            if self.side[i >> 3] >> (i & 7) & 1:
                out.append(self.u_main + i)
        return out

    def second_level_size(self) -> int:
        return len(self.cuckoo)

    def stats(self) -> dict:
        s = {
            "size": self.size,
            "second_level": len(self.cuckoo),
            "side": self.side_count,
            "ops": self.ops,
            "max_op_steps": self.max_op_steps,
            "step_budget": self.step_budget,
            "budget_violations": self.budget_violations,
            "failed": self.failed,
            "cuckoo": self.cuckoo.stats(),
            "bin_queue_high": self.t0.queue_high,
            "bin_queue_capacity": self.bin_queue_capacity if self._phf else 0,
        }
        if self._phf:
            s["rehashes"] = self.t0.rehashes
            s["bin_inserts"] = self.t0.inserts
        return s

    def space_words(self) -> dict:
        return space_words(self)


def space_words(d: BackyardDict) -> dict:
    """Word counts; ``core = m*d + cuckoo budget`` is the quantity bounded by ``(1+eps)n``."""
    p = d.params
    word = max(1, ceil_log2(d.u))
    desc_bits = (d.h0.descriptor_bits if hasattr(d.h0, "descriptor_bits") else 0) + d.cuckoo.descriptor_bits()
    bins = p.m * p.d
    out = {
        "bins": bins,
        "cuckoo_tables": 2 * p.r,
        "cuckoo_budget": p.cuckoo_words,
        "core": bins + p.cuckoo_words,
        "bound": (1 + p.eps) * p.n,
        "queue": d.cuckoo.queue_capacity,
        "bin_queue": d.bin_queue_capacity if d._phf else 0,
        "side": -(-(d.u - d.u_main) // word),
        "hash_descriptors": -(-desc_bits // word),
    }
    out["total"] = out["core"] + out["queue"] + out["bin_queue"] + out["side"] + out["hash_descriptors"]
    out["core_ok"] = out["core"] <= out["bound"] and 2 * p.r <= p.cuckoo_words
    return out


def bin_loads(bins, m: int) -> np.ndarray:
    return np.bincount(np.asarray(bins, dtype=np.int64), minlength=m)


def overflow_from_loads(loads, d: int) -> int:
    loads = np.asarray(loads, dtype=np.int64)
    return int(np.maximum(loads - d, 0).sum())


def overflow_count(h0, S, d: int, m: int) -> int:
    """Keys of ``S`` that land in a bin already holding ``d`` others.

    ``h0`` is a hash with ``eval_many`` or any callable into ``[0, m)``.
    """
    S = list(S)
    if not S:
        return 0
    if hasattr(h0, "eval_many"):
        bins = h0.eval_many(np.asarray(S, dtype=np.uint64)).astype(np.int64)
    else:
        bins = np.fromiter((h0(x) for x in S), dtype=np.int64, count=len(S))
    return overflow_from_loads(bin_loads(bins, m), d)


def default_queue_capacities(n: int, ell: int) -> tuple[int, int]:
    return default_queue_capacity(ell), 4 * max(1, ceil_log2(max(2, n)))
