"""De-amortized cuckoo hashing with a queue and cycle detection.

Two tables ``T1``, ``T2`` of ``r`` cells each.  An element lives in
``T1[h1(x)]``, in ``T2[h2(x)]`` or in the queue.  Inserts append to the back
of the queue and then run at most ``L`` moves on the element at its head.

In permutation mode ``h_b(x)`` and the stored identity are the high and low
parts of ``pi_b(x)``, so a cell holds only ``log2(u/r)`` bits and the full key
is recovered through ``pi_b`` inverse when the occupant is evicted.

An optional ``hook`` gets the first chance to place each element taken from
the head of the queue; the two-level dictionaries use it to move elements back
to the first level.
"""

from __future__ import annotations

from collections import OrderedDict
from math import ceil

from .combinatorics import ceil_log2
from .errors import ParameterError, StructuralFailure
from .hash_family import MERSENNE_61, make_rng, sample_kwise


def default_queue_capacity(ell: int) -> int:
    return 4 * max(1, ceil_log2(max(2, ell))) + 4


def table_size(ell: int, fill_slack: float) -> int:
    return ceil((1 + fill_slack) * ell - 1e-9)


class CuckooState:
    """Cuckoo tables, queue and walk state.

    ``mode='function'`` takes two hash functions ``hashes=(h1, h2)`` with
    range ``r`` and stores full keys.  ``mode='permutation'`` takes two
    permutations ``perms=(pi1, pi2)`` of ``[0, u)`` with ``r | u`` and stores
    quotient identities.
    """

    def __init__(
        self,
        ell: int,
        fill_slack: float = 0.2,
        mode: str = "function",
        hashes=None,
        perms=None,
        L: int = 10,
        hook=None,
        queue_capacity: int | None = None,
        r: int | None = None,
        universe_size: int = 1 << 32,
        rng=None,
        k: int = 8,
    ):
        if ell < 1:
            raise ParameterError("cuckoo capacity must be at least 1")
        if L < 0:
            raise ParameterError("L must be non-negative")
        if r is None:
            r = table_size(ell, fill_slack)
        self.ell = ell
        self.r = r
        self.L = L
        self.hook = hook
        self.mode = mode
        self.queue_capacity = queue_capacity if queue_capacity is not None else default_queue_capacity(ell)
        if mode == "function":
            if hashes is None:
                rng = make_rng(rng)
                hashes = (
                    sample_kwise(k, universe_size, r, rng, MERSENNE_61),
                    sample_kwise(k, universe_size, r, rng, MERSENNE_61),
                )
            self.h1, self.h2 = hashes
            self._f1 = getattr(self.h1, "fast", self.h1)
            self._f2 = getattr(self.h2, "fast", self.h2)
            self.universe_size = universe_size
            self.q = None
            self.cell_bits = max(1, ceil_log2(universe_size))
        elif mode == "permutation":
            if perms is None:
                raise ParameterError("permutation mode needs two permutations")
            self.pi1, self.pi2 = perms
            u = self.pi1.universe_size
            if self.pi2.universe_size != u:
                raise ParameterError("both permutations must share one universe")
            if u % r:
                raise ParameterError(f"table size {r} must divide the universe {u}")
            self.universe_size = u
            self.q = u // r
            # identities plus one empty marker
            self.cell_bits = max(1, ceil_log2(self.q + 1))
        else:
            raise ParameterError(f"unknown cuckoo mode {mode!r}")
        self.T = ([None] * r, [None] * r)
        self.queue = OrderedDict()
        self.cdm = set()
        self._walk_key = None
        self.failed = False
        self.size = 0
        # instrumentation
        self.steps = 0
        self.moves = 0
        self.last_moves = 0
        self.max_moves = 0
        self.queue_high = 0
        self.failures = 0
        self.hook_placements = 0
        self.second_cycles = 0

    # -- locating ------------------------------------------------------------

    def locate(self, x: int, b: int) -> tuple[int, int]:
        """``(cell, identity)`` of ``x`` in table ``b`` (0 or 1)."""
        if self.q is None:
            return (self._f1(x) if b == 0 else self._f2(x)), x
        v = self.pi1.apply(x) if b == 0 else self.pi2.apply(x)
        return divmod(v, self.q)

    def reconstruct(self, b: int, cell: int, ident: int) -> int:
        if self.q is None:
            return ident
        v = cell * self.q + ident
        return self.pi1.invert(v) if b == 0 else self.pi2.invert(v)

    def evict_reconstruct(self, b: int, cell: int) -> int:
        ident = self.T[b][cell]
        if ident is None:
            raise ParameterError("cell is empty")
        return self.reconstruct(b, cell, ident)

    def where(self, x: int):
        """``('queue', None)``, ``(0, cell)``, ``(1, cell)`` or ``None``."""
        if x in self.queue:
            return ("queue", None)
        for b in (0, 1):
            c, i = self.locate(x, b)
            if self.T[b][c] == i:
                return (b, c)
        return None

    # -- operations ----------------------------------------------------------

    def contains(self, x: int) -> bool:
        self.steps += 1
        if x in self.queue:
            return True
        if self.q is None:
            self.steps += 4
            return self.T[0][self._f1(x)] == x or self.T[1][self._f2(x)] == x
        self.steps += 4
        c, i = divmod(self.pi1.apply(x), self.q)
        if self.T[0][c] == i:
            return True
        c, i = divmod(self.pi2.apply(x), self.q)
        return self.T[1][c] == i

    def _check(self) -> None:
        if self.failed:
            raise StructuralFailure("cuckoo queue overflowed earlier; structure must be rebuilt")

    def insert(self, x: int) -> None:
        """Queue ``x`` and run up to ``L`` moves.  Inserting a member is a no-op."""
        self._check()
        if self.contains(x):
            self.last_moves = 0
            return
        self.size += 1
        self.queue[x] = 0
        self.steps += 1
        n = len(self.queue)
        if n > self.queue_high:
            self.queue_high = n
        if n > self.queue_capacity:
            self.failed = True
            self.failures += 1
            raise StructuralFailure(f"cuckoo queue exceeded its capacity of {self.queue_capacity}")
        self.process(self.L)

    def process(self, budget: int) -> int:
        """Run up to ``budget`` moves from the head of the queue; returns moves made."""
        if not self.queue:
            self.last_moves = 0
            return 0
        queue, T, cdm, hook = self.queue, self.T, self.cdm, self.hook
        moves = 0
        y = None
        b = 0
        steps = 0
        while moves < budget:
            if y is None:
                if not queue:
                    break
                y, b = queue.popitem(last=False)
                steps += 1
                if y != self._walk_key:
                    cdm.clear()
                    self._walk_key = y
            moves += 1
            if hook is not None and hook(y):
                self.hook_placements += 1
                self.size -= 1
                y = None
                cdm.clear()
                self._walk_key = None
                continue
            c, ident = self.locate(y, b)
            steps += 2
            tab = T[b]
            occ = tab[c]
            if occ is None:
                tab[c] = ident
                steps += 1
                y = None
                cdm.clear()
                self._walk_key = None
                continue
            if (y, b) in cdm:
                # second cycle closed: park y at the back and start afresh
                queue[y] = b
                steps += 2
                self.second_cycles += 1
                y = None
                cdm.clear()
                self._walk_key = None
                continue
            z = self.reconstruct(b, c, occ)
            tab[c] = ident
            cdm.add((y, b))
            steps += 3
            y, b = z, 1 - b
            self._walk_key = y
        if y is not None:
            queue[y] = b
            queue.move_to_end(y, last=False)
            steps += 1
        self.moves += moves
        self.last_moves = moves
        if moves > self.max_moves:
            self.max_moves = moves
        self.steps += steps
        return moves

    def delete(self, x: int) -> bool:
        self._check()
        self.steps += 1
        if x in self.queue:
            del self.queue[x]
            self.size -= 1
            return True
        for b in (0, 1):
            c, i = self.locate(x, b)
            self.steps += 2
            if self.T[b][c] == i:
                self.T[b][c] = None
                self.steps += 1
                self.size -= 1
                return True
        return False

    # -- inspection ----------------------------------------------------------

    def members(self) -> list[int]:
        out = list(self.queue)
        for b in (0, 1):
            for c, ident in enumerate(self.T[b]):
                if ident is not None:
                    out.append(self.reconstruct(b, c, ident))
        return out

    def __len__(self) -> int:
        return self.size

    def stats(self) -> dict:
        return {
            "moves": self.moves,
            "max_moves": self.max_moves,
            "queue_len": len(self.queue),
            "queue_high": self.queue_high,
            "queue_capacity": self.queue_capacity,
            "failures": self.failures,
            "hook_placements": self.hook_placements,
            "second_cycles": self.second_cycles,
        }

    def export(self) -> dict:
        """Tables, queue (head first) and the paused walk."""
        return {
            "T": [list(self.T[0]), list(self.T[1])],
            "queue": [[x, b] for x, b in self.queue.items()],
            "cdm": sorted([y, b] for y, b in self.cdm),
            "walk_key": self._walk_key,
            "size": self.size,
            "failed": self.failed,
        }

    def restore(self, data: dict) -> None:
        if len(data["T"][0]) != self.r or len(data["T"][1]) != self.r:
            raise ParameterError("table size mismatch")
        self.T = (list(data["T"][0]), list(data["T"][1]))
        self.queue = OrderedDict((x, b) for x, b in data["queue"])
        self.cdm = {(y, b) for y, b in data["cdm"]}
        self._walk_key = data["walk_key"]
        self.size = data["size"]
        self.failed = data["failed"]

    def descriptor(self) -> dict:
        if self.q is None:
            return {"mode": "function", "h1": self.h1.descriptor(), "h2": self.h2.descriptor()}
        return {"mode": "permutation", "pi1": self.pi1.descriptor(), "pi2": self.pi2.descriptor()}

    def descriptor_bits(self) -> int:
        if self.q is None:
            return self.h1.descriptor_bits + self.h2.descriptor_bits
        return self.pi1.descriptor_bits + self.pi2.descriptor_bits

    def bits(self) -> dict:
        key_bits = max(1, ceil_log2(self.universe_size))
        return {
            "cells": 2 * self.r * self.cell_bits,
            "queue": self.queue_capacity * (key_bits + 1),
        }


def cuckoo_new(ell: int, fill_slack: float = 0.2, mode: str = "function", pair=None, L: int = 10,
               hook=None, **kw) -> CuckooState:
    if mode == "function":
        return CuckooState(ell, fill_slack, mode, hashes=pair, L=L, hook=hook, **kw)
    return CuckooState(ell, fill_slack, mode, perms=pair, L=L, hook=hook, **kw)


def cuckoo_insert(state: CuckooState, x: int) -> str:
    try:
        state.insert(x)
    except StructuralFailure:
        return "structural_failure"
    return "ok"


def cuckoo_lookup(state: CuckooState, x: int) -> bool:
    return state.contains(x)


def cuckoo_delete(state: CuckooState, x: int) -> str:
    return "removed" if state.delete(x) else "absent"


def evict_reconstruct(state: CuckooState, b: int, cell: int) -> int:
    return state.evict_reconstruct(b, cell)
