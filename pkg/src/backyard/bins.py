"""First-level bin tables.

Three backends share one interface (``contains``, ``find``, ``insert``,
``delete``, ``has_vacancy``, ``load``, ``members``, ``drive``):

* ``PlainBinTable``: ``m`` rows of ``d`` cells scanned linearly.
* ``PHFBinTable``: per-bin perfect hashing into ``[d^2]`` with an association
  map ``g`` from hash value to cell.  Inserts and rehashes are queued on one
  shared ``BinQueue`` and executed in metered unit steps.
* ``BinomialBinTable``: each bin is one integer code naming the subset of
  quotients it holds.

Each table keeps a running ``steps`` counter.  One step is one cell probe or
write, one hash evaluation, or one probe or edit of ``g``.
"""

from __future__ import annotations

from collections import deque

from .combinatorics import BoundedSubsetCode, ceil_log2
from .errors import DuplicateError, ParameterError, StructuralFailure
from .hash_family import MERSENNE_61, field_bits, make_rng


def pack_fields(values, width: int) -> list[int]:
    """Pack non-negative integers into ``width``-bit little-endian fields of 64-bit words.

    Field ``i`` occupies bits ``[i*width, (i+1)*width)`` of the concatenated
    word stream, word 0 holding the lowest bits.
    """
    acc = 0
    for i, v in enumerate(values):
        if v < 0 or v >> width:
            raise ParameterError(f"value {v} does not fit in {width} bits")
        acc |= v << (i * width)
    nbits = len(values) * width
    nwords = -(-nbits // 64)
    mask = (1 << 64) - 1
    return [(acc >> (64 * j)) & mask for j in range(nwords)]


def unpack_fields(words, width: int, count: int) -> list[int]:
    acc = 0
    for j, w in enumerate(words):
        acc |= int(w) << (64 * j)
    mask = (1 << width) - 1
    return [(acc >> (i * width)) & mask for i in range(count)]


class PlainBinTable:
    """``m`` bins of ``d`` cells; empty cells hold ``None``.

    With ``empty_code`` set, stored values lie in ``[0, empty_code)`` and an
    empty cell is encoded as ``empty_code`` itself, so no occupancy bitmap is
    needed.
    """

    kind = "plain"

    def __init__(self, m: int, d: int, cell_bits: int, empty_code: int | None = None):
        if m < 1 or d < 1:
            raise ParameterError("need at least one bin of at least one cell")
        if empty_code is not None and empty_code >> cell_bits:
            raise ParameterError("empty marker does not fit in a cell")
        self.m = m
        self.d = d
        self.cell_bits = cell_bits
        self.empty_code = empty_code
        self.rows = [[None] * d for _ in range(m)]
        self.loads = [0] * m
        self.steps = 0

    def contains(self, b: int, x: int) -> bool:
        row = self.rows[b]
        if x in row:
            self.steps += row.index(x) + 1
            return True
        self.steps += self.d
        return False

    def find(self, b: int, x: int):
        row = self.rows[b]
        if x in row:
            j = row.index(x)
            self.steps += j + 1
            return j
        self.steps += self.d
        return None

    def has_vacancy(self, b: int) -> bool:
        self.steps += 1
        return self.loads[b] < self.d

    def load(self, b: int) -> int:
        return self.loads[b]

    def insert(self, b: int, x: int) -> bool:
        """Place ``x`` in the lowest free cell; ``False`` when the bin is full."""
        row = self.rows[b]
        if self.loads[b] >= self.d:
            self.steps += 1
            return False
        if x in row:
            raise DuplicateError(f"{x} already stored in bin {b}")
        j = row.index(None)
        self.steps += j + 2
        row[j] = x
        self.loads[b] += 1
        return True

    def delete(self, b: int, x: int) -> bool:
        row = self.rows[b]
        if x in row:
            j = row.index(x)
            row[j] = None
            self.loads[b] -= 1
            self.steps += j + 2
            return True
        self.steps += self.d
        return False

    def members(self, b: int) -> list[int]:
        return [x for x in self.rows[b] if x is not None]

    def drive(self, steps: int) -> int:
        return 0

    @property
    def queue_len(self) -> int:
        return 0

    queue_high = 0
    failed = False

    def bits(self) -> dict:
        cells = self.m * self.d
        occupancy = 0 if self.empty_code is not None else cells
        return {"cells": cells * self.cell_bits, "occupancy": occupancy, "bookkeeping": 0}

    def export(self) -> dict:
        flat = [c for row in self.rows for c in row]
        if self.empty_code is not None:
            e = self.empty_code
            return {"cells": pack_fields([e if c is None else c for c in flat], self.cell_bits)}
        vals = [0 if c is None else c for c in flat]
        occ = [0 if c is None else 1 for c in flat]
        return {"cells": pack_fields(vals, self.cell_bits), "occupancy": pack_fields(occ, 1)}

    def restore(self, data: dict) -> None:
        n = self.m * self.d
        vals = unpack_fields(data["cells"], self.cell_bits, n)
        if self.empty_code is not None:
            occ = [int(v != self.empty_code) for v in vals]
        else:
            occ = unpack_fields(data["occupancy"], 1, n)
        d = self.d
        self.rows = [[vals[b * d + j] if occ[b * d + j] else None for j in range(d)] for b in range(self.m)]
        self.loads = [sum(1 for c in row if c is not None) for row in self.rows]


class BinQueue:
    """FIFO of pending bin work shared by every bin of a ``PHFBinTable``.

    Tasks are ``("ins", bin, x, token)`` or ``("rehash", bin, extra, gen)``.
    The task at the head may be partially done; its remaining cost is kept in
    ``remaining`` and its effect lands when that reaches zero.
    """

    __slots__ = ("tasks", "capacity", "high", "current", "remaining", "plan")

    def __init__(self, capacity: int):
        self.tasks = deque()
        self.capacity = capacity
        self.high = 0
        self.current = None
        self.remaining = 0
        self.plan = None

    def __len__(self) -> int:
        return len(self.tasks) + (self.current is not None)


class PHFBinTable:
    """Bins with per-bin perfect hashing and queued, metered maintenance.

    Bin ``b`` keeps a pairwise hash ``h_b`` into ``[d^2]`` and a map ``g_b``
    from hash values to cells.  A lookup costs one hash evaluation, one ``g``
    probe and one cell comparison, plus a probe of the pending-insert index.
    A deleted element stays in its cell as a tombstone (stored as ``~x``) and
    keeps its ``g`` entry until the bin is rehashed, so it still occupies a
    hash value; its cell is reused by later inserts.  Every ``nu_b`` updates
    (``nu_b`` uniform on ``1..d``) the bin is rebuilt with a fresh ``h_b``.
    """

    kind = "phf"

    def __init__(self, m: int, d: int, cell_bits: int, rng=None, L_bin: int = 32, queue_capacity: int = 64):
        if m < 1 or d < 1:
            raise ParameterError("need at least one bin of at least one cell")
        if L_bin < 0:
            raise ParameterError("L_bin must be non-negative")
        self.m = m
        self.d = d
        self.dd = d * d
        self.cell_bits = cell_bits
        self.L_bin = L_bin
        self.rng = make_rng(rng)
        self.p = MERSENNE_61
        self.cells = [[None] * d for _ in range(m)]
        self.free = [list(range(d - 1, -1, -1)) for _ in range(m)]
        self.ha = [0] * m
        self.hb = [0] * m
        self.g = [dict() for _ in range(m)]
        self.nu = [0] * m
        self.upd = [0] * m
        self.live = [0] * m
        self.tomb = [0] * m
        self.tomb_slots = [set() for _ in range(m)]
        self.pend = [0] * m
        self.gen = [0] * m
        self.rehash_flag = [False] * m
        self.pending = {}
        self.queue = BinQueue(queue_capacity)
        self.steps = 0
        self.failed = False
        self._token = 0
        self.rehashes_forced = 0
        self.rehashes_collision = 0
        self.rehash_attempts = []
        self.inserts = 0
        for b in range(m):
            self.ha[b] = self.rng.randrange(self.p)
            self.hb[b] = self.rng.randrange(self.p)
            self.nu[b] = self.rng.randint(1, d)

    # -- reads ---------------------------------------------------------------

    def _h(self, b: int, x: int) -> int:
        return (self.ha[b] * x + self.hb[b]) % self.p % self.dd

    def find(self, b: int, x: int):
        """Cell index of ``x``, ``-1`` if it is queued for insertion, else ``None``."""
        self.steps += 4
        j = self.g[b].get((self.ha[b] * x + self.hb[b]) % self.p % self.dd)
        if j is not None and self.cells[b][j] == x:
            return j
        if (b, x) in self.pending:
            return -1
        return None

    def contains(self, b: int, x: int) -> bool:
        return self.find(b, x) is not None

    def load(self, b: int) -> int:
        return self.live[b] + self.pend[b]

    def has_vacancy(self, b: int) -> bool:
        self.steps += 1
        return self.live[b] + self.pend[b] < self.d

    def members(self, b: int) -> list[int]:
        out = [x for x in self.cells[b] if x is not None and x >= 0]
        out.extend(x for (bb, x) in self.pending if bb == b)
        return out

    @property
    def queue_len(self) -> int:
        return len(self.queue)

    @property
    def queue_high(self) -> int:
        return self.queue.high

    @property
    def rehashes(self) -> int:
        return self.rehashes_forced + self.rehashes_collision

    # -- updates -------------------------------------------------------------

    def _check(self) -> None:
        if self.failed:
            raise StructuralFailure("bin queue overflowed earlier; structure must be rebuilt")

    def _push(self, task) -> None:
        q = self.queue
        q.tasks.append(task)
        n = len(q)
        if n > q.high:
            q.high = n
        if n > q.capacity:
            self.failed = True
            raise StructuralFailure(f"bin queue exceeded its capacity of {q.capacity}")

    def _count_update(self, b: int) -> None:
        self.upd[b] += 1
        if self.upd[b] >= self.nu[b] and not self.rehash_flag[b]:
            self.rehash_flag[b] = True
            self._push(("rehash", b, None, self.gen[b]))

    def insert(self, b: int, x: int, drive: bool = True, check: bool = True) -> bool:
        """Queue ``x`` for bin ``b``; ``False`` when the bin has no room.

        ``check=False`` skips the duplicate probe when the caller already knows
        ``x`` is absent.
        """
        self._check()
        if self.live[b] + self.pend[b] >= self.d:
            self.steps += 1
            return False
        if check and self.find(b, x) is not None:
            raise DuplicateError(f"{x} already stored in bin {b}")
        self._token += 1
        self.pending[(b, x)] = self._token
        self.pend[b] += 1
        self.inserts += 1
        self.steps += 2
        self._push(("ins", b, x, self._token))
        self._count_update(b)
        if drive:
            self.drive(self.L_bin)
        return True

    def delete(self, b: int, x: int, drive: bool = True) -> bool:
        self._check()
        self.steps += 3
        g = self.g[b]
        j = g.get((self.ha[b] * x + self.hb[b]) % self.p % self.dd)
        row = self.cells[b]
        if j is not None and row[j] == x:
            row[j] = ~x
            self.tomb_slots[b].add(j)
            self.live[b] -= 1
            self.tomb[b] += 1
        elif self.pending.pop((b, x), None) is not None:
            self.pend[b] -= 1
        else:
            self.steps += 1
            return False
        self.steps += 1
        self._count_update(b)
        if drive:
            self.drive(self.L_bin)
        return True

    # -- queue processing ----------------------------------------------------

    def drive(self, steps: int) -> int:
        """Spend up to ``steps`` unit steps on queued work; returns the steps used."""
        q = self.queue
        used = 0
        while used < steps:
            if q.current is None:
                if not q.tasks:
                    break
                self._start(q.tasks.popleft())
                if q.current is None:
                    continue
            take = min(steps - used, q.remaining)
            q.remaining -= take
            used += take
            if q.remaining == 0:
                self._finish()
        self.steps += used
        return used

    def _start(self, task) -> None:
        q = self.queue
        kind, b = task[0], task[1]
        if kind == "ins":
            x, token = task[2], task[3]
            if self.pending.get((b, x)) != token:
                return
            r = (self.ha[b] * x + self.hb[b]) % self.p % self.dd
            j = self.g[b].get(r)
            if j is not None and self.cells[b][j] >= 0:
                self.rehashes_collision += 1
                self._start_rehash(b, x, token, prefix_cost=3)
                return
            q.current = task
            q.plan = (r, j)
            # h, g probe, cell read, cell write, g edit; reusing a tombstone's
            # cell adds an h evaluation and a g edit to retire its entry
            q.remaining = 5 if j is not None or self.free[b] else 7
            return
        if task[3] != self.gen[b]:
            return
        self.rehashes_forced += 1
        self._start_rehash(b, None, None, prefix_cost=0)

    def _start_rehash(self, b: int, x, token, prefix_cost: int) -> None:
        q = self.queue
        elems = [y for y in self.cells[b] if y is not None and y >= 0]
        if x is not None:
            elems.append(x)
        s = len(elems)
        p, dd, rng = self.p, self.dd, self.rng
        attempts = 0
        while True:
            attempts += 1
            a = rng.randrange(p)
            c = rng.randrange(p)
            hv = [(a * y + c) % p % dd for y in elems]
            if len(set(hv)) == s:
                break
        self.rehash_attempts.append(attempts)
        q.current = ("rehash", b, x, token)
        q.plan = (a, c, elems, hv)
        # copy out, evaluate the candidate hash per attempt, rebuild g, copy back
        q.remaining = max(1, prefix_cost + s * (attempts + 3))

    def _finish(self) -> None:
        q = self.queue
        task, plan = q.current, q.plan
        q.current = None
        q.plan = None
        b = task[1]
        if task[0] == "ins":
            x, token = task[2], task[3]
            if self.pending.get((b, x)) != token:
                return
            r, j = plan
            row = self.cells[b]
            g = self.g[b]
            if j is None:
                if self.free[b]:
                    j = self.free[b].pop()
                else:
                    # lowest tombstoned cell, so the layout does not depend on set order
                    j = min(self.tomb_slots[b])
                    self.tomb_slots[b].remove(j)
                    del g[self._h(b, ~row[j])]
                    self.tomb[b] -= 1
                g[r] = j
            else:
                self.tomb_slots[b].discard(j)
                self.tomb[b] -= 1
            row[j] = x
            del self.pending[(b, x)]
            self.pend[b] -= 1
            self.live[b] += 1
            return
        x, token = task[2], task[3]
        a, c, elems, hv = plan
        old_cells, old_g = self.cells[b], self.g[b]
        oa, ob, p, dd = self.ha[b], self.hb[b], self.p, self.dd
        new_cells = [None] * self.d
        new_g = {}
        k = 0
        for y, r in zip(elems, hv):
            if x is not None and y == x:
                keep = self.pending.get((b, x)) == token
                if keep:
                    del self.pending[(b, x)]
                    self.pend[b] -= 1
            else:
                j = old_g.get((oa * y + ob) % p % dd)
                keep = j is not None and old_cells[j] == y
            if keep:
                new_cells[k] = y
                new_g[r] = k
                k += 1
        self.cells[b] = new_cells
        self.g[b] = new_g
        self.free[b] = list(range(self.d - 1, k - 1, -1))
        self.ha[b] = a
        self.hb[b] = c
        self.live[b] = k
        self.tomb[b] = 0
        self.tomb_slots[b] = set()
        self.upd[b] = 0
        self.nu[b] = self.rng.randint(1, self.d)
        self.gen[b] += 1
        self.rehash_flag[b] = False

    # -- accounting ----------------------------------------------------------

    def descriptor_bits_per_bin(self) -> int:
        """``g`` as ``d`` pairs of (hash value, cell) plus the two hash coefficients."""
        lg = max(1, ceil_log2(self.d))
        return 3 * self.d * lg + 2 * field_bits(self.p)

    def bits(self) -> dict:
        cells = self.m * self.d
        counters = 2 * max(1, ceil_log2(self.d + 1))
        return {
            "cells": cells * self.cell_bits,
            "occupancy": 2 * cells,
            "bookkeeping": self.m * (self.descriptor_bits_per_bin() + counters),
        }

    def export(self) -> dict:
        """Cells with a 2-bit state per cell (0 empty, 1 live, 2 tombstone) and per-bin hash state.

        Requires a drained queue.
        """
        if len(self.queue):
            raise ParameterError("drain the bin queue before exporting")
        vals, state = [], []
        for row in self.cells:
            for c in row:
                if c is None:
                    vals.append(0)
                    state.append(0)
                elif c < 0:
                    vals.append(~c)
                    state.append(2)
                else:
                    vals.append(c)
                    state.append(1)
        return {
            "cells": pack_fields(vals, self.cell_bits),
            "state": pack_fields(state, 2),
            "ha": list(self.ha),
            "hb": list(self.hb),
            "g": [sorted(g.items()) for g in self.g],
            "nu": list(self.nu),
            "upd": list(self.upd),
        }

    def restore(self, data: dict) -> None:
        n = self.m * self.d
        d = self.d
        vals = unpack_fields(data["cells"], self.cell_bits, n)
        state = unpack_fields(data["state"], 2, n)
        cells = []
        for b in range(self.m):
            row = []
            for j in range(d):
                s = state[b * d + j]
                row.append(None if s == 0 else (vals[b * d + j] if s == 1 else ~vals[b * d + j]))
            cells.append(row)
        self.cells = cells
        self.free = [[j for j in range(d - 1, -1, -1) if row[j] is None] for row in cells]
        self.ha = list(data["ha"])
        self.hb = list(data["hb"])
        self.g = [{int(r): int(j) for r, j in pairs} for pairs in data["g"]]
        self.nu = list(data["nu"])
        self.upd = list(data["upd"])
        self.live = [sum(1 for c in row if c is not None and c >= 0) for row in cells]
        self.tomb_slots = [{j for j, c in enumerate(row) if c is not None and c < 0} for row in cells]
        self.tomb = [len(t) for t in self.tomb_slots]
        self.pend = [0] * self.m
        self.pending = {}
        self.rehash_flag = [False] * self.m
        for b in range(self.m):
            if self.upd[b] >= self.nu[b]:
                self.rehash_flag[b] = True
                self._push(("rehash", b, None, self.gen[b]))


class BinomialBinTable:
    """Bins stored as subset codes over ``[0, q)``.

    Bin ``b`` is the single integer ``codes[b]``, which names a subset of at
    most ``d`` quotients (see ``BoundedSubsetCode``).  Every access decodes it.
    """

    kind = "binomial"

    def __init__(self, m: int, d: int, q: int):
        if m < 1 or d < 1 or q < 1:
            raise ParameterError("need positive bin count, capacity and quotient range")
        self.m = m
        self.d = d
        self.q = q
        self.code = BoundedSubsetCode(q, d)
        self.codes = [0] * m
        self.loads = [0] * m
        self.cell_bits = self.code.bits
        self.steps = 0

    def _decode(self, b: int) -> list[int]:
        self.steps += self.d
        return self.code.decode(self.codes[b])

    def contains(self, b: int, x: int) -> bool:
        return x in self._decode(b)

    def find(self, b: int, x: int):
        elems = self._decode(b)
        return elems.index(x) if x in elems else None

    def has_vacancy(self, b: int) -> bool:
        self.steps += 1
        return self.loads[b] < self.d

    def load(self, b: int) -> int:
        return self.loads[b]

    def insert(self, b: int, x: int) -> bool:
        if self.loads[b] >= self.d:
            self.steps += 1
            return False
        if not 0 <= x < self.q:
            raise ParameterError(f"quotient {x} outside [0, {self.q})")
        elems = self._decode(b)
        if x in elems:
            raise DuplicateError(f"{x} already stored in bin {b}")
        elems.append(x)
        self.codes[b] = self.code.encode(elems)
        self.loads[b] += 1
        self.steps += self.d
        return True

    def delete(self, b: int, x: int) -> bool:
        elems = self._decode(b)
        if x not in elems:
            return False
        elems.remove(x)
        self.codes[b] = self.code.encode(elems)
        self.loads[b] -= 1
        self.steps += self.d
        return True

    def members(self, b: int) -> list[int]:
        return self.code.decode(self.codes[b])

    def drive(self, steps: int) -> int:
        return 0

    @property
    def queue_len(self) -> int:
        return 0

    queue_high = 0
    failed = False

    def bits(self) -> dict:
        return {"cells": self.m * self.code.bits, "occupancy": 0, "bookkeeping": 0}

    def export(self) -> dict:
        return {"cells": pack_fields(self.codes, self.code.bits)}

    def restore(self, data: dict) -> None:
        self.codes = unpack_fields(data["cells"], self.code.bits, self.m)
        self.loads = [self.code.size_of(c) for c in self.codes]


def make_bin_table(mode: str, m: int, d: int, cell_bits: int, rng=None, L_bin: int = 32,
                   queue_capacity: int = 64, q: int | None = None, empty_code: int | None = None):
    if mode == "plain":
        return PlainBinTable(m, d, cell_bits, empty_code)
    if mode == "phf":
        return PHFBinTable(m, d, cell_bits, rng, L_bin, queue_capacity)
    if mode == "binomial":
        if q is None:
            raise ParameterError("binomial bins need the quotient range q")
        return BinomialBinTable(m, d, q)
    raise ParameterError(f"unknown bin mode {mode!r}")


# plain-function aliases mirroring the operation names used in the docs
def plain_bin_insert(table: PlainBinTable, b: int, x: int) -> str:
    return "inserted" if table.insert(b, x) else "bin_full"


def plain_bin_lookup(table: PlainBinTable, b: int, x: int):
    return table.find(b, x)


def plain_bin_delete(table: PlainBinTable, b: int, x: int) -> str:
    return "removed" if table.delete(b, x) else "absent"


def phf_bin_lookup(table: PHFBinTable, b: int, x: int):
    return table.find(b, x)


def phf_bin_insert(table: PHFBinTable, b: int, x: int) -> str:
    return "enqueued" if table.insert(b, x) else "bin_full"


def phf_bin_delete(table: PHFBinTable, b: int, x: int) -> str:
    return "removed" if table.delete(b, x) else "absent"


def process_bin_queue(table: PHFBinTable, steps: int) -> int:
    return table.drive(steps)

