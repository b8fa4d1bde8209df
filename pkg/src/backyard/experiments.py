"""Experiment drivers shared by the CLI, the acceptance suite and the demos.

Every driver takes explicit seeds and returns plain dicts, so reports are
reproducible and easy to serialise.
"""

from __future__ import annotations

import time
from math import ceil, log2, sqrt

import numpy as np

from .backyard import BackyardDict, derive_params, overflow_from_loads
from .bins import PHFBinTable
from .errors import CapacityError, StructuralFailure
from .filter import MembershipFilter, bits_envelope
from .hash_family import MERSENNE_61, make_rng, sample_kwise
from .succinct import SuccinctDict, info_bound

OP_INSERT, OP_DELETE, OP_LOOKUP = 0, 1, 2


def key_pool(gen: np.random.Generator, u: int, size: int) -> list[int]:
    """``size`` distinct keys of ``[0, u)`` in random order, including both ends of the universe."""
    want = min(size, u)
    edge = min(8, want // 4, u // 2)
    ends = np.concatenate([np.arange(edge, dtype=np.uint64), np.arange(u - edge, u, dtype=np.uint64)])
    need = want - len(ends)
    if u <= 4 * want:
        rest = gen.permutation(np.arange(edge, u - edge, dtype=np.uint64))[:need]
    else:
        rest = np.empty(0, dtype=np.uint64)
        while len(rest) < need:
            cand = gen.integers(edge, u - edge, size=need + need // 4 + 16, dtype=np.uint64)
            rest = np.unique(np.concatenate([rest, cand]))
        rest = gen.permutation(rest)[:need]
    keys = np.concatenate([ends, rest])
    gen.shuffle(keys)
    return keys.tolist()


def make_structure(kind: str, n: int, u: int, seed, **kw):
    if kind == "backyard":
        kw.setdefault("check_space", False)
        return BackyardDict(n, u=u, seed=seed, **kw)
    if kind == "succinct":
        return SuccinctDict(u, n, seed=seed, **kw)
    raise ValueError(f"unknown structure {kind!r}")


def ops_fuzz(kind: str, n: int, u: int, n_ops: int, seed: int, p_insert: float = 0.45,
             p_delete: float = 0.25, pool_factor: float = 2.0, checkpoints: int = 10, **kw) -> dict:
    """Drive a structure and a ``set`` model with one random op sequence and compare every answer.

    The key pool is ``pool_factor * n`` keys, so the live set saturates at
    ``n`` and inserts beyond capacity must raise ``CapacityError``.
    """
    gen = np.random.default_rng(seed)
    pool = key_pool(gen, u, max(1, int(pool_factor * n)))
    ops = gen.choice(3, size=n_ops, p=[p_insert, p_delete, 1 - p_insert - p_delete]).astype(np.int8).tolist()
    idx = gen.integers(0, len(pool), size=n_ops).tolist()
    d = make_structure(kind, n, u, seed, **kw)
    model = set()
    ins, dele, look = d.insert, d.delete, d.contains
    mismatches = capacity_hits = failures = 0
    stride = max(1, n_ops // checkpoints) if checkpoints else n_ops + 1
    done = 0
    t0 = time.perf_counter()
    try:
        for i, (op, j) in enumerate(zip(ops, idx)):
            x = pool[j]
            if op == OP_INSERT:
                if x in model or len(model) < n:
                    ins(x)
                    model.add(x)
                else:
                    try:
                        ins(x)
                        mismatches += 1
                        model.add(x)
                    except CapacityError:
                        capacity_hits += 1
            elif op == OP_DELETE:
                if dele(x) != (x in model):
                    mismatches += 1
                model.discard(x)
            elif look(x) != (x in model):
                mismatches += 1
            done = i + 1
            if done % stride == 0 and (len(d) != len(model) or set(d.members()) != model):
                mismatches += 1
    except StructuralFailure:
        failures += 1
    elapsed = time.perf_counter() - t0
    if not failures and set(d.members()) != model:
        mismatches += 1
    st = d.stats()
    row = {
        "kind": kind,
        "seed": seed,
        "n": n,
        "u": u,
        "ops": done,
        "ops_requested": n_ops,
        "mismatches": mismatches,
        "structural_failures": failures,
        "capacity_rejections": capacity_hits,
        "final_size": len(model),
        "seconds": elapsed,
    }
    if kind == "backyard":
        row.update(
            mode_bins=d.mode_bins,
            mode_cuckoo=d.mode_cuckoo,
            max_op_steps=st["max_op_steps"],
            step_budget=st["step_budget"],
            budget_violations=st["budget_violations"],
            cuckoo_queue_high=st["cuckoo"]["queue_high"],
            bin_queue_high=st["bin_queue_high"],
            max_moves=st["cuckoo"]["max_moves"],
        )
    else:
        row.update(
            encoding=d.encoding,
            perm_mode=d.perm_mode,
            cuckoo_queue_high=st["cuckoo_queue_high"],
            bin_queue_high=st["bin_queue_high"],
            max_outer_load=st["max_outer_load"],
        )
    return row


# -- overflow --------------------------------------------------------------------


def overflow_trial(n: int, eps: float, c: float, seed: int, mode: str = "kwise", u: int | None = None,
                   k: int | None = None) -> dict:
    """Overflow of one random ``n``-set under a fresh first-level map.

    ``mode='kwise'`` hashes with a ``k``-wise polynomial into ``[m]``;
    ``mode='perm'`` applies a uniformly random permutation of ``[0, u')``
    (``u'`` the largest multiple of ``m`` not above ``u``) and takes the high
    part as the bin.
    """
    p = derive_params(n, eps, c, check_space=False)
    gen = np.random.default_rng(seed)
    if mode == "kwise":
        u = u or (1 << 32)
        S = np.array(key_pool(gen, u, n), dtype=np.uint64)
        h0 = sample_kwise(k or p.k, u, p.m, make_rng(seed), MERSENNE_61)
        bins = h0.eval_many(S).astype(np.int64)
    elif mode == "perm":
        u = u or (1 << 20)
        u_trunc = u - u % p.m
        S = gen.choice(u_trunc, size=n, replace=False)
        pi = gen.permutation(u_trunc)
        bins = pi[S] // (u_trunc // p.m)
    else:
        raise ValueError(f"unknown overflow mode {mode!r}")
    loads = np.bincount(bins, minlength=p.m)
    ov = overflow_from_loads(loads, p.d)
    bound = eps * n / 16
    return {"seed": seed, "mode": mode, "n": n, "d": p.d, "m": p.m, "overflow": ov, "bound": bound,
            "ok": ov <= bound, "max_load": int(loads.max())}


def overflow_stats(n: int, eps: float, c: float, seeds, mode: str = "kwise", **kw) -> dict:
    rows = [overflow_trial(n, eps, c, s, mode, **kw) for s in seeds]
    passed = sum(r["ok"] for r in rows)
    ovs = [r["overflow"] for r in rows]
    return {"rows": rows, "passed": passed, "trials": len(rows), "mean_overflow": float(np.mean(ovs)),
            "max_overflow": int(max(ovs)), "bound": eps * n / 16}


# -- queues ----------------------------------------------------------------------


def queue_trial(n: int, seed: int, L: int = 10, mode_bins: str = "phf", mode_cuckoo: str = "function",
                churn: float = 0.5, eps: float = 0.25, L_bin: int = 32, **kw) -> dict:
    """Fill to ``n`` then replace ``churn * n`` keys; report queue high-water marks."""
    gen = np.random.default_rng(seed)
    u = 1 << 32
    extra = int(churn * n)
    keys = key_pool(gen, u, n + extra)
    d = BackyardDict(n, eps, u=u, mode_bins=mode_bins, mode_cuckoo=mode_cuckoo, L=L, L_bin=L_bin, seed=seed,
                     check_space=False, **kw)
    live = keys[:n]
    failure = None
    try:
        for x in live:
            d.insert(x)
        order = gen.permutation(n).tolist()
        for i in range(extra):
            d.delete(live[order[i]])
            d.insert(keys[n + i])
    except StructuralFailure as exc:
        failure = str(exc)
    st = d.stats()
    return {
        "seed": seed,
        "n": n,
        "L": L,
        "mode_bins": mode_bins,
        "cuckoo_queue_high": st["cuckoo"]["queue_high"],
        "bin_queue_high": st["bin_queue_high"],
        "bound": 4 * log2(n),
        "failure": failure,
        "budget_violations": st["budget_violations"],
        "max_op_steps": st["max_op_steps"],
        "step_budget": st["step_budget"],
    }


def queue_stats(n: int, seeds, **kw) -> dict:
    rows = [queue_trial(n, s, **kw) for s in seeds]
    bound = 4 * log2(n)
    high = max(max(r["cuckoo_queue_high"], r["bin_queue_high"]) for r in rows)
    return {"rows": rows, "bound": bound, "max_queue": high,
            "ok": high <= bound and not any(r["failure"] for r in rows)}


def queue_starvation(n: int, seed: int, steps: int = 200, L: int = 0) -> list[int]:
    """Cuckoo queue length after each insert that overflows a bin, with ``L`` moves per op."""
    steps = min(steps, n - derive_params(n, 0.25, check_space=False).d)
    if steps < 2:
        raise ValueError("n must exceed the bin capacity by at least two keys")
    d = BackyardDict(n, 0.25, L=L, seed=seed, check_space=False, h0=lambda x: 0, m=1,
                     ell=max(steps, 1), r=4 * steps)
    d.cuckoo.queue_capacity = 10 * steps
    lengths = []
    for x in range(d.params.d + steps):
        d.insert(x)
        if x >= d.params.d:
            lengths.append(len(d.cuckoo.queue))
    return lengths


# -- rehashing -------------------------------------------------------------------


def rehash_rate(d: int, inserts: int, seed: int, fill: float = 0.9, L_bin: int = 32) -> dict:
    """Insert-only fill of PHF bins to ``fill * d``; rehashes per insert against ``3/d``."""
    per_bin = max(1, int(fill * d))
    m = -(-inserts // per_bin)
    gen = np.random.default_rng(seed)
    t = PHFBinTable(m, d, 32, rng=make_rng(seed), L_bin=L_bin, queue_capacity=4 * max(1, ceil(log2(m * d))))
    total = m * per_bin
    xs = key_pool(gen, 1 << 32, total)
    pos = 0
    for b in range(m):
        for _ in range(per_bin):
            t.insert(b, xs[pos])
            pos += 1
    t.drive(1 << 30)
    rate = t.rehashes / total
    limit = 3 / d
    sigma = sqrt(limit * (1 - limit) / total)
    return {
        "d": d,
        "seed": seed,
        "inserts": total,
        "rehashes": t.rehashes,
        "forced": t.rehashes_forced,
        "collision": t.rehashes_collision,
        "rate": rate,
        "limit": limit,
        "sigma": sigma,
        "ok": rate <= limit + 3 * sigma,
        "queue_high": t.queue_high,
    }


# -- filter ----------------------------------------------------------------------


def fpr_trial(n: int, delta: float, queries: int, seed: int, universe: int = 1 << 32, **kw) -> dict:
    gen = np.random.default_rng(seed)
    f = MembershipFilter(n, delta, seed=seed, universe_size=universe, **kw)
    pool = key_pool(gen, universe, n + queries + n // 10 + 16)
    S = pool[:n]
    for x in S:
        f.insert(x)
    false_negatives = int((~f.query_many(S)).sum())
    Q = pool[n:n + queries]
    fp = int(f.query_many(Q).sum())
    rate = fp / queries
    sigma = sqrt(delta * (1 - delta) / queries)
    b = f.bits()
    return {
        "n": n,
        "delta": delta,
        "seed": seed,
        "queries": queries,
        "false_negatives": false_negatives,
        "false_positives": fp,
        "fpr": rate,
        "sigma": sigma,
        "fpr_ok": rate <= delta + 3 * sigma,
        "distinct_hashed": f.inserted,
        "bits": b["bits_total"],
        "bits_per_element": b["bits_per_element"],
        "bits_envelope": b["envelope"],
        "bits_ok": b["bits_total"] <= b["envelope"],
    }


# -- space -----------------------------------------------------------------------


def words_audit(n: int, eps: float, c: float = 2.0) -> dict:
    p = derive_params(n, eps, c, check_space=False)
    core = p.m * p.d + p.cuckoo_words
    return {"n": n, "eps": eps, "d": p.d, "m": p.m, "cuckoo_words": p.cuckoo_words, "r": p.r, "core": core,
            "bound": (1 + eps) * n, "ok": core <= (1 + eps) * n and 2 * p.r <= p.cuckoo_words}


def bits_audit(u: int, n: int, eps: float = 0.25, seed: int = 0, fill: bool = True, **kw) -> dict:
    kw.setdefault("gamma", 0.0)
    kw.setdefault("perm_mode", "nr")
    kw.setdefault("encoding", "binomial")
    kw.setdefault("perm_k", 2)
    s = SuccinctDict(u, n, eps=eps, seed=seed, **kw)
    if fill:
        gen = np.random.default_rng(seed)
        for x in key_pool(gen, u, n):
            s.insert(x)
    a = s.bits_used()
    row = a.as_dict()
    row.update(u=u, n=n, seed=seed, size=len(s))
    return row


def info_bound_row(u: int, n: int) -> dict:
    return {"u": u, "n": n, "info_bound": info_bound(u, n), "naive": n * max(1, ceil(log2(u)))}


# -- throughput ------------------------------------------------------------------


def bench(kind: str, n: int, u: int, seed: int, **kw) -> dict:
    """Fill to ``n``, then ``n`` hits, ``n`` misses and ``n`` deletes; seconds per phase."""
    gen = np.random.default_rng(seed)
    keys = key_pool(gen, u, 2 * n)
    S, miss = keys[:n], keys[n:]
    d = make_structure(kind, n, u, seed, **kw)
    timings = {}
    for name, fn, xs in (("insert", d.insert, S), ("lookup_hit", d.contains, S),
                         ("lookup_miss", d.contains, miss), ("delete", d.delete, S)):
        t0 = time.perf_counter()
        for x in xs:
            fn(x)
        timings[name] = time.perf_counter() - t0
    return {"kind": kind, "n": n, "u": u, "seed": seed, "ops": {k: n for k in timings},
            "seconds": timings, "us_per_op": {k: v / n * 1e6 for k, v in timings.items()}}


__all__ = [
    "bench",
    "bits_audit",
    "bits_envelope",
    "fpr_trial",
    "info_bound_row",
    "key_pool",
    "make_structure",
    "ops_fuzz",
    "overflow_stats",
    "overflow_trial",
    "queue_starvation",
    "queue_stats",
    "queue_trial",
    "rehash_rate",
    "words_audit",
]
