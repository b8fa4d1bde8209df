"""Binary snapshots of ``BackyardDict`` and ``SuccinctDict``.

Layout (all integers little-endian)::

    magic    4 bytes  b"BYCK"
    version  u16      SNAPSHOT_VERSION
    mode     u8       0 = backyard, 1 = succinct
    reserved u8       0
    plen     u32      length of the params block
    params   plen bytes of UTF-8 JSON
    then sections until end of file:
        tag      4 bytes ASCII
        length   u64
        payload  length bytes of UTF-8 JSON

Sections: ``HASH`` (hash and permutation descriptors), ``BINS`` (first-level
tables; cell values packed into ``cell_bits``-wide fields of 64-bit words as
in ``bins.pack_fields``), ``CUCK`` (cuckoo tables, queue head first, walk
state), ``SIDE`` (bitmap of truncated keys, hex) and ``RNG `` (generator
state, so a restored structure continues the same random stream).
Unknown tags are skipped on load.
"""

from __future__ import annotations

import json
import random
import struct

from .backyard import BackyardDict, BackyardParams
from .errors import ParameterError
from .hash_family import hash_from_descriptor
from .permutations import perm_from_descriptor
from .succinct import SuccinctDict, SuccinctParams

MAGIC = b"BYCK"
SNAPSHOT_VERSION = 1
MODE_BACKYARD = 0
MODE_SUCCINCT = 1
_HEADER = struct.Struct("<4sHBBI")
_SECTION = struct.Struct("<4sQ")


def _section(tag: bytes, obj) -> bytes:
    payload = json.dumps(obj, separators=(",", ":"), sort_keys=True).encode()
    return _SECTION.pack(tag, len(payload)) + payload


def _rng_state(rng) -> list:
    version, internal, gauss = rng.getstate()
    return [version, list(internal), gauss]


def _set_rng_state(rng, state) -> None:
    rng.setstate((state[0], tuple(state[1]), state[2]))


def _drain(table) -> None:
    # maintenance work is finite; running it to completion does not change membership
    while getattr(table, "queue_len", 0):
        table.drive(1 << 16)


def dumps(obj) -> bytes:
    if isinstance(obj, BackyardDict):
        return _dump_backyard(obj)
    if isinstance(obj, SuccinctDict):
        return _dump_succinct(obj)
    raise ParameterError(f"cannot snapshot {type(obj).__name__}")


def loads(data: bytes):
    if len(data) < _HEADER.size:
        raise ParameterError("truncated snapshot")
    magic, version, mode, _, plen = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ParameterError("not a snapshot")
    if version != SNAPSHOT_VERSION:
        raise ParameterError(f"unsupported snapshot version {version}")
    pos = _HEADER.size
    params = json.loads(data[pos:pos + plen])
    pos += plen
    sections = {}
    while pos < len(data):
        tag, length = _SECTION.unpack_from(data, pos)
        pos += _SECTION.size
        sections[tag] = json.loads(data[pos:pos + length])
        pos += length
    if mode == MODE_BACKYARD:
        return _load_backyard(params, sections)
    if mode == MODE_SUCCINCT:
        return _load_succinct(params, sections)
    raise ParameterError(f"unknown snapshot mode {mode}")


def save(obj, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(obj))


def load(path):
    with open(path, "rb") as fh:
        return loads(fh.read())


def _header(mode: int, params: dict) -> bytes:
    p = json.dumps(params, separators=(",", ":"), sort_keys=True).encode()
    return _HEADER.pack(MAGIC, SNAPSHOT_VERSION, mode, 0, len(p)) + p


# -- backyard --------------------------------------------------------------------


def _dump_backyard(d: BackyardDict) -> bytes:
    _drain(d.t0)
    params = {
        "params": d.params.as_dict(),
        "mode_bins": d.mode_bins,
        "mode_cuckoo": d.mode_cuckoo,
        "size": d.size,
        "side_count": d.side_count,
        "failed": d.failed,
    }
    if d.mode_cuckoo == "function":
        pair = [d.cuckoo.h1.descriptor(), d.cuckoo.h2.descriptor()]
    else:
        pair = [d.cuckoo.pi1.descriptor(), d.cuckoo.pi2.descriptor()]
    out = [
        _header(MODE_BACKYARD, params),
        _section(b"HASH", {"h0": d.h0.descriptor(), "pair": pair}),
        _section(b"BINS", d.t0.export()),
        _section(b"CUCK", d.cuckoo.export()),
        _section(b"SIDE", d.side.hex()),
        _section(b"RNG ", _rng_state(d.rng)),
    ]
    return b"".join(out)


def _load_backyard(meta: dict, sec: dict) -> BackyardDict:
    params = BackyardParams(**meta["params"])
    h = sec[b"HASH"]
    h0 = hash_from_descriptor(h["h0"])
    if meta["mode_cuckoo"] == "function":
        pair = tuple(hash_from_descriptor(x) for x in h["pair"])
    else:
        pair = tuple(perm_from_descriptor(x) for x in h["pair"])
    rng = random.Random()
    d = BackyardDict(params.n, params.eps, params.c, params.u, meta["mode_bins"], meta["mode_cuckoo"],
                     params=params, h0=h0, cuckoo_pair=pair, seed=rng)
    d.t0.restore(sec[b"BINS"])
    d.cuckoo.restore(sec[b"CUCK"])
    d.side = bytearray.fromhex(sec[b"SIDE"])
    d.size = meta["size"]
    d.side_count = meta["side_count"]
    d.failed = meta["failed"]
    if b"RNG " in sec:
        _set_rng_state(d.rng, sec[b"RNG "])
    return d


# -- succinct --------------------------------------------------------------------


def _dump_succinct(s: SuccinctDict) -> bytes:
    for B in s.bins:
        _drain(B.table)
    params = {
        "params": s.params.as_dict(),
        "perm_mode": s.perm_mode,
        "encoding": s.encoding,
        "perm_k": s.perm_k,
        "size": s.size,
        "side_count": s.side_count,
        "failed": s.failed,
        "loads": s.outer_loads(),
    }
    hashes = {
        "outer": s.outer.f.descriptor() if s.outer is not None else None,
        "perms": [s.pi0.inner.descriptor(), s.pi1.descriptor(), s.pi2.descriptor()],
    }
    out = [
        _header(MODE_SUCCINCT, params),
        _section(b"HASH", hashes),
        _section(b"BINS", [B.table.export() for B in s.bins]),
        _section(b"CUCK", [B.cuckoo.export() for B in s.bins]),
        _section(b"SIDE", s.side.hex()),
        _section(b"RNG ", _rng_state(s.rng)),
    ]
    return b"".join(out)


def _load_succinct(meta: dict, sec: dict) -> SuccinctDict:
    params = SuccinctParams(**meta["params"])
    h = sec[b"HASH"]
    outer_f = hash_from_descriptor(h["outer"]) if h["outer"] is not None else None
    perms = [perm_from_descriptor(x) for x in h["perms"]]
    s = SuccinctDict(params.u, params.n, perm_mode=meta["perm_mode"], encoding=meta["encoding"],
                     perm_k=meta["perm_k"], params=params, outer_f=outer_f, perms=perms, seed=random.Random())
    for B, tb, cu, load in zip(s.bins, sec[b"BINS"], sec[b"CUCK"], meta["loads"]):
        B.table.restore(tb)
        B.cuckoo.restore(cu)
        B.load = load
    s.side = bytearray.fromhex(sec[b"SIDE"])
    s.size = meta["size"]
    s.side_count = meta["side_count"]
    s.failed = meta["failed"]
    if b"RNG " in sec:
        _set_rng_state(s.rng, sec[b"RNG "])
    return s
