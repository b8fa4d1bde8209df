"""Compiled kernels for polynomial hashing over prime fields.

Two field sizes are supported in native code: the Mersenne prime 2**61 - 1
(reduced with 31-bit limbs so every partial product fits in uint64) and any
prime below 2**32 (products fit in uint64 directly).
"""

import numpy as np
from numba import njit

MERSENNE_61 = (1 << 61) - 1

_P61 = np.uint64(MERSENNE_61)
_M31 = np.uint64((1 << 31) - 1)
_M30 = np.uint64((1 << 30) - 1)
_S1 = np.uint64(1)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_S61 = np.uint64(61)


@njit(cache=True)
def mulmod61(a, b):
    a1 = a >> _S31
    a0 = a & _M31
    b1 = b >> _S31
    b0 = b & _M31
    mid = a1 * b0 + a0 * b1
    # 2**62 = 2 and 2**61 = 1 modulo the prime
    s = ((a1 * b1) << _S1) + (mid >> _S30) + ((mid & _M30) << _S31) + a0 * b0
    s = (s & _P61) + (s >> _S61)
    s = (s & _P61) + (s >> _S61)
    if s >= _P61:
        s -= _P61
    return s


@njit(cache=True)
def horner61(coeffs, x):
    acc = np.uint64(0)
    xx = np.uint64(x)
    for i in range(coeffs.shape[0] - 1, -1, -1):
        acc = mulmod61(acc, xx) + coeffs[i]
        if acc >= _P61:
            acc -= _P61
    return acc


@njit(cache=True)
def horner61_many(coeffs, xs, out_range):
    out = np.empty(xs.shape[0], dtype=np.uint64)
    r = np.uint64(out_range)
    for j in range(xs.shape[0]):
        out[j] = horner61(coeffs, xs[j]) % r
    return out


@njit(cache=True)
def horner_small(coeffs, x, p):
    acc = np.uint64(0)
    xx = np.uint64(x)
    pp = np.uint64(p)
    for i in range(coeffs.shape[0] - 1, -1, -1):
        acc = (acc * xx + coeffs[i]) % pp
    return acc


@njit(cache=True)
def horner_small_many(coeffs, xs, p, out_range):
    out = np.empty(xs.shape[0], dtype=np.uint64)
    r = np.uint64(out_range)
    for j in range(xs.shape[0]):
        out[j] = horner_small(coeffs, xs[j], p) % r
    return out


@njit(cache=True)
def horner61_mod(coeffs, out_range, x):
    return horner61(coeffs, x) % np.uint64(out_range)


# Composed Naor-Reingold permutations on w-bit values, w <= 32.  The affine
# field is below 2**33, so products are split at 16 bits to stay inside int64.  Unit i is
# affine(A[i,0]) . feistel(G[i,0]) . swap . feistel(G[i,1]) . affine(A[i,1]).


@njit(cache=True)
def _poly(g, x, p):
    acc = 0
    for i in range(g.shape[0] - 1, -1, -1):
        acc = (acc * x + g[i]) % p
    return acc


@njit(cache=True)
def _mulmod33(a, x, p):
    return (((a * (x >> 16)) % p << 16) + a * (x & 0xFFFF)) % p


@njit(cache=True)
def _affine(a, b, p, u, x):
    y = (_mulmod33(a, x, p) + b) % p
    while y >= u:
        y = (_mulmod33(a, y, p) + b) % p
    return y


@njit(cache=True)
def _affine_inv(ainv, b, p, u, y):
    x = _mulmod33(ainv, (y - b) % p, p)
    while x >= u:
        x = _mulmod33(ainv, (x - b) % p, p)
    return x


@njit(cache=True)
def nr_apply(A, B, G, p_perm, p_half, h, limit, x):
    u = 1 << (2 * h)
    mask = (1 << h) - 1
    while True:
        for i in range(A.shape[0]):
            x = _affine(A[i, 0], B[i, 0], p_perm, u, x)
            x = (((x >> h) ^ (_poly(G[i, 0], x & mask, p_half) & mask)) << h) | (x & mask)
            x = ((x & mask) << h) | (x >> h)
            x = (((x >> h) ^ (_poly(G[i, 1], x & mask, p_half) & mask)) << h) | (x & mask)
            x = _affine(A[i, 1], B[i, 1], p_perm, u, x)
        if x < limit:
            return x


@njit(cache=True)
def nr_invert(Ainv, B, G, p_perm, p_half, h, limit, y):
    u = 1 << (2 * h)
    mask = (1 << h) - 1
    while True:
        for i in range(Ainv.shape[0] - 1, -1, -1):
            y = _affine_inv(Ainv[i, 1], B[i, 1], p_perm, u, y)
            y = (((y >> h) ^ (_poly(G[i, 1], y & mask, p_half) & mask)) << h) | (y & mask)
            y = ((y & mask) << h) | (y >> h)
            y = (((y >> h) ^ (_poly(G[i, 0], y & mask, p_half) & mask)) << h) | (y & mask)
            y = _affine_inv(Ainv[i, 0], B[i, 0], p_perm, u, y)
        if y < limit:
            return y


@njit(cache=True)
def horner_small_mod(coeffs, p, out_range, x):
    return horner_small(coeffs, x, p) % np.uint64(out_range)
