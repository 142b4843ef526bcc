"""Pure numpy implementation of the tableau row kernels.

Same signatures and semantics as the compiled module.
"""

import numpy as np

_pc = np.bitwise_count


def _phase_rows(x1, z1, x2, z2):
    """Exponent of i for the products row1 * row2 (vectorised over leading axes)."""
    y1 = x1 & z1
    xo = x1 & ~z1
    zo = ~x1 & z1
    pos = (y1 & z2 & ~x2) | (xo & z2 & x2) | (zo & x2 & ~z2)
    neg = (y1 & x2 & ~z2) | (xo & z2 & ~x2) | (zo & x2 & z2)
    return _pc(pos).sum(axis=-1, dtype=np.int64) - _pc(neg).sum(axis=-1, dtype=np.int64)


def _anti_rows(xs, zs, px, pz):
    return (_pc((xs & pz) ^ (zs & px)).sum(axis=-1, dtype=np.int64) & 1).astype(bool)


def rowmul(xs, zs, r, h, i):
    tot = 2 * int(r[h]) + 2 * int(r[i]) + int(_phase_rows(xs[i], zs[i], xs[h], zs[h]))
    r[h] = (tot % 4) >= 2
    xs[h] ^= xs[i]
    zs[h] ^= zs[i]


def peek(xs, zs, r, n, px, pz, psign):
    if _anti_rows(xs[n:], zs[n:], px, pz).any():
        return -1
    sel = np.flatnonzero(_anti_rows(xs[:n], zs[:n], px, pz)) + n
    sx = np.zeros_like(px)
    sz = np.zeros_like(pz)
    sr = 0
    for i in sel:
        tot = 2 * sr + 2 * int(r[i]) + int(_phase_rows(xs[i], zs[i], sx, sz))
        sr = 1 if (tot % 4) >= 2 else 0
        sx ^= xs[i]
        sz ^= zs[i]
    return (sr ^ psign) & 1


def measure(xs, zs, r, n, px, pz, psign, rbit):
    anti = _anti_rows(xs, zs, px, pz)
    hits = np.flatnonzero(anti[n:])
    if hits.size == 0:
        return peek(xs, zs, r, n, px, pz, psign), True
    p = int(hits[0]) + n
    anti[p] = False
    rows = np.flatnonzero(anti)
    if rows.size:
        ph = _phase_rows(xs[p][None, :], zs[p][None, :], xs[rows], zs[rows])
        tot = 2 * r[rows].astype(np.int64) + 2 * int(r[p]) + ph
        r[rows] = (tot % 4) >= 2
        xs[rows] ^= xs[p]
        zs[rows] ^= zs[p]
    xs[p - n] = xs[p]
    zs[p - n] = zs[p]
    r[p - n] = r[p]
    xs[p] = px
    zs[p] = pz
    r[p] = (psign ^ rbit) & 1
    return rbit & 1, False
