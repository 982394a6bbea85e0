"""Compiled hot loops for the Monte Carlo path.

All kernels work on int64 residues modulo m = p^k and require m <= 2^31 so that
a product of two residues fits in a signed 64-bit word.  They return SNF
diagonal valuations only (no transformation matrices); the value k marks a
saturated diagonal entry.
"""

import numpy as np
from numba import njit

FAST_MODULUS_LIMIT = 2**31


@njit(cache=True)
def _ival(x, p, k):
    if x == 0:
        return k
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


@njit(cache=True)
def _int_inverse(u, m):
    # extended Euclid; u is a unit mod m
    r0, r1 = m, u % m
    s0, s1 = 0, 1
    while r1 != 0:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    return s0 % m


@njit(cache=True)
def snf_base_inplace(a, p, k, m, out):
    """Valuation-pivoting SNF of a 2-D int64 array (destroyed)."""
    n = a.shape[0]
    c = a.shape[1]
    r = min(n, c)
    for s in range(r):
        best = k
        bi = -1
        bj = -1
        for i in range(s, n):
            for j in range(s, c):
                x = a[i, j]
                if x != 0:
                    v = _ival(x, p, k)
                    if v < best:
                        best = v
                        bi = i
                        bj = j
                        if v == 0:
                            break
            if best == 0:
                break
        if best == k:
            for t in range(s, r):
                out[t] = k
            return
        if bi != s:
            for j in range(s, c):
                tmp = a[s, j]
                a[s, j] = a[bi, j]
                a[bi, j] = tmp
        if bj != s:
            for i in range(s, n):
                tmp = a[i, s]
                a[i, s] = a[i, bj]
                a[i, bj] = tmp
        pv = 1
        for _ in range(best):
            pv *= p
        uinv = _int_inverse(a[s, s] // pv, m)
        for j in range(s + 1, c):
            a[s, j] = a[s, j] * uinv % m
        for i in range(s + 1, n):
            x = a[i, s]
            if x != 0:
                f = x // pv
                for j in range(s + 1, c):
                    a[i, j] = (a[i, j] - f * a[s, j]) % m
        out[s] = best
    out.sort()


@njit(cache=True)
def _emul(x, y, poly, d, m, buf, out):
    # lazy reduction is safe while 4*d*m^2 < 2^63
    lazy = m < 2**20
    for t in range(2 * d - 1):
        buf[t] = 0
    for i in range(d):
        xi = x[i]
        if xi != 0:
            for j in range(d):
                if lazy:
                    buf[i + j] += xi * y[j]
                else:
                    buf[i + j] = (buf[i + j] + xi * y[j]) % m
    for deg in range(2 * d - 2, d - 1, -1):
        cc = buf[deg] % m
        if cc != 0:
            base = deg - d
            for i in range(d):
                if lazy:
                    buf[base + i] -= cc * poly[i]
                else:
                    buf[base + i] = (buf[base + i] - cc * poly[i]) % m
    for i in range(d):
        out[i] = buf[i] % m


@njit(cache=True)
def _einv(x, poly, d, p, k, m):
    """Inverse of a unit of (Z/m)[t]/(poly): Fermat in F_q, then Newton lift."""
    buf = np.zeros(2 * d - 1, dtype=np.int64)
    base = np.empty(d, dtype=np.int64)
    y = np.zeros(d, dtype=np.int64)
    tmp = np.empty(d, dtype=np.int64)
    polyp = np.empty(d + 1, dtype=np.int64)
    for i in range(d + 1):
        polyp[i] = poly[i] % p
    for i in range(d):
        base[i] = x[i] % p
    y[0] = 1
    q = 1
    for _ in range(d):
        q *= p
    e = q - 2
    while e > 0:
        if e & 1:
            _emul(y, base, polyp, d, p, buf, tmp)
            y[:] = tmp
        _emul(base, base, polyp, d, p, buf, tmp)
        base[:] = tmp
        e >>= 1
    # ceil(log2 k) + 1 Newton steps
    it = 1
    span = 1
    while span < k:
        span *= 2
        it += 1
    xy = np.empty(d, dtype=np.int64)
    for _ in range(it):
        _emul(x, y, poly, d, m, buf, xy)
        # xy <- 2 - x*y
        for i in range(d):
            xy[i] = (-xy[i]) % m
        xy[0] = (xy[0] + 2) % m
        _emul(y, xy, poly, d, m, buf, tmp)
        y[:] = tmp
    return y


@njit(cache=True)
def _mult_matrix(f, poly, d, m, out):
    """Matrix of y -> f*y in the basis 1, t, ..., t^(d-1); out[:, c] = f * t^c."""
    for r in range(d):
        out[r, 0] = f[r]
    for c in range(1, d):
        top = out[d - 1, c - 1]
        for r in range(d - 1, 0, -1):
            out[r, c] = (out[r - 1, c - 1] - top * poly[r]) % m
        out[0, c] = (-top * poly[0]) % m


@njit(cache=True)
def _eval(a, i, j, d, p, k):
    v = k
    for t in range(d):
        x = a[i, j, t]
        if x != 0:
            w = _ival(x, p, k)
            if w < v:
                v = w
    return v


@njit(cache=True)
def snf_ext_inplace(a, poly, p, k, m, out):
    """Valuation-pivoting SNF of an (n, c, d) int64 array over (Z/p^k)[t]/(poly)."""
    n = a.shape[0]
    c = a.shape[1]
    d = a.shape[2]
    r = min(n, c)
    buf = np.zeros(2 * d - 1, dtype=np.int64)
    prod = np.empty(d, dtype=np.int64)
    f = np.empty(d, dtype=np.int64)
    fm = np.empty((d, d), dtype=np.int64)
    # d products of residues summed without overflow
    lazy = m < 2**28
    for s in range(r):
        best = k
        bi = -1
        bj = -1
        for i in range(s, n):
            for j in range(s, c):
                v = _eval(a, i, j, d, p, k)
                if v < best:
                    best = v
                    bi = i
                    bj = j
                    if v == 0:
                        break
            if best == 0:
                break
        if best == k:
            for t in range(s, r):
                out[t] = k
            return
        if bi != s:
            for j in range(s, c):
                for t in range(d):
                    tmp = a[s, j, t]
                    a[s, j, t] = a[bi, j, t]
                    a[bi, j, t] = tmp
        if bj != s:
            for i in range(s, n):
                for t in range(d):
                    tmp = a[i, s, t]
                    a[i, s, t] = a[i, bj, t]
                    a[i, bj, t] = tmp
        pv = 1
        for _ in range(best):
            pv *= p
        for t in range(d):
            f[t] = a[s, s, t] // pv
        uinv = _einv(f, poly, d, p, k, m)
        for j in range(s + 1, c):
            _emul(a[s, j], uinv, poly, d, m, buf, prod)
            for t in range(d):
                a[s, j, t] = prod[t]
        for i in range(s + 1, n):
            nz = False
            for t in range(d):
                f[t] = a[i, s, t] // pv
                if f[t] != 0:
                    nz = True
            if nz:
                _mult_matrix(f, poly, d, m, fm)
                for j in range(s + 1, c):
                    for row in range(d):
                        acc = 0
                        if lazy:
                            for t in range(d):
                                acc += fm[row, t] * a[s, j, t]
                        else:
                            for t in range(d):
                                acc = (acc + fm[row, t] * a[s, j, t]) % m
                        prod[row] = acc
                    for row in range(d):
                        a[i, j, row] = (a[i, j, row] - prod[row]) % m
        out[s] = best
    out.sort()


@njit(cache=True)
def snf_base_batch(mats, p, k, m):
    count = mats.shape[0]
    r = min(mats.shape[1], mats.shape[2])
    out = np.empty((count, r), dtype=np.int64)
    work = np.empty((mats.shape[1], mats.shape[2]), dtype=np.int64)
    for b in range(count):
        work[:, :] = mats[b]
        snf_base_inplace(work, p, k, m, out[b])
    return out


@njit(cache=True)
def shifted_snf_base_batch(mats, shift, p, k, m):
    """SNF valuations of A + shift for each A in the batch."""
    count = mats.shape[0]
    r = min(mats.shape[1], mats.shape[2])
    out = np.empty((count, r), dtype=np.int64)
    work = np.empty((mats.shape[1], mats.shape[2]), dtype=np.int64)
    for b in range(count):
        for i in range(mats.shape[1]):
            for j in range(mats.shape[2]):
                work[i, j] = (mats[b, i, j] + shift[i, j]) % m
        snf_base_inplace(work, p, k, m, out[b])
    return out


@njit(cache=True)
def charmat_snf_batch(mats, poly, p, k, m):
    """SNF valuations over R = (Z/p^k)[t]/(poly) of A - tI for each base-ring A."""
    count = mats.shape[0]
    n = mats.shape[1]
    d = poly.shape[0] - 1
    out = np.empty((count, n), dtype=np.int64)
    work = np.zeros((n, n, d), dtype=np.int64)
    # the class of t in R
    tvec = np.zeros(d, dtype=np.int64)
    if d == 1:
        tvec[0] = (-poly[0]) % m
    else:
        tvec[1] = 1
    for b in range(count):
        for i in range(n):
            for j in range(n):
                work[i, j, 0] = mats[b, i, j]
                for t in range(1, d):
                    work[i, j, t] = 0
            for t in range(d):
                work[i, i, t] = (work[i, i, t] - tvec[t]) % m
        snf_ext_inplace(work, poly, p, k, m, out[b])
    return out


@njit(cache=True)
def fp_rank_inplace(a, p):
    n = a.shape[0]
    c = a.shape[1]
    rank = 0
    for col in range(c):
        piv = -1
        for i in range(rank, n):
            if a[i, col] % p != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != rank:
            for j in range(col, c):
                tmp = a[rank, j]
                a[rank, j] = a[piv, j]
                a[piv, j] = tmp
        inv = _int_inverse(a[rank, col] % p, p)
        for j in range(col, c):
            a[rank, j] = a[rank, j] * inv % p
        for i in range(rank + 1, n):
            x = a[i, col] % p
            if x != 0:
                for j in range(col, c):
                    a[i, j] = (a[i, j] - x * a[rank, j]) % p
        rank += 1
        if rank == n:
            break
    return rank


@njit(cache=True)
def fp_rank_batch(mats, p):
    count = mats.shape[0]
    out = np.empty(count, dtype=np.int64)
    work = np.empty((mats.shape[1], mats.shape[2]), dtype=np.int64)
    for b in range(count):
        work[:, :] = mats[b]
        out[b] = fp_rank_inplace(work, p)
    return out


@njit(cache=True)
def enum_pair_invertible(n, p, shift):
    """Count A in M_n(F_p) with A and A + shift both invertible, by enumeration."""
    total = 1
    for _ in range(n * n):
        total *= p
    a = np.empty((n, n), dtype=np.int64)
    work = np.empty((n, n), dtype=np.int64)
    hits = 0
    for idx in range(total):
        x = idx
        for i in range(n):
            for j in range(n):
                a[i, j] = x % p
                x //= p
        work[:, :] = a
        if fp_rank_inplace(work, p) < n:
            continue
        for i in range(n):
            for j in range(n):
                work[i, j] = (a[i, j] + shift[i, j]) % p
        if fp_rank_inplace(work, p) == n:
            hits += 1
    return hits
