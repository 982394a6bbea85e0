"""Dense polynomials over F_p.

A polynomial is a list of ints in ``range(p)``, lowest degree first, with no
trailing zeros (the zero polynomial is ``[]``).
"""

from __future__ import annotations

from itertools import product


def trim(f: list[int]) -> list[int]:
    while f and f[-1] == 0:
        f.pop()
    return f


def reduce(f, p: int) -> list[int]:
    return trim([c % p for c in f])


def sub(f: list[int], g: list[int], p: int) -> list[int]:
    n = max(len(f), len(g))
    return trim([((f[i] if i < len(f) else 0) - (g[i] if i < len(g) else 0)) % p for i in range(n)])


def mul(f: list[int], g: list[int], p: int) -> list[int]:
    if not f or not g:
        return []
    out = [0] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] = (out[i + j] + a * b) % p
    return trim(out)


def divmod_(f: list[int], g: list[int], p: int) -> tuple[list[int], list[int]]:
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(f)
    q = [0] * max(len(f) - len(g) + 1, 0)
    inv_lead = pow(g[-1], -1, p)
    while len(r) >= len(g):
        c = r[-1] * inv_lead % p
        shift = len(r) - len(g)
        q[shift] = c
        for i, b in enumerate(g):
            r[shift + i] = (r[shift + i] - c * b) % p
        trim(r)
    return trim(q), r


def mod(f: list[int], g: list[int], p: int) -> list[int]:
    return divmod_(f, g, p)[1]


def gcd(f: list[int], g: list[int], p: int) -> list[int]:
    while g:
        f, g = g, mod(f, g, p)
    if f:
        inv = pow(f[-1], -1, p)
        f = [c * inv % p for c in f]
    return f


def xgcd(f: list[int], g: list[int], p: int) -> tuple[list[int], list[int], list[int]]:
    """Return (d, s, t) with s*f + t*g = d = monic gcd(f, g)."""
    r0, r1 = list(f), list(g)
    s0, s1 = [1], []
    t0, t1 = [], [1]
    while r1:
        q, r = divmod_(r0, r1, p)
        r0, r1 = r1, r
        s0, s1 = s1, sub(s0, mul(q, s1, p), p)
        t0, t1 = t1, sub(t0, mul(q, t1, p), p)
    if r0:
        inv = pow(r0[-1], -1, p)
        r0 = [c * inv % p for c in r0]
        s0 = [c * inv % p for c in s0]
        t0 = [c * inv % p for c in t0]
    return r0, s0, t0


def powmod(f: list[int], e: int, m: list[int], p: int) -> list[int]:
    result = [1]
    base = mod(f, m, p)
    while e:
        if e & 1:
            result = mod(mul(result, base, p), m, p)
        base = mod(mul(base, base, p), m, p)
        e >>= 1
    return result


def is_irreducible(f: list[int], p: int) -> bool:
    """Ben-Or test: f of degree d is irreducible iff gcd(f, t^(p^i) - t) = 1 for i <= d/2."""
    f = reduce(f, p)
    d = len(f) - 1
    if d < 1:
        return False
    if d == 1:
        return True
    x = [0, 1]
    h = x
    for _ in range(d // 2):
        h = powmod(h, p, f, p)
        if len(gcd(f, sub(h, x, p), p)) > 1:
            return False
    return True


def is_irreducible_exhaustive(f: list[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..d//2."""
    f = reduce(f, p)
    d = len(f) - 1
    if d < 1:
        return False
    for deg in range(1, d // 2 + 1):
        for low in product(range(p), repeat=deg):
            if not mod(f, list(low) + [1], p):
                return False
    return True
