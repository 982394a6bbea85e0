"""Exact arithmetic in Z/p^k and in unramified extensions Z_p[t]/(P(t)) at precision k.

Scalars are plain Python values: an element of Z/p^k is an ``int`` in
``range(p**k)``; an element of R = Z_p[t]/(P) at precision k is a ``tuple`` of
``d = deg P`` such ints (coefficients of t^0 .. t^(d-1)).

Valuations are ints.  Because p is a uniformizer of R, every nonzero element
at precision k has valuation in ``0..k-1``; the value ``k`` is reserved for the
zero residue and means "valuation >= k" (saturated).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import fppoly

PAdicScalar = int
ExtScalar = tuple
Scalar = Union[int, tuple]


class NotAUnit(ArithmeticError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


@dataclass(frozen=True)
class RingParams:
    """Parameters of R/p^k R where R = Z_p[t]/(minpoly).

    ``minpoly`` is the coefficient tuple (lowest degree first) of a monic
    polynomial whose reduction mod p is irreducible.  The default ``(0, 1)``
    (the polynomial t) gives R = Z_p itself.
    """

    p: int
    k: int
    minpoly: tuple[int, ...] = (0, 1)

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if self.k < 1:
            raise ValueError(f"precision k must be >= 1, got {self.k}")
        m = self.p**self.k
        poly = tuple(int(c) % m for c in self.minpoly)
        if len(poly) < 2 or poly[-1] != 1:
            raise ValueError(f"minimal polynomial {self.minpoly} must be monic of degree >= 1")
        if not fppoly.is_irreducible(list(poly), self.p):
            raise ValueError(f"minimal polynomial {self.minpoly} is reducible mod {self.p}")
        object.__setattr__(self, "minpoly", poly)

    @property
    def d(self) -> int:
        return len(self.minpoly) - 1

    @property
    def q(self) -> int:
        return self.p**self.d

    @property
    def modulus(self) -> int:
        return self.p**self.k

    @property
    def is_base(self) -> bool:
        return self.d == 1

    def with_precision(self, k: int) -> "RingParams":
        return RingParams(self.p, k, self.minpoly)

    def zero(self) -> Scalar:
        return 0 if self.is_base else (0,) * self.d

    def one(self) -> Scalar:
        return 1 if self.is_base else (1,) + (0,) * (self.d - 1)

    def t(self) -> ExtScalar:
        """The class of t in R (as an ExtScalar even when d = 1)."""
        if self.d == 1:
            return ((-self.minpoly[0]) % self.modulus,)
        return (0, 1) + (0,) * (self.d - 2)


def _int_valuation(x: int, p: int, k: int) -> int:
    if x == 0:
        return k
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def valuation(x: Scalar, params: RingParams) -> int:
    """Largest m < k with x in p^m R, or k if x is zero at precision k."""
    if isinstance(x, tuple):
        return min(_int_valuation(c, params.p, params.k) for c in x)
    return _int_valuation(x, params.p, params.k)


def _ext_mul(a: tuple, b: tuple, params: RingParams) -> tuple:
    m = params.modulus
    d = params.d
    poly = params.minpoly
    prod = [0] * (2 * d - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                prod[i + j] += x * y
    # t^d = -(c_0 + ... + c_{d-1} t^{d-1})
    for deg in range(2 * d - 2, d - 1, -1):
        c = prod[deg] % m
        if c:
            base = deg - d
            for i in range(d):
                prod[base + i] -= c * poly[i]
    return tuple(c % m for c in prod[:d])


def add(a: Scalar, b: Scalar, params: RingParams) -> Scalar:
    m = params.modulus
    if isinstance(a, tuple):
        return tuple((x + y) % m for x, y in zip(a, b))
    return (a + b) % m


def sub(a: Scalar, b: Scalar, params: RingParams) -> Scalar:
    m = params.modulus
    if isinstance(a, tuple):
        return tuple((x - y) % m for x, y in zip(a, b))
    return (a - b) % m


def mul(a: Scalar, b: Scalar, params: RingParams) -> Scalar:
    if isinstance(a, tuple):
        return _ext_mul(a, b, params)
    return a * b % params.modulus


def neg(a: Scalar, params: RingParams) -> Scalar:
    m = params.modulus
    if isinstance(a, tuple):
        return tuple(-x % m for x in a)
    return -a % m


_OPS = {"add": add, "sub": sub, "mul": mul}


def ring_arithmetic(a: Scalar, b: Scalar, op: str, params: RingParams) -> Scalar:
    try:
        fn = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown ring operation {op!r}") from None
    return fn(a, b, params)


def hensel_iterations(k: int) -> int:
    return math.ceil(math.log2(k)) + 1 if k > 1 else 1


def invert_unit(x: Scalar, params: RingParams) -> Scalar:
    """Inverse of a unit: invert mod p in the residue field, then Newton-lift to p^k."""
    if valuation(x, params) > 0:
        raise NotAUnit(f"{x!r} is not a unit mod {params.p}")
    p = params.p
    if isinstance(x, tuple):
        residue = fppoly.reduce(list(x), p)
        g, s, _ = fppoly.xgcd(residue, list(c % p for c in params.minpoly), p)
        if g != [1]:
            raise NotAUnit(f"{x!r} is not invertible mod {p}")
        y = tuple(s) + (0,) * (len(x) - len(s))
        one = (1,) + (0,) * (len(x) - 1)
    else:
        y = pow(x % p, -1, p)
        one = 1
    two = add(one, one, params)
    for _ in range(hensel_iterations(params.k)):
        y = mul(y, sub(two, mul(x, y, params), params), params)
    if mul(x, y, params) != one:
        raise ArithmeticError("Hensel lift failed to converge")
    return y


def _uniform_residue(params: RingParams, rng: np.random.Generator) -> int:
    m = params.modulus
    if m < 2**62:
        return int(rng.integers(0, m))
    # beyond int64: draw base-p digits
    digits = rng.integers(0, params.p, size=params.k)
    return sum(int(c) * params.p**i for i, c in enumerate(digits))


def sample_uniform(params: RingParams, rng: np.random.Generator) -> Scalar:
    """Haar-uniform residue: an int when d = 1, a d-tuple otherwise."""
    if params.is_base:
        return _uniform_residue(params, rng)
    return tuple(_uniform_residue(params, rng) for _ in range(params.d))
