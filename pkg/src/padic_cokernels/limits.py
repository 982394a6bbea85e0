"""Closed-form limiting probabilities and the automorphism-count oracle."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class ModuleType:
    """Finite module (+)_i R/m^partition[i] over a DVR with residue field of size q."""

    q: int
    partition: tuple[int, ...] = ()

    def __post_init__(self):
        parts = tuple(sorted((int(x) for x in self.partition), reverse=True))
        if any(x < 1 for x in parts):
            raise ValueError(f"partition parts must be positive: {parts}")
        if self.q < 2:
            raise ValueError(f"residue field size must be >= 2, got {self.q}")
        object.__setattr__(self, "partition", parts)


@dataclass(frozen=True)
class LimitValue:
    value: float
    truncation_error: float

    def __float__(self):
        return self.value


def conjugate(partition) -> list[int]:
    parts = sorted(partition, reverse=True)
    if not parts:
        return []
    return [sum(1 for x in parts if x > i) for i in range(parts[0])]


def aut_order(m: ModuleType) -> int:
    """|Aut_R(H)| = q^(sum of squared conjugate parts) * prod_i prod_{j<=m_i} (1 - q^-j)."""
    q = m.q
    exponent = sum(c * c for c in conjugate(m.partition))
    value = Fraction(q) ** exponent
    for mult in Counter(m.partition).values():
        for j in range(1, mult + 1):
            value *= 1 - Fraction(1, q**j)
    assert value.denominator == 1
    return value.numerator


def _order_cap_check(p: int, partition, cap: int):
    if p ** sum(partition) > cap:
        raise TooLarge(f"module of order {p}^{sum(partition)} exceeds the enumeration cap {cap}")


def _aut_by_endomorphisms(p: int, lam: list[int]) -> int:
    """Enumerate all endomorphism matrices and keep those injective on the socle."""
    r = len(lam)
    # entry (i, j): a homomorphism Z/p^lam[j] -> Z/p^lam[i], i.e. e_ij in p^max(0, lam[i]-lam[j]) Z/p^lam[i]
    steps = [[p ** max(0, lam[i] - lam[j]) for j in range(r)] for i in range(r)]
    choices = [[p ** min(lam[i], lam[j]) for j in range(r)] for i in range(r)]
    grids = [np.arange(choices[i][j], dtype=np.int64) * steps[i][j] for i in range(r) for j in range(r)]
    endos = np.stack([g.ravel() for g in np.meshgrid(*grids, indexing="ij")], axis=1).reshape(-1, r, r)
    # socle elements: x = sum_j c_j p^(lam_j - 1) g_j with c in F_p^r minus zero
    coeffs = np.array(list(itertools.product(range(p), repeat=r))[1:], dtype=np.int64)
    socle = coeffs * np.array([p ** (x - 1) for x in lam], dtype=np.int64)
    mods = np.array([p**x for x in lam], dtype=np.int64)
    total = 0
    for start in range(0, len(endos), 4096):
        images = np.einsum("eij,sj->esi", endos[start : start + 4096], socle) % mods
        total += int((~np.any(np.all(images == 0, axis=2), axis=1)).sum())
    return total


def _aut_by_generating_tuples(p: int, lam: list[int]) -> int:
    """Count tuples (y_i) with p^lam_i y_i = 0 that generate H, enumerating H's elements.

    A tuple generates H iff its image spans V = H/pH.  For each i the admissible
    y_i form H[p^lam_i]; its image W_i in V and the fibre size are read off from
    the enumerated elements.  The W_i are nested, so spanning tuples are counted
    by choosing in increasing order of W_i.
    """
    r = len(lam)
    mods = [p**x for x in lam]
    elements = list(itertools.product(*(range(m) for m in mods)))
    torsion_sizes = []
    images = []
    for x in lam:
        killed = [e for e in elements if all((p**x * c) % m == 0 for c, m in zip(e, mods))]
        image = {tuple(c % p for c in e) for e in killed}
        torsion_sizes.append(len(killed))
        images.append(image)
    count = 1
    for size, image in zip(torsion_sizes, images):
        count *= size // len(image)
    order = sorted(range(r), key=lambda i: len(images[i]))
    for pos, i in enumerate(order):
        count *= len(images[i]) - p**pos
    return count


def aut_order_bruteforce(p: int, partition, cap: int = 2**12, endo_cap: int = 2**20) -> int:
    """|Aut(H)| for H = (+) Z/p^lam_i by enumeration.

    Enumerates every endomorphism when there are at most ``endo_cap`` of them;
    otherwise counts generating tuples over the enumerated module elements.
    """
    lam = sorted((int(x) for x in partition), reverse=True)
    _order_cap_check(p, lam, cap)
    if not lam:
        return 1
    n_endo = p ** sum(min(a, b) for a in lam for b in lam)
    if n_endo <= endo_cap:
        return _aut_by_endomorphisms(p, lam)
    return _aut_by_generating_tuples(p, lam)


def _euler_product(q: int, tol: float) -> tuple[Fraction, float]:
    """prod_{i=1}^N (1 - q^-i) with N chosen so that the dropped tail is <= tol."""
    prod = Fraction(1)
    i = 0
    while True:
        i += 1
        prod *= 1 - Fraction(1, q**i)
        # 1 >= prod_{j>i}(1 - q^-j) >= 1 - sum_{j>i} q^-j = 1 - q^-i/(q-1)
        tail = 1.0 / (q**i * (q - 1))
        if tail <= tol:
            return prod, float(prod) * tail


def cohen_lenstra_mass(m: ModuleType, tol: float = 1e-12) -> LimitValue:
    prod, err = _euler_product(m.q, tol)
    aut = aut_order(m)
    return LimitValue(float(prod / aut), err / aut)


def joint_limit(modules, tol: float = 1e-12) -> LimitValue:
    modules = list(modules)
    if not modules:
        raise ValueError("joint_limit needs at least one module")
    value = 1.0
    err = 0.0
    for mod in modules:
        lv = cohen_lenstra_mass(mod, tol / len(modules))
        value *= lv.value
        # every factor is <= 1, so errors add
        err += lv.truncation_error
    return LimitValue(value, err)


def full_rank_prob(n: int, r: int, p: int) -> Fraction:
    """c_{n,r}: probability that a uniform n x r matrix over F_p has rank r."""
    if not n >= r >= 0:
        raise ValueError(f"need n >= r >= 0, got n={n}, r={r}")
    out = Fraction(1)
    for j in range(r):
        out *= 1 - Fraction(1, p ** (n - j))
    return out


def alpha(p: int, k: int) -> Fraction:
    if k < 0:
        raise ValueError("k must be >= 0")
    out = Fraction(1)
    for i in range(1, k + 1):
        out *= 1 - Fraction(1, p**i)
    return out


def alpha_inf(p: int, tol: float = 1e-12) -> LimitValue:
    prod, err = _euler_product(p, tol)
    return LimitValue(float(prod), err)


def bounded_shift_limit(p: int, k: int, tol: float = 1e-12) -> LimitValue:
    """Limit of Prob(cok A = 0 and cok(A + diag(I_k, 0)) = 0) = alpha_{p,inf} * alpha_{p,k}."""
    ainf = alpha_inf(p, tol)
    ak = float(alpha(p, k))
    return LimitValue(ainf.value * ak, ainf.truncation_error * ak)


def prob_no_eigenvalues(n: int, q: int, s: int) -> Fraction:
    """Exact probability that a uniform n x n matrix over F_q has none of s given eigenvalues.

    Uses the cycle-index identity
        sum_n N_n u^n / |GL_n(F_q)| = (sum_n u^n / alpha_{q,n}) * prod_{i>=1} (1 - u/q^i)^s,
    where N_n counts the matrices and q^(n^2) / |GL_n(F_q)| = 1 / alpha_{q,n}.
    """
    if s == 0:
        return Fraction(1)
    # coefficients of prod_{i>=1} (1 - u q^-i) up to u^n: Euler's identity
    euler = [Fraction(1)]
    for j in range(1, n + 1):
        euler.append(euler[-1] * Fraction(-1, q**j) / (1 - Fraction(1, q**j)))
    factor = [Fraction(1)] + [Fraction(0)] * n
    for _ in range(s):
        factor = [sum(factor[i] * euler[j - i] for i in range(j + 1)) for j in range(n + 1)]
    coeff = sum(factor[n - m] / alpha(q, m) for m in range(n + 1))
    return alpha(q, n) * coeff


def partitions(total: int, max_part: int | None = None):
    """All partitions of ``total`` as non-increasing tuples."""
    if max_part is None:
        max_part = total
    if total == 0:
        yield ()
        return
    for first in range(min(total, max_part), 0, -1):
        for rest in partitions(total - first, first):
            yield (first,) + rest
