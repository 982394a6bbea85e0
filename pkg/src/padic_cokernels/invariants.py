"""Randomized structural checks on cokernels, all exact.

Each suite draws its cases from a seeded generator and returns a
``SuiteResult`` listing any counterexamples.  The suites are shared by the
``selftest`` command and the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fppoly
from .montecarlo import sample_gl, sample_matrix
from .rings import RingParams
from .smith import (
    CokernelClass,
    LocalMatrix,
    PolynomialSpec,
    char_matrix,
    cokernel_class,
    p_rank,
    poly_eval_matrix,
)

DEFAULT_SEED = 7
PRIMES = (2, 3, 5)


@dataclass
class SuiteResult:
    name: str
    cases: int
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        status = "ok" if self.ok else f"{len(self.failures)} FAILED"
        return f"{self.name}: {self.cases} cases, {status}"


def _random_params(rng, max_k=5) -> RingParams:
    return RingParams(int(rng.choice(PRIMES)), int(rng.integers(2, max_k + 1)))


def _structured_matrix(n: int, params: RingParams, rng) -> LocalMatrix:
    """U diag(p^a_i) V with random exponents, so cokernels are far from trivial."""
    exps = rng.integers(0, params.k + 1, size=n)
    D = LocalMatrix.diag([params.p ** int(a) for a in exps], params)
    return sample_gl(n, params, rng) @ D @ sample_gl(n, params, rng)


def _random_irreducible(p: int, k: int, degree: int, rng) -> PolynomialSpec:
    """Monic lift to Z/p^k of a random monic irreducible polynomial of the given degree over F_p."""
    while True:
        low = [int(x) for x in rng.integers(0, p, size=degree)]
        if fppoly.is_irreducible(low + [1], p):
            lift = [c + p * int(rng.integers(0, p ** (k - 1))) for c in low]
            return PolynomialSpec(tuple(lift) + (1,))


def _companion_biased(n: int, P: PolynomialSpec, params: RingParams, rng) -> LocalMatrix:
    """Block upper-triangular A whose leading block is a p-adic perturbation of P's companion matrix.

    P(A) is then singular mod p, so cok(P(A)) is nontrivial.
    """
    d = P.degree
    if n < d:
        return sample_matrix(n, params, rng)
    m = params.modulus
    a = sample_matrix(n, params, rng).entries.astype(object).copy()
    a[:d, :d] = params.p * rng.integers(0, m, size=(d, d)).astype(object)
    for i in range(1, d):
        a[i, i - 1] += 1
    for i in range(d):
        a[i, d - 1] -= P.coeffs[i]
    a[d:, :d] = 0
    return LocalMatrix(params, a % m)


def _expand(cls: CokernelClass, d: int) -> CokernelClass:
    """View an R-module class as a Z_p-module class when [R/pR : F_p] = d."""
    return CokernelClass(cls.parts * d, cls.saturated_count * d)


def gl_invariance(cases: int = 500, max_n: int = 8, seed: int = DEFAULT_SEED) -> SuiteResult:
    """cok(U M V) and cok(M) have the same class for U, V in GL_n."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("gl-invariance", cases)
    for i in range(cases):
        params = _random_params(rng)
        n = int(rng.integers(1, max_n + 1))
        M = _structured_matrix(n, params, rng) if i % 2 else sample_matrix(n, params, rng)
        U, V = sample_gl(n, params, rng), sample_gl(n, params, rng)
        a, b = cokernel_class(M), cokernel_class(U @ M @ V)
        if a != b:
            res.failures.append(f"case {i}: {M!r} gives {a} but U M V gives {b}")
    return res


def expansion(cases: int = 500, max_n: int = 6, seed: int = DEFAULT_SEED) -> SuiteResult:
    """cok(P(A)) over Z_p matches cok(A - tI) over Z_p[t]/(P), each summand counted d times."""
    rng = np.random.default_rng(seed + 1)
    res = SuiteResult("expansion", cases)
    for i in range(cases):
        params = _random_params(rng, max_k=4)
        n = int(rng.integers(1, max_n + 1))
        d = int(rng.integers(2, 4))
        P = _random_irreducible(params.p, params.k, d, rng)
        A = _companion_biased(n, P, params, rng) if i % 2 else sample_matrix(n, params, rng)
        lhs = cokernel_class(poly_eval_matrix(A, P))
        rhs = _expand(cokernel_class(char_matrix(A, P.ring_params(params.p, params.k))), d)
        if lhs != rhs:
            res.failures.append(f"case {i}: P={P}, A={A!r}: {lhs} vs {rhs}")
    return res


def product_splitting(cases: int = 500, max_n: int = 6, seed: int = DEFAULT_SEED) -> SuiteResult:
    """cok((P1 P2)(A)) = cok(P1(A)) + cok(P2(A)) when P1, P2 are coprime mod p."""
    rng = np.random.default_rng(seed + 2)
    res = SuiteResult("product-splitting", cases)
    for i in range(cases):
        params = _random_params(rng, max_k=4)
        n = int(rng.integers(1, max_n + 1))
        P1 = _random_irreducible(params.p, params.k, int(rng.integers(1, 3)), rng)
        while True:
            P2 = _random_irreducible(params.p, params.k, int(rng.integers(1, 3)), rng)
            if P2.reduction(params.p) != P1.reduction(params.p):
                break
        A = _companion_biased(n, P1, params, rng) if i % 2 else sample_matrix(n, params, rng)
        whole = cokernel_class(poly_eval_matrix(A, P1 * P2))
        c1 = cokernel_class(poly_eval_matrix(A, P1))
        c2 = cokernel_class(poly_eval_matrix(A, P2))
        joined = CokernelClass(c1.parts + c2.parts, c1.saturated_count + c2.saturated_count)
        if whole != joined:
            res.failures.append(f"case {i}: P1={P1}, P2={P2}, A={A!r}: {whole} vs {c1} + {c2}")
    return res


def p_rank_equality(cases: int = 1000, max_n: int = 8, seed: int = DEFAULT_SEED) -> SuiteResult:
    """cok(A) and cok(A - p^v I) have the same p-rank for v >= 1."""
    rng = np.random.default_rng(seed + 3)
    res = SuiteResult("p-rank-equality", cases)
    for i in range(cases):
        params = _random_params(rng)
        n = int(rng.integers(1, max_n + 1))
        v = int(rng.integers(1, params.k))
        A = _structured_matrix(n, params, rng) if i % 2 else sample_matrix(n, params, rng)
        B = A - LocalMatrix.identity(n, params).scale(params.p**v)
        ra, rb = p_rank(A), p_rank(B)
        # the p-rank read off the SNF must agree with the F_p rank
        rs = cokernel_class(A).p_rank
        if not ra == rb == rs:
            res.failures.append(f"case {i}: v={v}, A={A!r}: p-ranks {ra}, {rb}, snf {rs}")
    return res


SUITES = {
    "gl-invariance": gl_invariance,
    "expansion": expansion,
    "product-splitting": product_splitting,
    "p-rank-equality": p_rank_equality,
}


def run_all(seed: int = DEFAULT_SEED) -> list[SuiteResult]:
    return [fn(seed=seed) for fn in SUITES.values()]
