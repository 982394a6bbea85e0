import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from padic_cokernels import limits
from padic_cokernels.limits import (
    ModuleType,
    TooLarge,
    alpha,
    alpha_inf,
    aut_order,
    aut_order_bruteforce,
    cohen_lenstra_mass,
    full_rank_prob,
    joint_limit,
    bounded_shift_limit,
    partitions,
    prob_no_eigenvalues,
)


def fp_rank(rows, p):
    a = [list(r) for r in rows]
    rank, ncols = 0, len(a[0]) if a else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(a)) if a[i][col] % p), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = pow(a[rank][col], -1, p)
        a[rank] = [x * inv % p for x in a[rank]]
        for i in range(len(a)):
            if i != rank and a[i][col] % p:
                f = a[i][col]
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[rank])]
        rank += 1
    return rank


def all_matrices(n, c, p):
    for flat in itertools.product(range(p), repeat=n * c):
        yield [flat[i * c : (i + 1) * c] for i in range(n)]


def test_aut_order_examples():
    assert aut_order(ModuleType(2, ())) == 1
    assert aut_order(ModuleType(2, (1,))) == 1
    assert aut_order(ModuleType(2, (1, 1))) == 6
    assert aut_order(ModuleType(3, (2,))) == 6
    assert aut_order(ModuleType(2, (2, 1))) == 8
    assert aut_order(ModuleType(4, (1,))) == 3


@pytest.mark.parametrize("p,budget", [(2, 7), (3, 4), (5, 3)])
def test_aut_order_matches_bruteforce(p, budget):
    for total in range(budget + 1):
        for lam in partitions(total):
            assert aut_order(ModuleType(p, lam)) == aut_order_bruteforce(p, lam, cap=2**12), lam


@pytest.mark.parametrize("p,lam", [(2, (2, 1)), (2, (3, 1, 1)), (2, (2, 2, 1)), (3, (2, 1)), (3, (1, 1, 1))])
def test_bruteforce_routes_agree(p, lam):
    lam = list(lam)
    assert limits._aut_by_endomorphisms(p, lam) == limits._aut_by_generating_tuples(p, lam)


def test_bruteforce_cap():
    with pytest.raises(TooLarge):
        aut_order_bruteforce(2, (7, 6), cap=2**12)


def test_cohen_lenstra_values():
    assert cohen_lenstra_mass(ModuleType(2, ())).value == pytest.approx(0.288788095086602, abs=1e-12)
    assert cohen_lenstra_mass(ModuleType(3, (1,))).value == pytest.approx(0.560126077927948 / 2, abs=1e-12)
    assert cohen_lenstra_mass(ModuleType(4, ())).value == pytest.approx(0.688537537120365, abs=1e-12)


@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_truncation_bound_is_honest(q):
    loose = cohen_lenstra_mass(ModuleType(q, ()), tol=1e-4)
    tight = cohen_lenstra_mass(ModuleType(q, ()), tol=1e-15)
    assert abs(loose.value - tight.value) <= loose.truncation_error + 1e-15
    assert loose.truncation_error <= 1e-4


@pytest.mark.parametrize("q", [2, 3, 5])
def test_mass_by_order_matches_size_identity(q):
    # sum over |lam| = m of 1/|Aut| equals q^-m / alpha(q, m)
    a = alpha_inf(q).value
    for m in range(9):
        by_class = sum(cohen_lenstra_mass(ModuleType(q, lam)).value for lam in partitions(m))
        assert by_class == pytest.approx(a * q**-m / float(alpha(q, m)), rel=1e-12)


def test_cohen_lenstra_normalization():
    total = sum(cohen_lenstra_mass(ModuleType(2, lam)).value for size in range(9) for lam in partitions(size))
    assert 0.99 < total <= 1.0
    # capping parts at 4 drops real mass (e.g. Z/32) at q = 2
    capped = sum(cohen_lenstra_mass(ModuleType(2, lam)).value for size in range(9) for lam in partitions(size, 4))
    assert capped == pytest.approx(0.95312, abs=1e-5)
    assert sum(cohen_lenstra_mass(ModuleType(3, lam)).value for size in range(9) for lam in partitions(size, 4)) > 0.99


def test_joint_limit_is_product():
    a = ModuleType(3, ())
    b = ModuleType(3, (1,))
    lv = joint_limit([a, b])
    assert lv.value == pytest.approx(cohen_lenstra_mass(a).value * cohen_lenstra_mass(b).value)
    assert joint_limit([a, a]).value == pytest.approx(0.313741223, abs=1e-9)
    with pytest.raises(ValueError):
        joint_limit([])


def test_constants():
    assert full_rank_prob(2, 1, 2) == Fraction(3, 4)
    assert full_rank_prob(3, 2, 3) == Fraction(208, 243)
    assert alpha(2, 0) == 1 and alpha(2, 1) == Fraction(1, 2) and alpha(2, 2) == Fraction(3, 8)
    assert alpha(2, 6) == Fraction(1 * 3 * 7 * 15 * 31 * 63, 2**21)
    assert float(alpha(2, 6)) == pytest.approx(0.293348, abs=1e-6)
    assert alpha_inf(2).value == pytest.approx(0.288788095, abs=1e-9)
    assert bounded_shift_limit(2, 0).value == pytest.approx(alpha_inf(2).value)
    assert bounded_shift_limit(2, 1).value == pytest.approx(0.144394, abs=1e-6)
    assert bounded_shift_limit(3, 1).value == pytest.approx(0.373417, abs=1e-6)


@given(st.integers(1, 8), st.sampled_from([2, 3, 5]))
def test_alpha_is_full_rank_square(k, p):
    assert alpha(p, k) == full_rank_prob(k, k, p)


@given(st.integers(1, 8), st.integers(0, 8), st.sampled_from([2, 3, 5]))
def test_full_rank_prob_monotone(n, r, p):
    if r > n:
        return
    assert full_rank_prob(n + 1, r, p) >= full_rank_prob(n, r, p)
    if r >= 1:
        assert full_rank_prob(n, r - 1, p) >= full_rank_prob(n, r, p)


@pytest.mark.parametrize("n,r,p", [(2, 1, 2), (3, 2, 2), (2, 2, 3), (4, 2, 2), (3, 1, 3)])
def test_full_rank_prob_by_enumeration(n, r, p):
    hits = sum(fp_rank(M, p) == r for M in all_matrices(n, r, p))
    assert Fraction(hits, p ** (n * r)) == full_rank_prob(n, r, p)


def test_full_rank_prob_monte_carlo():
    rng = np.random.default_rng(11)
    N = 100_000
    mats = rng.integers(0, 2, size=(N, 6, 3))
    from padic_cokernels import _kernels

    ranks = _kernels.fp_rank_batch(mats, 2)
    freq = float((ranks == 3).mean())
    c = float(full_rank_prob(6, 3, 2))
    assert abs(freq - c) <= 3 * (c * (1 - c) / N) ** 0.5


@pytest.mark.parametrize("n,q,s", [(1, 2, 1), (2, 2, 1), (2, 3, 2), (3, 2, 2), (2, 3, 3), (3, 3, 1)])
def test_no_eigenvalue_probability_by_enumeration(n, q, s):
    eye = np.eye(n, dtype=np.int64)
    hits = 0
    for M in all_matrices(n, n, q):
        A = np.array(M, dtype=np.int64)
        if all(fp_rank(((A - lam * eye) % q).tolist(), q) == n for lam in range(s)):
            hits += 1
    assert prob_no_eigenvalues(n, q, s) == Fraction(hits, q ** (n * n))


def test_no_eigenvalue_probability_consistency():
    for n in range(1, 8):
        assert prob_no_eigenvalues(n, 3, 1) == alpha(3, n)
        assert prob_no_eigenvalues(n, 3, 0) == 1


def test_partitions():
    assert list(partitions(4)) == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]
    assert list(partitions(0)) == [()]
    assert len(list(partitions(10))) == 42
