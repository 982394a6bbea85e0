import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from padic_cokernels import rings
from padic_cokernels.rings import NotAUnit, RingParams, invert_unit, ring_arithmetic, valuation

T = sympy.Symbol("t")

EXT_RINGS = [
    RingParams(2, 3, (1, 1, 1)),
    RingParams(2, 5, (1, 1, 0, 1)),
    RingParams(3, 3, (1, 0, 1)),
    RingParams(5, 2, (2, 0, 1)),
    RingParams(3, 2, (1, 2, 0, 1)),
]


def sympy_mul(a, b, params):
    """Independent product in (Z/p^k)[t]/(P) via sympy polynomial remainder."""
    m = params.modulus
    pa = sympy.Poly(list(reversed(a)), T)
    pb = sympy.Poly(list(reversed(b)), T)
    mp = sympy.Poly(list(reversed(params.minpoly)), T)
    rem = (pa * pb).rem(mp)
    coeffs = list(reversed(rem.all_coeffs()))
    coeffs += [0] * (params.d - len(coeffs))
    return tuple(int(c) % m for c in coeffs[: params.d])


def ext_elements(params):
    return st.tuples(*[st.integers(0, params.modulus - 1)] * params.d)


@st.composite
def ring_and_pair(draw):
    params = draw(st.sampled_from(EXT_RINGS))
    return params, draw(ext_elements(params)), draw(ext_elements(params))


def test_spec_examples():
    params = RingParams(2, 4)
    assert invert_unit(3, params) == 11
    assert ring_arithmetic(3, 11, "mul", params) == 1
    ext = RingParams(2, 3, (1, 1, 1))
    assert ring_arithmetic((0, 1), (0, 1), "mul", ext) == (7, 7)
    assert invert_unit((0, 1), RingParams(2, 2, (1, 1, 1))) == (3, 3)
    assert valuation(12, RingParams(2, 5)) == 2
    assert valuation(0, RingParams(3, 4)) == 4


def test_params_validation():
    with pytest.raises(ValueError, match="not prime"):
        RingParams(4, 2)
    with pytest.raises(ValueError, match="precision"):
        RingParams(2, 0)
    with pytest.raises(ValueError, match="reducible"):
        RingParams(2, 3, (1, 0, 1))  # t^2 + 1 = (t+1)^2 mod 2
    with pytest.raises(ValueError, match="monic"):
        RingParams(3, 3, (1, 2))
    with pytest.raises(ValueError, match="reducible"):
        RingParams(3, 4, (1, 1, 1))  # (t - 1)^2 mod 3
    assert RingParams(2, 4, (1, 1, 1)).minpoly == (1, 1, 1)
    assert RingParams(3, 2, (-2, 0, 1)).minpoly == (7, 0, 1)


def test_params_properties():
    params = RingParams(2, 3, (1, 1, 0, 1))
    assert (params.d, params.q, params.modulus, params.is_base) == (3, 8, 8, False)
    assert params.one() == (1, 0, 0) and params.zero() == (0, 0, 0) and params.t() == (0, 1, 0)
    assert RingParams(5, 2, (-3, 1)).t() == (3,)
    assert params.with_precision(5).modulus == 32


@given(ring_and_pair())
def test_ext_mul_matches_sympy(case):
    params, a, b = case
    assert ring_arithmetic(a, b, "mul", params) == sympy_mul(a, b, params)


@given(ring_and_pair(), st.data())
def test_ring_axioms(case, data):
    params, a, b = case
    c = data.draw(ext_elements(params))
    mul = lambda x, y: ring_arithmetic(x, y, "mul", params)
    add = lambda x, y: ring_arithmetic(x, y, "add", params)
    assert mul(a, b) == mul(b, a)
    assert mul(mul(a, b), c) == mul(a, mul(b, c))
    assert mul(a, add(b, c)) == add(mul(a, b), mul(a, c))
    assert ring_arithmetic(add(a, b), b, "sub", params) == a
    assert mul(a, params.one()) == a


@given(ring_and_pair())
def test_valuation_is_multiplicative_up_to_saturation(case):
    params, a, b = case
    va, vb = valuation(a, params), valuation(b, params)
    assert valuation(ring_arithmetic(a, b, "mul", params), params) == min(va + vb, params.k)
    assert valuation(ring_arithmetic(a, b, "add", params), params) >= min(va, vb)


@given(st.sampled_from([2, 3, 5, 7]), st.integers(1, 12), st.integers(0, 10**9))
def test_base_inverse(p, k, x):
    params = RingParams(p, k)
    x %= params.modulus
    if x % p == 0:
        with pytest.raises(NotAUnit):
            invert_unit(x, params)
    else:
        assert x * invert_unit(x, params) % params.modulus == 1
        assert invert_unit(x, params) == pow(x, -1, params.modulus)


@given(ring_and_pair())
def test_ext_inverse(case):
    params, a, _ = case
    if valuation(a, params) > 0:
        with pytest.raises(NotAUnit):
            invert_unit(a, params)
    else:
        assert ring_arithmetic(a, invert_unit(a, params), "mul", params) == params.one()


def test_inverse_large_precision():
    params = RingParams(3, 60, (1, 0, 1))
    x = (2, 3**59 + 5)
    assert ring_arithmetic(x, invert_unit(x, params), "mul", params) == (1, 0)


def test_hensel_iteration_count():
    assert [rings.hensel_iterations(k) for k in (1, 2, 3, 4, 5, 8, 9)] == [1, 2, 3, 3, 4, 4, 5]


def test_unknown_operation():
    with pytest.raises(ValueError):
        ring_arithmetic(1, 2, "div", RingParams(2, 3))


def test_sample_uniform_shapes():
    import numpy as np

    rng = np.random.default_rng(0)
    assert isinstance(rings.sample_uniform(RingParams(2, 3), rng), int)
    big = rings.sample_uniform(RingParams(2, 70, (1, 1, 1)), rng)
    assert len(big) == 2 and all(0 <= c < 2**70 for c in big)
