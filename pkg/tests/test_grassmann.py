"""Unit and property tests for the Grassmann algebra core."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superriesz.grassmann import (
    EVEN,
    ODD,
    AlgebraMismatchError,
    GrassmannAlgebra,
    GrassmannNumber,
)


@pytest.fixture
def alg2():
    return GrassmannAlgebra(2)


@pytest.fixture
def alg4():
    return GrassmannAlgebra(4)


def theta(alg, *idx):
    out = alg.one
    for i in idx:
        out = out * alg.gen(i)
    return out


# ---------------------------------------------------------------- multiply

def test_mul_basic(alg2):
    t1, t2 = alg2.gen(0), alg2.gen(1)
    assert (t1 * t2).coeffs == {0b11: 1.0}
    assert (t2 * t1).coeffs == {0b11: -1.0}


def test_mul_nilpotency(alg2):
    t12 = theta(alg2, 0, 1)
    lhs = (alg2.one + t12) * (alg2.one - t12)
    assert lhs.allclose(alg2.one, atol=0)


def test_mul_algebra_mismatch(alg2):
    other = GrassmannAlgebra(3)
    with pytest.raises(AlgebraMismatchError):
        alg2.gen(0) * other.gen(0)


# ---------------------------------------------------------------- derivative

def test_derivative_examples(alg2):
    t12 = theta(alg2, 0, 1)
    assert t12.derivative(0).coeffs == {0b10: 1.0}
    assert t12.derivative(1).coeffs == {0b01: -1.0}
    assert alg2.one.derivative(0).is_zero()
    assert t12.derivative(0).derivative(0).is_zero()


def test_derivative_out_of_range(alg2):
    with pytest.raises(IndexError):
        alg2.one.derivative(5)


# ---------------------------------------------------------------- berezin

def test_berezin_top_term(alg2):
    nu12 = theta(alg2, 0, 1)
    assert nu12.berezin([0, 1]).coeffs == {0: 1.0}
    nu21 = alg2.gen(1) * alg2.gen(0)
    assert nu21.berezin([0, 1]).coeffs == {0: -1.0}


def test_berezin_no_top_term(alg2):
    a = alg2.one + 3 * alg2.gen(0)
    assert a.berezin([0, 1]).is_zero()


def test_berezin_duplicate_rejected(alg2):
    with pytest.raises(ValueError):
        alg2.one.berezin([0, 0])


# ---------------------------------------------------------------- analytic

def test_exp_truncates(alg2):
    t12 = theta(alg2, 0, 1)
    assert t12.exp().allclose(alg2.one + t12, atol=0)


def test_inverse(alg2):
    t12 = theta(alg2, 0, 1)
    a = alg2.one + t12
    assert a.inverse().allclose(alg2.one - t12, atol=0)
    assert (a * a.inverse()).allclose(alg2.one, atol=0)


def test_sqrt_against_taylor_oracle(alg2):
    # oracle: explicit Taylor expansion of sqrt around body 4, soul s = 4*t12
    t12 = theta(alg2, 0, 1)
    a = 4 + 4 * t12
    got = a.power(0.5)

    def dsqrt(k, b=4.0):
        coef = 1.0
        for j in range(k):
            coef *= 0.5 - j
        return coef * b ** (0.5 - k)

    expected = alg2.zero
    soul_pow = alg2.one
    for k in range(alg2.n_generators + 1):
        expected = expected + soul_pow * (dsqrt(k) / math.factorial(k))
        soul_pow = soul_pow * (4 * t12)
    assert got.allclose(expected)
    assert got.allclose(2 + t12)


def test_log_of_exp(alg4):
    a = 0.5 + 2 * theta(alg4, 0, 1) + 3 * theta(alg4, 2, 3) + theta(alg4, 0, 1, 2, 3)
    assert a.exp().log().allclose(a, atol=1e-12)


def test_inverse_zero_body_raises(alg2):
    with pytest.raises(ZeroDivisionError):
        theta(alg2, 0, 1).inverse()


# ---------------------------------------------------------------- extract

def test_extract(alg2):
    a = 2 + 3 * alg2.gen(0)
    assert a.extract(0b01) == 3
    assert a.extract(0) == 2
    assert theta(alg2, 0, 1).exp().extract(0b11) == 1
    with pytest.raises(IndexError):
        a.extract(1 << 10)


# ---------------------------------------------------------------- array coefficients

def test_array_coefficients_roundtrip(alg2):
    z = np.array([1.0, 2.0, 3.0], dtype=complex)
    a = alg2.scalar(z) + alg2.gen(0) * alg2.gen(1) * z
    inv = a.inverse()
    assert (a * inv).allclose(alg2.one, atol=1e-14)
    e = a.map_coefficients(lambda c: np.sum(c))
    assert e.extract(0) == pytest.approx(6.0)


# ---------------------------------------------------------------- properties

def random_element(alg, data, parity=None, integer=True):
    masks = list(range(1 << alg.n_generators))
    if parity is not None:
        masks = [m for m in masks if m.bit_count() % 2 == parity]
    coeffs = {}
    for m in masks:
        c = data.draw(st.integers(-4, 4)) + 1j * data.draw(st.integers(-4, 4))
        coeffs[m] = c
    return GrassmannNumber(alg, coeffs)


@settings(max_examples=60, deadline=None)
@given(data=st.data(), pa=st.integers(0, 1), pb=st.integers(0, 1))
def test_graded_commutativity(data, pa, pb):
    alg = GrassmannAlgebra(4)
    a = random_element(alg, data, parity=pa)
    b = random_element(alg, data, parity=pb)
    sign = -1 if (pa and pb) else 1
    assert (a * b).coeffs == (sign * (b * a)).coeffs


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_soul_is_nilpotent(data):
    alg = GrassmannAlgebra(3)
    a = random_element(alg, data)
    s = a.soul
    out = alg.one
    for _ in range(alg.n_generators + 1):
        out = out * s
    assert out.is_zero()


@settings(max_examples=60, deadline=None)
@given(data=st.data(), pa=st.integers(0, 1), i=st.integers(0, 3))
def test_leibniz(data, pa, i):
    alg = GrassmannAlgebra(4)
    a = random_element(alg, data, parity=pa)
    b = random_element(alg, data)
    lhs = (a * b).derivative(i)
    rhs = a.derivative(i) * b + (-1) ** pa * (a * b.derivative(i))
    assert lhs.coeffs == rhs.coeffs


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_exp_of_negation_is_inverse(data):
    alg = GrassmannAlgebra(4)
    a = random_element(alg, data, parity=0)
    prod = a.exp() * (-a).exp()
    assert prod.allclose(alg.one, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(data=st.data(), i=st.integers(0, 2))
def test_berezin_kills_derivatives(data, i):
    alg = GrassmannAlgebra(3)
    a = random_element(alg, data)
    assert a.derivative(i).berezin([0, 1, 2]).is_zero()


def test_parity_classification(alg2):
    assert alg2.one.parity == EVEN
    assert alg2.gen(0).parity == ODD
    assert (alg2.one + alg2.gen(0)).parity == "mixed"
    assert alg2.zero.parity == EVEN


def test_embed_preserves_products():
    small = GrassmannAlgebra(2)
    big = GrassmannAlgebra(5)
    a = 1 + 2 * small.gen(0) + 3 * small.gen(1) + 4 * small.gen(0) * small.gen(1)
    b = 2 - small.gen(0) * small.gen(1)
    gen_map = [1, 3]
    lhs = (a * b).embed(big, gen_map)
    rhs = a.embed(big, gen_map) * b.embed(big, gen_map)
    assert lhs.coeffs == rhs.coeffs
