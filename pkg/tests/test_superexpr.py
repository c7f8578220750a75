"""Tests for expression trees and their text form."""

import numpy as np
import pytest

from superriesz.grassmann import GrassmannAlgebra
from superriesz.superexpr import (
    ExprError,
    SuperExpr,
    laplace_kernel,
    parse_entry,
    parse_expr,
    parse_matrix,
)
from superriesz.supermatrix import SuperMatrix


def alg(n=2):
    return GrassmannAlgebra(n)


def test_ber_squared():
    a = alg()
    zeta, omega = a.gen(0), a.gen(1)
    y = SuperMatrix(a, (1, 1), (1, 1), [[2, zeta], [omega, 1]])
    e = SuperExpr.power(2, SuperExpr.ber(SuperExpr.slot("Y")))
    got = e.eval({"Y": y})
    assert got.allclose(4 - 4 * zeta * omega, atol=0)


def test_str_xy():
    a = alg(0)
    x = SuperMatrix.diagonal(a, (1, 1), [1, 1])
    y = SuperMatrix.diagonal(a, (1, 1), [5, 3])
    e = SuperExpr.strace(SuperExpr.mul(SuperExpr.const(x), SuperExpr.slot("Y")))
    assert e.eval({"Y": y}).extract(0) == pytest.approx(2)


def test_exp_neg_str():
    a = alg(0)
    y = SuperMatrix.diagonal(a, (1, 1), [1, 0])
    e = SuperExpr.exp(SuperExpr.smul(-1, SuperExpr.strace(SuperExpr.slot("Y"))))
    assert e.eval({"Y": y}).extract(0) == pytest.approx(np.exp(-1))


def test_laplace_kernel_zero_and_identity():
    a = alg(0)
    zero = SuperMatrix.zeros(a, (1, 1), (1, 1))
    y = SuperMatrix.diagonal(a, (1, 1), [2, 5])
    assert laplace_kernel(zero).eval({"Y": y}).extract(0) == pytest.approx(1.0)
    x = SuperMatrix.identity(a, (1, 1))
    got = laplace_kernel(x).eval({"Y": y})
    assert got.extract(0) == pytest.approx(np.exp(-2 + 5))


def test_laplace_kernel_with_odd_parameters():
    a = GrassmannAlgebra(4)
    t1, t2, zeta, omega = a.gens()
    x = SuperMatrix(a, (1, 1), (1, 1), [[1, t1], [t2, 1]])
    y = SuperMatrix(a, (1, 1), (1, 1), [[2, zeta], [omega, 3]])
    got = laplace_kernel(x).eval({"Y": y})
    # nilpotent exponent str(xY) = -1 + t1*omega - t2*zeta; exp truncates exactly
    xy = x @ y
    expected = (-xy.supertrace()).exp()
    assert got.allclose(expected, atol=0)
    assert got.extract(0b1001) != 0  # t1*omega coefficient survives
    assert got.max_degree() == 4


def test_unbound_slot():
    e = SuperExpr.strace(SuperExpr.slot("Y"))
    with pytest.raises(ExprError):
        e.eval({"z": SuperMatrix.zeros(alg(0), (1, 0), (1, 0))})


def test_linearity_and_exp_add():
    a = alg(0)
    y = SuperMatrix.diagonal(a, (1, 1), [1.5, 2.5])
    s = SuperExpr.strace(SuperExpr.slot("Y"))
    e1 = SuperExpr.add(s, SuperExpr.smul(2, s))
    assert e1.eval({"Y": y}).extract(0) == pytest.approx(3 * (1.5 - 2.5))
    ea = SuperExpr.exp(SuperExpr.add(s, s))
    eb = SuperExpr.mul(SuperExpr.exp(s), SuperExpr.exp(s))
    assert ea.eval({"Y": y}).allclose(eb.eval({"Y": y}), atol=1e-12)


def test_specialisation_invariance():
    # binding external parameters to zero equals the parameter-free evaluation
    a2 = alg(2)
    a0 = alg(0)
    t1, t2 = a2.gen(0), a2.gen(1)
    x2 = SuperMatrix(a2, (1, 1), (1, 1), [[2, t1], [t2, 1]])
    y2 = SuperMatrix.diagonal(a2, (1, 1), [3, 7])
    val2 = laplace_kernel(x2).eval({"Y": y2})
    x0 = SuperMatrix.diagonal(a0, (1, 1), [2, 1])
    y0 = SuperMatrix.diagonal(a0, (1, 1), [3, 7])
    val0 = laplace_kernel(x0).eval({"Y": y0})
    assert val2.extract(0) == pytest.approx(val0.extract(0))


# ---------------------------------------------------------------- text form

def test_parse_roundtrip():
    text = "(mul (ber Y) (exp (smul -1 (str Y))))"
    e = parse_expr(text)
    assert e.to_text() == text
    a = alg(0)
    y = SuperMatrix.diagonal(a, (1, 1), [2, 1])
    got = e.eval({"Y": y})
    assert got.extract(0) == pytest.approx(2 * np.exp(-1))


def test_parse_minor_pow_scalar():
    e = parse_expr("(pow 2 (det (minor 1 Y)))")
    a = alg(0)
    y = SuperMatrix.diagonal(a, (2, 0), [3, 5])
    assert e.eval({"Y": y}).extract(0) == pytest.approx(9)


def test_parse_const_literal():
    a = alg(0)
    e = parse_expr("(str (mul (const diag:2,1) Y))", a, (1, 1))
    y = SuperMatrix.diagonal(a, (1, 1), [1, 1])
    assert e.eval({"Y": y}).extract(0) == pytest.approx(1)


def test_parse_errors():
    with pytest.raises(ExprError):
        parse_expr("(frob Y)")
    with pytest.raises(ExprError):
        parse_expr("")
    with pytest.raises(ExprError):
        parse_expr("(str Y) Y")


# ---------------------------------------------------------------- matrix syntax

def test_parse_entry_forms():
    a = alg(2)
    assert parse_entry("2", a).extract(0) == 2
    assert parse_entry("1+2j", a).extract(0) == 1 + 2j
    assert parse_entry("-1.5", a).extract(0) == -1.5
    v = parse_entry("2*t1", a)
    assert v.extract(0b01) == 2
    v = parse_entry("1-t2", a)
    assert v.extract(0) == 1 and v.extract(0b10) == -1
    v = parse_entry("0.5+0.5j+3*t1", a)
    assert v.extract(0) == 0.5 + 0.5j and v.extract(0b01) == 3


def test_parse_matrix_forms():
    a = alg(2)
    m = parse_matrix("diag:2,1", a, (1, 1))
    assert m.entries[0][0].extract(0) == 2
    m2 = parse_matrix("2,t1;t2,1", a, (1, 1))
    assert m2.entries[0][1].extract(0b01) == 1
    m2.check_even()
    with pytest.raises(ExprError):
        parse_matrix("diag:1", a, (1, 1))
    with pytest.raises(ExprError):
        parse_entry("2*t9", a)
