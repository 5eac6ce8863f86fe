from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CAYLEY, FERMAT, cubic_forms, rationals, transforms
from cubicsurface.algebra import (MONOMIALS, CubicForm, MultiPoly, ParseError, ProjTransform, act,
                                  cubic_from_linear_product, evaluate, format_cubic, gradient,
                                  hessian_det, parse_cubic, parse_poly, substitute_linear)

X, Y, Z, W = (MultiPoly.variable(i) for i in range(4))


def test_monomial_order():
    names = ["x^3", "y^3", "z^3", "w^3", "x^2*y", "x^2*z", "x^2*w", "x*y^2", "y^2*z", "y^2*w",
             "x*z^2", "y*z^2", "z^2*w", "x*w^2", "y*w^2", "z*w^2", "x*y*z", "x*y*w", "x*z*w",
             "y*z*w"]
    for k, name in enumerate(names):
        assert next(iter(parse_poly(name).terms)) == MONOMIALS[k]


def test_parse_fermat_and_cayley():
    assert parse_cubic(FERMAT).coeffs == (1, 1, 1, 1) + (0,) * 16
    assert parse_cubic(CAYLEY).coeffs == (0,) * 16 + (1, 1, 1, 1)


def test_parse_rejects_wrong_degree():
    with pytest.raises(ValueError, match="not homogeneous of degree 3"):
        parse_cubic("x^2+y^3")


def test_parse_error_has_position():
    with pytest.raises(ParseError) as err:
        parse_poly("x^3 + * y")
    assert err.value.position == 6


def test_parse_rationals_and_parentheses():
    f = parse_cubic("1/2*x^3 - (x - y)*(x + y)*z")
    p = f.to_poly()
    assert p.coefficient((3, 0, 0, 0)) == Fraction(1, 2)
    assert p.coefficient((2, 0, 1, 0)) == -1
    assert p.coefficient((0, 2, 1, 0)) == 1


def test_gradient_examples(fermat):
    assert gradient(fermat) == (3 * X**2, 3 * Y**2, 3 * Z**2, 3 * W**2)
    assert gradient(parse_cubic(CAYLEY))[0] == Y * Z + Y * W + Z * W


def test_hessian_examples(fermat):
    assert hessian_det(fermat) == 1296 * X * Y * Z * W
    ell = X + 2 * Y - Z + 3 * W
    assert hessian_det(ell**3).is_zero()


def test_hessian_chain_rule():
    f = parse_cubic("x^3 - 2*x*y*z + 3*y^2*w + z^3 - w^3 + x*z*w")
    A = ProjTransform(((1, 2, 0, -1), (0, 1, 3, 0), (2, 0, 1, 1), (1, -1, 0, 2)))
    lhs = hessian_det(act(f, A))
    rhs = substitute_linear(hessian_det(f), A.rows) * (A.det ** 2)
    assert lhs == rhs


def test_act_examples(fermat):
    assert act(fermat, ProjTransform.identity()) == fermat
    assert act(fermat, ProjTransform.permutation([1, 0, 2, 3])) == fermat


def test_act_rejects_singular_matrix():
    with pytest.raises(ValueError, match="singular"):
        ProjTransform(((1, 0, 0, 0), (1, 0, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)))


def test_evaluate_examples(fermat):
    assert evaluate(fermat, (1, -1, 0, 0)) == 0
    assert evaluate(fermat, (1, 1, 1, 1)) == 4


def test_cubic_from_linear_product():
    c = cubic_from_linear_product((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 1))
    assert parse_cubic("x*y*z + x*y*w").coeffs == tuple(c)


@settings(max_examples=60, deadline=None)
@given(cubic_forms)
def test_print_parse_roundtrip(f):
    assert parse_cubic(format_cubic(f)) == f
    assert CubicForm.from_strings(f.to_json()) == f


@settings(max_examples=60, deadline=None)
@given(cubic_forms)
def test_euler_identity(f):
    p = f.to_poly()
    total = sum((v * g for v, g in zip((X, Y, Z, W), gradient(f))), MultiPoly())
    assert total == 3 * p


@settings(max_examples=25, deadline=None)
@given(cubic_forms, transforms, transforms)
def test_act_is_right_action(f, A, B):
    assert act(f, A @ B) == act(act(f, A), B)
    assert act(act(f, A), A.inverse()) == f


@settings(max_examples=25, deadline=None)
@given(cubic_forms, transforms)
def test_gradient_commutes_with_action(f, A):
    lhs = gradient(act(f, A))
    moved = [substitute_linear(g, A.rows) for g in gradient(f)]
    for j in range(4):
        rhs = sum((A.rows[i][j] * moved[i] for i in range(4)), MultiPoly())
        assert lhs[j] == rhs


@settings(max_examples=40, deadline=None)
@given(cubic_forms, st.lists(rationals, min_size=4, max_size=4))
def test_exact_float_agreement(f, pt):
    exact = evaluate(f, pt)
    approx = evaluate(f.to_poly().map_coeffs(float), [float(v) for v in pt])
    size = sum(abs(float(c)) for c in f.coeffs) * max(1.0, *(abs(float(v)) for v in pt)) ** 3
    assert abs(float(exact) - approx) <= 1e-12 * size
