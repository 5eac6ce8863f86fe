from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CAYLEY, random_cubic
from cubicsurface.algebra import (MultiPoly, ProjTransform, act, gradient, parse_cubic,
                                  parse_poly)
from cubicsurface.discriminant import (FERMAT_DISCRIMINANT, _gcp_resultant, bareiss_det,
                                       det_rational, discriminant, is_singular, macaulay_data,
                                       macaulay_resultant, macaulay_resultant_info)

# the discriminant of x^3+y^3+z^3+w^3, frozen from the first exact run
FERMAT_VALUE = Fraction(1853020188851841)


def linear_product(forms):
    n = len(forms[0])
    out = MultiPoly.constant(Fraction(1), n)
    for l in forms:
        out = out * MultiPoly.linear([Fraction(c) for c in l], n)
    return out


def poisson_resultant(factor_lists):
    """Exact resultant of products of linear forms by the Poisson product formula.

    Res(F_1..F_n) = Res(F_1..F_{n-1} at x_n = 0)^{d_n} * prod f_n(p), p over the affine
    common zeros of f_1..f_{n-1} at x_n = 1, normalized so Res(x_1^d_1, ...) = 1.
    """
    n = len(factor_lists)
    if n == 1:
        return np.prod([Fraction(l[0]) for l in factor_lists[0]], dtype=object)
    base = [[l[:-1] for l in fs] for fs in factor_lists[:-1]]
    total = poisson_resultant(base) ** len(factor_lists[-1])
    for choice in product(*factor_lists[:-1]):
        A = [[Fraction(c) for c in l[:-1]] for l in choice]
        b = [-Fraction(l[-1]) for l in choice]
        p = solve(A, b)
        for l in factor_lists[-1]:
            total *= sum(Fraction(c) * v for c, v in zip(l, list(p) + [1]))
    return total


def solve(A, b):
    n = len(A)
    m = [row[:] + [rhs] for row, rhs in zip(A, b)]
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("degenerate factor choice")
        m[c], m[piv] = m[piv], m[c]
        for r in range(n):
            if r != c and m[r][c] != 0:
                k = m[r][c] / m[c][c]
                m[r] = [x - k * y for x, y in zip(m[r], m[c])]
    return [m[i][n] / m[i][i] for i in range(n)]


def test_bareiss_matches_float():
    rng = np.random.default_rng(0)
    M = rng.integers(-9, 10, size=(7, 7))
    assert bareiss_det(M.tolist()) == round(np.linalg.det(M))
    assert det_rational([[Fraction(1, 2), 1], [Fraction(1, 3), 2]]) == Fraction(2, 3)


def test_macaulay_shape():
    data = macaulay_data([parse_poly(q) for q in ("x^2", "y^2", "z^2", "w^2")])
    assert len(data.matrix) == 56 and len(data.matrix[0]) == 56
    assert data.resultant == 1


def test_resultant_examples():
    xs = [parse_poly(q) for q in ("x^2", "y^2", "z^2", "w^2")]
    assert macaulay_resultant(xs) != 0
    assert macaulay_resultant([parse_poly(q) for q in ("x^2", "x*y", "x*z", "x*w")]) == 0


@pytest.mark.parametrize("seed", range(3))
def test_poisson_oracle(seed):
    rng = np.random.default_rng(seed)
    while True:
        factors = [[tuple(int(v) for v in rng.integers(-5, 6, size=4)) for _ in range(2)]
                   for _ in range(4)]
        try:
            expected = poisson_resultant(factors)
        except ZeroDivisionError:
            continue
        break
    quads = [linear_product(fs) for fs in factors]
    assert macaulay_resultant(quads) == expected


def test_scaling_one_quadric():
    rng = np.random.default_rng(7)
    quads = [linear_product([tuple(int(v) for v in rng.integers(-4, 5, size=4)) for _ in range(2)])
             for _ in range(4)]
    r = macaulay_resultant(quads)
    for lam in (2, Fraction(-3, 5)):
        assert macaulay_resultant([quads[0] * lam] + quads[1:]) == lam ** 8 * r


def test_gcp_agrees_with_macaulay():
    f = random_cubic(4)
    grad = list(gradient(f))
    assert _gcp_resultant(grad) == macaulay_resultant(grad)


def test_fermat_regression(fermat):
    d = discriminant(fermat)
    assert d.value == FERMAT_DISCRIMINANT == FERMAT_VALUE == Fraction(3) ** 32
    assert not d.is_zero


def test_cayley_is_zero_with_four_nodes():
    f = parse_cubic(CAYLEY)
    assert discriminant(f).is_zero
    rep = is_singular(f)
    assert rep.singular and rep.isolated
    assert len(rep.witnesses) == 4
    for p in rep.witnesses:
        assert np.sum(np.abs(p) > 1e-8) == 1
    assert max(rep.witness_residuals) < 1e-8


def test_triple_plane_not_isolated():
    rep = is_singular(parse_cubic("x^3"))
    assert rep.singular
    assert rep.note == "singular, witness not isolated"
    assert rep.discriminant.method == "gcp"


def test_fermat_not_singular(fermat):
    rep = is_singular(fermat)
    assert not rep.singular and rep.witnesses == []


def test_homogeneity_bit_exact():
    f = random_cubic(12)
    assert discriminant(f.scaled(2)).value == 2 ** 32 * discriminant(f).value


@settings(max_examples=4, deadline=None)
@given(st.integers(0, 10_000), st.fractions(min_value=-5, max_value=5, max_denominator=7)
       .filter(lambda q: q != 0))
def test_homogeneity_random(seed, lam):
    f = random_cubic(seed, -4, 4)
    assert discriminant(f.scaled(lam)).value == lam ** 32 * discriminant(f).value


def test_relative_invariance():
    A = ProjTransform(((1, 2, 0, -1), (0, 1, 1, 0), (1, 0, 1, 1), (2, -1, 0, 1)))
    ratios = []
    for seed in (31, 32):
        f = random_cubic(seed, -5, 5)
        d = discriminant(f).value
        assert d != 0
        ratios.append(discriminant(act(f, A)).value / d)
    assert ratios[0] == ratios[1] == A.det ** 24


def test_retry_path_reports_method():
    info = macaulay_resultant_info(list(gradient(parse_cubic(CAYLEY))))
    assert info.value == 0 and info.method in ("macaulay-retry", "gcp")


def test_agreement_with_lines(fermat_lines, fermat):
    assert fermat_lines.complete and not discriminant(fermat).is_zero
