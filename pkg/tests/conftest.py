from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from cubicsurface.algebra import CubicForm, ProjTransform, parse_cubic

FERMAT = "x^3+y^3+z^3+w^3"
CAYLEY = "x*y*z+x*y*w+x*z*w+y*z*w"
CLEBSCH = "x^3+y^3+z^3+w^3-(x+y+z+w)^3"
PENTAHEDRAL = "x^3+y^3+z^3+w^3+(x+y+z+w)^3"
# valuations of a cubic whose 2-adic subdivision is a unimodular triangulation
SMOOTH_HEIGHTS = (19, 19, 19, 1, 15, 15, 8, 14, 15, 9, 15, 14, 9, 3, 2, 3, 12, 6, 6, 6)

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)
cubic_forms = st.lists(rationals, min_size=20, max_size=20).filter(any).map(
    lambda cs: CubicForm(tuple(cs)))
small_ints = st.integers(min_value=-3, max_value=3)
transforms = st.lists(st.lists(small_ints, min_size=4, max_size=4), min_size=4, max_size=4).filter(
    lambda m: round(np.linalg.det(np.array(m, dtype=float))) != 0).map(
    lambda m: ProjTransform(tuple(map(tuple, m))))


def random_cubic(seed: int, low: int = -9, high: int = 9) -> CubicForm:
    rng = np.random.default_rng(seed)
    return CubicForm(tuple(int(c) for c in rng.integers(low, high + 1, size=20)))


def smooth_fixture() -> CubicForm:
    return CubicForm(tuple(Fraction(2) ** h for h in SMOOTH_HEIGHTS))


@pytest.fixture(scope="session")
def fermat():
    return parse_cubic(FERMAT)


@pytest.fixture(scope="session")
def clebsch():
    return parse_cubic(CLEBSCH)


@pytest.fixture(scope="session")
def fermat_lines(fermat):
    from cubicsurface.lines import find_lines
    return find_lines(fermat)


def linear_product_system(seed: int, degrees):
    """Equations that are products of random integer affine forms, with the exact root grid.

    Returns (PolySystem, roots) where roots are Fraction tuples obtained by choosing one
    factor per equation and solving the linear system by hand.
    """
    from itertools import product

    from cubicsurface.solver import PolySystem

    n = len(degrees)
    rng = np.random.default_rng(seed)
    while True:
        factors = [[rng.integers(-6, 7, size=n + 1) for _ in range(d)] for d in degrees]
        roots = []
        ok = True
        for choice in product(*(range(d) for d in degrees)):
            rows = [factors[i][k] for i, k in enumerate(choice)]
            A = [[Fraction(int(v)) for v in r[:n]] for r in rows]
            b = [Fraction(-int(r[n])) for r in rows]
            sol = _solve_exact(A, b)
            if sol is None:
                ok = False
                break
            roots.append(sol)
        if ok and len(set(roots)) == len(roots):
            break
    eqs = []
    for fs in factors:
        poly = {(0,) * n: 1}
        for a in fs:
            lin = {tuple(int(i == j) for j in range(n)): int(a[i]) for i in range(n)}
            lin[(0,) * n] = int(a[n])
            out = {}
            for e1, c1 in poly.items():
                for e2, c2 in lin.items():
                    e = tuple(p + q for p, q in zip(e1, e2))
                    out[e] = out.get(e, 0) + c1 * c2
            poly = out
        eqs.append(poly)
    return PolySystem(eqs, n), roots


def _solve_exact(A, b):
    n = len(A)
    m = [row[:] + [rhs] for row, rhs in zip(A, b)]
    for c in range(n):
        p = next((r for r in range(c, n) if m[r][c] != 0), None)
        if p is None:
            return None
        m[c], m[p] = m[p], m[c]
        for r in range(n):
            if r != c and m[r][c] != 0:
                k = m[r][c] / m[c][c]
                m[r] = [x - k * y for x, y in zip(m[r], m[c])]
    return tuple(m[i][n] / m[i][i] for i in range(n))


def match_roots(found, expected, tol: float = 1e-8):
    """(missed, spurious) counts when matching numeric points to exact roots."""
    exp = [np.array([float(v) for v in r]) for r in expected]
    used = set()
    spurious = 0
    for p in found:
        hit = next((k for k, e in enumerate(exp)
                    if k not in used and np.max(np.abs(np.asarray(p) - e)) < tol * max(1, np.max(np.abs(e)))),
                   None)
        if hit is None:
            spurious += 1
        else:
            used.add(hit)
    return len(exp) - len(used), spurious
