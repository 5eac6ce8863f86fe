from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from conftest import PENTAHEDRAL, random_cubic
from cubicsurface.algebra import MONOMIALS, parse_cubic
from cubicsurface.lines import find_lines, incidence_graph, tritangent_planes
from cubicsurface.normal_forms import (NormalFormError, bl_form, bl_generator_vectors,
                                       brundu_logar, cayley_salmon_all, pentahedral,
                                       reference_lset)
from cubicsurface.numeric import coeff_vector, numeric_act, product_coeffs, relative_residual
from cubicsurface.solver import TrackerConfig


@pytest.fixture(scope="module")
def generic():
    f = random_cubic(202)
    L = find_lines(f, TrackerConfig(seed=1))
    g = incidence_graph(L)
    return f, L, g, tritangent_planes(L, g)


def test_pentahedral_example():
    P = pentahedral(parse_cubic(PENTAHEDRAL))
    expected = [np.eye(4)[i] for i in range(4)] + [np.ones(4)]
    for e in expected:
        assert min(np.max(np.abs(l - e)) for l in P.forms) < 1e-8
    assert np.allclose(P.scalars, 1, atol=1e-8)
    assert P.residual < 1e-8


@pytest.mark.parametrize("seed", [0, 1])
def test_pentahedral_random(seed):
    f = random_cubic(seed)
    P = pentahedral(f, TrackerConfig(seed=seed))
    assert P.residual < 1e-8
    assert relative_residual(P.reconstruct(), coeff_vector(f)) < 1e-8
    assert len(P.nodes) == 10
    assert all(len(s) == 6 for s in P.node_planes)
    for sub in combinations(P.forms, 4):
        assert abs(np.linalg.det(np.array(sub))) > 1e-8


def test_pentahedral_rejects_fermat(fermat):
    with pytest.raises(NormalFormError):
        pentahedral(fermat)


def test_cayley_salmon(generic):
    f, L, g, planes = generic
    reps = cayley_salmon_all(f, L, planes)
    assert len(reps) == 120
    c = coeff_vector(f)
    for r in reps:
        P = product_coeffs(*(planes[k].plane for k in r.first))
        Q = product_coeffs(*(planes[k].plane for k in r.second))
        assert relative_residual(r.lam * P + r.mu * Q, c) < 1e-8
        lines = set()
        for i, p in enumerate(r.first):
            for j, q in enumerate(r.second):
                line = r.grid[i][j]
                containing = [k for k, pl in enumerate(planes) if line in pl.line_triple]
                assert p in containing and q in containing
                lines.add(line)
        assert len(lines) == 9


def test_reference_lset_pattern():
    ref = reference_lset()
    assert len(ref.lines) == 5
    assert ref.pattern() == [(0, 1), (0, 2), (0, 3), (1, 4), (2, 4)]


def test_lset_cuts_out_the_family():
    """Cubics containing the five reference lines are exactly the span of the generators."""
    ref = reference_lset()
    rows = []
    for l in ref.lines:
        u, v = l.span
        for s, t in ((1, 0), (0, 1), (1, 1), (1, -1)):
            p = s * u + t * v
            rows.append([np.prod([p[i] ** e for i, e in enumerate(m)]) for m in MONOMIALS])
    M = np.array(rows)
    sv = np.linalg.svd(M, compute_uv=False)
    assert sv[14] > 1e-8 * sv[0] and sv[15] < 1e-10 * sv[0]
    G = np.array(bl_generator_vectors(), dtype=float).T
    assert np.max(np.abs(M @ G)) < 1e-10


def test_brundu_logar_identity():
    a = [Fraction(3), Fraction(-1, 2), Fraction(7), Fraction(2), Fraction(5, 3)]
    res = brundu_logar(bl_form(a))
    assert res.exact and res.residual == 0.0
    assert res.params == a
    assert res.transform == [[int(i == j) for j in range(4)] for i in range(4)]


def test_brundu_logar_random(generic):
    f, L, g, _ = generic
    res = brundu_logar(f, L, g)
    assert res.residual < 1e-6
    G = np.array(bl_generator_vectors(), dtype=float).T
    moved = numeric_act(coeff_vector(f), res.transform)
    assert relative_residual(G @ np.array(res.params), moved) < 1e-6
    assert abs(np.linalg.det(res.transform)) > 1e-8
