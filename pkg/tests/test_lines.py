from itertools import combinations, product

import numpy as np
import pytest

from conftest import random_cubic
from cubicsurface.algebra import parse_cubic
from cubicsurface.lines import (Line, LinesError, double_sixes, eckardt_points, find_lines,
                                incidence_graph, is_double_six, meets, normalize_pluecker,
                                pluecker_from_span, real_line_census, restriction_residual,
                                tritangent_planes)
from cubicsurface.solver import TrackerConfig

OMEGA = [np.exp(2j * np.pi * k / 3) for k in range(3)]
PAIRINGS = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]


def fermat_closed_form():
    """The 27 lines {x_a + w1 x_b = 0, x_c + w2 x_d = 0} as point pairs."""
    out = []
    for (a, b), (c, d) in PAIRINGS:
        for w1, w2 in product(OMEGA, OMEGA):
            u = np.zeros(4, complex)
            v = np.zeros(4, complex)
            u[a], u[b] = -w1, 1
            v[c], v[d] = -w2, 1
            out.append((u, v))
    return out


def pluecker_match(A, B, tol=1e-8):
    """Every vector of A has a partner in B (unit vectors up to phase)."""
    for p in A:
        if min(np.linalg.norm(normalize_pluecker(p) - normalize_pluecker(q)) for q in B) > tol:
            return False
    return True


@pytest.fixture(scope="module")
def fermat_graph(fermat_lines):
    return incidence_graph(fermat_lines)


@pytest.fixture(scope="module")
def fermat_planes(fermat_lines, fermat_graph):
    return tritangent_planes(fermat_lines, fermat_graph)


@pytest.fixture(scope="module")
def generic():
    f = random_cubic(101)
    L = find_lines(f, TrackerConfig(seed=3))
    g = incidence_graph(L)
    return f, L, g, tritangent_planes(L, g)


def test_closed_form_lines_lie_on_fermat(fermat):
    cands = fermat_closed_form()
    assert len(cands) == 27
    for u, v in cands:
        assert restriction_residual(fermat, u, v) < 1e-14


def test_fermat_matches_closed_form(fermat_lines):
    assert len(fermat_lines) == 27 and fermat_lines.complete
    expected = [pluecker_from_span(u, v) for u, v in fermat_closed_form()]
    assert pluecker_match([l.pluecker for l in fermat_lines.lines], expected)
    assert max(fermat_lines.residuals) < 1e-8


def test_line_invariants(fermat_lines):
    for l in fermat_lines.lines:
        p12, p13, p14, p23, p24, p34 = l.pluecker
        assert abs(p12 * p34 - p13 * p24 + p14 * p23) < 1e-10
        again = normalize_pluecker(pluecker_from_span(*l.span))
        assert np.linalg.norm(again - l.pluecker) < 1e-10


def test_fermat_real_lines(fermat_lines):
    assert sum(l.is_real for l in fermat_lines.lines) == 3
    assert real_line_census(fermat_lines) == (3, 12)


def test_conjugation_closure(fermat_lines):
    ps = [l.pluecker for l in fermat_lines.lines]
    assert pluecker_match([np.conj(p) for p in ps], ps)


def test_meets_examples():
    e = np.eye(4)
    zw = Line.from_points(e[0], e[1])       # z = w = 0
    xy = Line.from_points(e[2], e[3])       # x = y = 0
    yz = Line.from_points(e[0], e[3])       # y = z = 0
    assert meets(zw, zw)
    assert not meets(zw, xy)
    assert meets(zw, yz)


def test_fermat_graph(fermat_graph):
    assert fermat_graph.is_regular(10)
    assert len(fermat_graph.edges) == 135
    A = fermat_graph.adjacency
    assert (A == A.T).all() and not A.diagonal().any()


def test_graph_seed_independent(fermat, fermat_lines, fermat_graph):
    other = find_lines(fermat, TrackerConfig(seed=17))
    ps = [l.pluecker for l in fermat_lines.lines]
    qs = [l.pluecker for l in other.lines]
    assert np.allclose(ps, qs, atol=1e-8)
    assert (incidence_graph(other).adjacency == fermat_graph.adjacency).all()


def test_fermat_planes(fermat_lines, fermat_planes):
    assert len(fermat_planes) == 45
    per_line = np.zeros(27, int)
    for pl in fermat_planes:
        per_line[list(pl.line_triple)] += 1
        for i in pl.line_triple:
            assert np.max(np.abs(fermat_lines.lines[i].span @ pl.plane)) < 1e-8
    assert (per_line == 5).all()
    target = normalize_pluecker(np.array([1, 1, 0, 0], complex))
    assert any(np.linalg.norm(pl.plane - target) < 1e-8 for pl in fermat_planes)


def test_fermat_double_sixes(fermat_graph):
    sixes = double_sixes(fermat_graph)
    assert len(sixes) == 36
    assert all(is_double_six(fermat_graph.adjacency, d) for d in sixes)


def test_fermat_eckardt(fermat_lines, fermat_planes):
    pts = eckardt_points(fermat_lines, fermat_planes)
    assert len(pts) == 18
    assert not any(p.ambiguous for p in pts)


def test_clebsch(clebsch):
    L = find_lines(clebsch)
    assert L.complete
    assert real_line_census(L) == (27, 0)
    g = incidence_graph(L)
    assert len(eckardt_points(L, tritangent_planes(L, g))) == 10


def test_generic_surface(generic):
    f, L, g, planes = generic
    assert L.complete and max(L.residuals) < 1e-8
    assert g.is_regular(10) and len(g.edges) == 135
    assert len(planes) == 45
    assert len(double_sixes(g)) == 36
    assert eckardt_points(L, planes) == []
    r, c = real_line_census(L)
    assert r in (27, 15, 7, 3) and r + 2 * c == 27


def test_double_six_definition(generic):
    _, _, g, _ = generic
    A = g.adjacency
    for d in double_sixes(g)[:6]:
        for s in (d.first, d.second):
            assert not any(A[i, j] for i, j in combinations(s, 2))
        for i in range(6):
            row = [bool(A[d.first[i], d.second[j]]) for j in range(6)]
            assert row == [j != i for j in range(6)]


def test_cayley_nodal_reports_nine_lines():
    # four nodes: the six edge lines of the tetrahedron plus three more
    f = parse_cubic("x*y*z+x*y*w+x*z*w+y*z*w")
    L = find_lines(f, attempts=1)
    assert len(L) == 9
    assert "fewer than 27 lines found" in L.flags
    assert max(L.residuals) < 1e-8
    with pytest.raises(LinesError, match="fewer than 27"):
        find_lines(f, attempts=1, strict=True)
    with pytest.raises(LinesError):
        incidence_graph(L)
