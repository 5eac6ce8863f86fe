"""Sylvester pentahedral form, Cayley-Salmon trihedral pairs, Brundu-Logar normal form."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations

import numpy as np

from .algebra import MONOMIALS, CubicForm, hessian_det, parse_poly
from .lines import INCIDENCE_TOL, IncidenceGraph, LineSet27, find_lines, pairing
from .numeric import coeff_vector, numeric_act, product_coeffs, relative_residual
from .solver import PolySystem, SolverError, TrackerConfig, solve_overdetermined

RESIDUAL_TOL = 1e-8
SPAN_TOL = 1e-6


class NormalFormError(RuntimeError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def _cj(z):
    z = complex(z)
    return [z.real, z.imag]


# ---------------------------------------------------------------------------
# Sylvester pentahedron

@dataclass
class Pentahedron:
    forms: list                  # five 4-vectors, leading coordinate 1
    scalars: list                # a_1..a_5
    residual: float
    nodes: list                  # the ten Hessian nodes
    node_planes: list            # for each form, indices of the six nodes it contains
    seed: int = 0

    def reconstruct(self) -> np.ndarray:
        return sum(a * product_coeffs(l, l, l) for a, l in zip(self.scalars, self.forms))

    def to_json(self) -> dict:
        return {
            "forms": [[_cj(z) for z in l] for l in self.forms],
            "scalars": [_cj(a) for a in self.scalars],
            "residual": self.residual,
            "nodes": [[_cj(z) for z in p] for p in self.nodes],
            "node_planes": [list(s) for s in self.node_planes],
            "seed": self.seed,
        }


def _leading_one(v, tol: float = 1e-8) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    k = next(i for i, z in enumerate(v) if abs(z) > tol)
    return v / v[k]


def hessian_nodes(f: CubicForm, cfg: TrackerConfig | None = None):
    """Isolated singular points of the Hessian quartic (solutions of grad h = 0)."""
    cfg = cfg or TrackerConfig()
    h = hessian_det(f)
    if h.is_zero():
        raise NormalFormError("fewer than 10 Hessian nodes", {"reason": "Hessian vanishes"})
    grad = [h.diff(i) for i in range(4)]
    grad = [g for g in grad if not g.is_zero()]
    if len(grad) < 3:
        raise NormalFormError("fewer than 10 Hessian nodes", {"reason": "singular locus not isolated"})
    run = TrackerConfig(**{**cfg.__dict__, "max_failures": 27})
    try:
        sols = solve_overdetermined(PolySystem.from_polys(grad), run, RESIDUAL_TOL)
    except SolverError as exc:
        raise NormalFormError("fewer than 10 Hessian nodes", {"solver": str(exc)}) from exc
    return sols


def pentahedral(f: CubicForm, cfg: TrackerConfig | None = None) -> Pentahedron:
    """f = sum a_i l_i^3 from the ten nodes of the Hessian quartic."""
    cfg = cfg or TrackerConfig()
    sols = hessian_nodes(f, cfg)
    nodes = [p for p, s in zip(sols.points, sols.singular) if not s]
    diag = {"nodes": len(nodes), "candidates": sols.candidates,
            "singular": int(sum(sols.singular)), "stats": sols.stats}
    if any(sols.singular) or len(nodes) != 10:
        raise NormalFormError("fewer than 10 Hessian nodes" if len(nodes) < 10
                              else "Hessian nodes not isolated or too many", diag)
    P = np.array(nodes)
    planes = []
    for tri in combinations(range(10), 3):
        _, s, vh = np.linalg.svd(P[list(tri)])
        n = vh[-1].conj()
        on = tuple(int(k) for k in np.nonzero(np.abs(P @ n) < 1e-7)[0])
        if len(on) == 6 and not any(on == q[1] for q in planes):
            planes.append((n, on))
    if len(planes) != 5:
        raise NormalFormError("coplanar grouping failed", {**diag, "planes": len(planes)})
    forms = [_leading_one(n) for n, _ in planes]
    order = sorted(range(5), key=lambda i: tuple(np.round(np.concatenate(
        [forms[i].real, forms[i].imag]), 8)))
    forms = [forms[i] for i in order]
    node_sets = [planes[i][1] for i in order]
    if min(np.linalg.svd(np.array(list(sub)), compute_uv=False)[-1]
           for sub in combinations(forms, 4)) < 1e-8:
        raise NormalFormError("pentahedral forms not in general position", diag)
    c = coeff_vector(f)
    A = np.array([product_coeffs(l, l, l) for l in forms]).T
    a = np.linalg.lstsq(A, c, rcond=None)[0]
    res = relative_residual(A @ a, c)
    if res > RESIDUAL_TOL:
        raise NormalFormError("reconstruction residual above tolerance", {**diag, "residual": res})
    return Pentahedron(forms=forms, scalars=[complex(x) for x in a], residual=res,
                       nodes=nodes, node_planes=node_sets, seed=cfg.seed)


# ---------------------------------------------------------------------------
# Cayley-Salmon

@dataclass
class CayleySalmonRep:
    first: tuple                 # three tritangent-plane indices
    second: tuple
    lam: complex
    mu: complex
    residual: float
    grid: list = field(default_factory=list)     # grid[i][j] = line in first[i] and second[j]

    def to_json(self) -> dict:
        return {"first": list(self.first), "second": list(self.second),
                "lambda": _cj(self.lam), "mu": _cj(self.mu), "residual": self.residual,
                "grid": [list(r) for r in self.grid]}


def trihedral_pairs(planes: list) -> list[tuple[tuple, tuple, list]]:
    """Unordered pairs of plane triples whose 9 lines form a 3x3 grid."""
    by_lines = {frozenset(p.line_triple): k for k, p in enumerate(planes)}
    triples = [frozenset(p.line_triple) for p in planes]
    seen = set()
    out = []
    for a, b, c in combinations(range(len(planes)), 3):
        A, B, C = triples[a], triples[b], triples[c]
        if A & B or A & C or B & C:
            continue
        la, lb, lc = sorted(A), sorted(B), sorted(C)
        for pb in permutations(lb):
            for pc in permutations(lc):
                qs = [by_lines.get(frozenset((la[j], pb[j], pc[j]))) for j in range(3)]
                if None in qs:
                    continue
                key = frozenset((frozenset((a, b, c)), frozenset(qs)))
                if key in seen:
                    continue
                seen.add(key)
                first = (a, b, c)
                second = tuple(sorted(qs))
                grid = [[next(iter(triples[p] & triples[q])) for q in second] for p in first]
                out.append((first, second, grid))
    out.sort(key=lambda t: (min(t[0], t[1]), max(t[0], t[1])))
    return [(min(f, s), max(f, s), g if f < s else [list(r) for r in zip(*g)])
            for f, s, g in out]


def cayley_salmon_all(f: CubicForm, lines: LineSet27, planes: list,
                      expect: int | None = 120) -> list[CayleySalmonRep]:
    """All representations f = lambda P1 P2 P3 + mu Q1 Q2 Q3 over trihedral pairs."""
    lines.require_complete()
    c = coeff_vector(f)
    reps = []
    rejected = 0
    for first, second, grid in trihedral_pairs(planes):
        Pc = product_coeffs(*(planes[k].plane for k in first))
        Qc = product_coeffs(*(planes[k].plane for k in second))
        A = np.stack([Pc, Qc], axis=1)
        (lam, mu) = np.linalg.lstsq(A, c, rcond=None)[0]
        res = relative_residual(A @ np.array([lam, mu]), c)
        if res < RESIDUAL_TOL:
            reps.append(CayleySalmonRep(first, second, complex(lam), complex(mu), res, grid))
        else:
            rejected += 1
    if expect is not None and len(reps) != expect:
        raise NormalFormError(f"found {len(reps)} Cayley-Salmon representations, expected {expect}",
                              {"found": len(reps), "rejected": rejected})
    return reps


# ---------------------------------------------------------------------------
# Brundu-Logar

BL_GENERATORS = (
    "2*x^2*y - 2*x*y^2 + x*z^2 - x*z*w - y*w^2 + y*z*w",
    "(x - w)*(x*z + y*w)",
    "(z + w)*(y*w - x*z)",
    "(y - z)*(x*z + y*w)",
    "(x - y)*(y*w - x*z)",
)


def bl_generator_vectors() -> list[list[Fraction]]:
    return [[parse_poly(g).coefficient(m) for m in MONOMIALS] for g in BL_GENERATORS]


def bl_form(a) -> CubicForm:
    """The member sum a_i g_i of the Brundu-Logar family."""
    G = bl_generator_vectors()
    return CubicForm([sum((Fraction(ai) * g[k] for ai, g in zip(a, G)), Fraction(0))
                      for k in range(20)])


def _exact_span_coords(c, G) -> list[Fraction] | None:
    """Exact a with sum a_i G_i = c, or None if c is not in the span."""
    rows = [[G[i][k] for i in range(len(G))] + [Fraction(c[k])] for k in range(20)]
    n = len(G)
    piv_cols = []
    r = 0
    for col in range(n + 1):
        p = next((i for i in range(r, 20) if rows[i][col] != 0), None)
        if p is None:
            continue
        if col == n:
            return None
        rows[r], rows[p] = rows[p], rows[r]
        pv = rows[r][col]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(20):
            if i != r and rows[i][col] != 0:
                k = rows[i][col]
                rows[i] = [a - k * b for a, b in zip(rows[i], rows[r])]
        piv_cols.append(col)
        r += 1
    a = [Fraction(0)] * n
    for i, col in enumerate(piv_cols):
        a[col] = rows[i][n]
    return a


@dataclass
class ReferenceLSet:
    lines: list                  # Line objects, in the family's canonical order
    adjacency: np.ndarray
    seeds: tuple

    def pattern(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j in combinations(range(len(self.lines)), 2) if self.adjacency[i, j]]


@lru_cache(maxsize=4)
def reference_lset(seed: int = 20240) -> ReferenceLSet:
    """Lines shared by two seeded random members of the family."""
    rng = np.random.default_rng(seed)
    sets = []
    for _ in range(2):
        a = [int(v) for v in rng.integers(1, 30, size=5)]
        sets.append(find_lines(bl_form(a), TrackerConfig(seed=seed)))
    common = [l for l in sets[0].lines
              if any(np.linalg.norm(l.pluecker - m.pluecker) < 1e-6 for m in sets[1].lines)]
    adj = np.array([[i != j and abs(pairing(a.pluecker, b.pluecker)) < INCIDENCE_TOL
                     for j, b in enumerate(common)] for i, a in enumerate(common)])
    if len(common) != 5:
        raise NormalFormError(f"reference L-set has {len(common)} lines, expected 5")
    # order: the line meeting three others first, then its quadrilateral neighbours,
    # then the pendant line, then the opposite corner
    deg = adj.sum(axis=1)
    hub = int(np.argmax(deg))
    nbrs = [int(j) for j in np.nonzero(adj[hub])[0]]
    pendant = next(j for j in nbrs if deg[j] == 1)
    sides = [j for j in nbrs if j != pendant]
    corner = next(j for j in range(5) if j != hub and not adj[hub, j])
    order = [hub, sides[0], sides[1], pendant, corner]
    lines = [common[i] for i in order]
    return ReferenceLSet(lines=lines, adjacency=adj[np.ix_(order, order)], seeds=(seed,))


@dataclass
class BrunduLogarResult:
    transform: np.ndarray        # T with f(T x) in the normal-form span
    params: list                 # a_1..a_5
    residual: float
    tuple_lines: tuple = ()      # source lines mapped from the reference L-set
    candidates_tested: int = 0
    exact: bool = False

    def to_json(self) -> dict:
        T = self.transform
        if self.exact:
            rows = [[str(Fraction(v)) for v in row] for row in T]
        else:
            rows = [[_cj(v) for v in row] for row in np.asarray(T, dtype=complex)]
        return {"transform": rows, "params": [str(a) if self.exact else _cj(a) for a in self.params],
                "residual": self.residual, "l_set": list(self.tuple_lines),
                "candidates_tested": self.candidates_tested, "exact": self.exact}


def _pattern_tuples(adj: np.ndarray, ref_adj: np.ndarray):
    """Ordered 5-tuples of line indices whose incidence matches the reference, in lex order."""
    n = adj.shape[0]
    k = ref_adj.shape[0]

    def grow(chosen):
        if len(chosen) == k:
            yield tuple(chosen)
            return
        m = len(chosen)
        for cand in range(n):
            if cand in chosen:
                continue
            if all(bool(adj[cand, chosen[i]]) == bool(ref_adj[m, i]) for i in range(m)):
                yield from grow(chosen + [cand])

    yield from grow([])


def _transform_from_lines(ref_lines, src_lines):
    """T (up to scale) mapping each reference line onto the matching source line."""
    rows = []
    for r, s in zip(ref_lines, src_lines):
        for p in r.span:
            for pi in s.planes():
                rows.append(np.kron(pi, p))
    M = np.array(rows)
    _, sv, vh = np.linalg.svd(M)
    T = vh[-1].conj().reshape(4, 4)
    return T, sv


def brundu_logar(f: CubicForm, lines: LineSet27 | None = None,
                 graph: IncidenceGraph | None = None, cfg: TrackerConfig | None = None,
                 tol: float = SPAN_TOL, max_candidates: int | None = None) -> BrunduLogarResult:
    """Find T with f(T x) = sum a_i g_i; identity is tried first, exactly."""
    G = bl_generator_vectors()
    a_exact = _exact_span_coords(f.coeffs, G)
    if a_exact is not None:
        I = [[Fraction(int(i == j)) for j in range(4)] for i in range(4)]
        return BrunduLogarResult(transform=I, params=a_exact, residual=0.0, exact=True)

    cfg = cfg or TrackerConfig()
    if lines is None:
        lines = find_lines(f, cfg)
    lines.require_complete()
    if graph is None:
        from .lines import incidence_graph
        graph = incidence_graph(lines)
    ref = reference_lset()
    Gn = np.array(G, dtype=float).T            # 20 x 5
    c = coeff_vector(f)
    tested = 0
    best = None
    for tup in _pattern_tuples(np.asarray(graph.adjacency), ref.adjacency):
        tested += 1
        T, sv = _transform_from_lines(ref.lines, [lines.lines[i] for i in tup])
        if sv[-1] > 1e-8 * sv[0] or sv[-2] < 1e-6 * sv[0]:
            continue
        if abs(np.linalg.det(T)) < 1e-10:
            continue
        T = T / abs(np.linalg.det(T)) ** 0.25
        g = numeric_act(c, T)
        a = np.linalg.lstsq(Gn, g, rcond=None)[0]
        res = relative_residual(Gn @ a, g)
        if best is None or res < best[0]:
            best = (res, T, a, tup)
        if res < tol:
            return BrunduLogarResult(transform=T, params=[complex(x) for x in a], residual=res,
                                     tuple_lines=tup, candidates_tested=tested)
        if max_candidates is not None and tested >= max_candidates:
            break
    raise NormalFormError("no L-set candidate produced a valid transform",
                          {"candidates_tested": tested,
                           "best_residual": None if best is None else best[0]})
