"""The 27 lines: computation, Pluecker coordinates, and their combinatorics."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product

import mpmath
import numpy as np

from .algebra import MONOMIAL_INDEX, MONOMIALS, CubicForm, MultiPoly, ProjTransform, act
from .numeric import MULTIPLICITY, cubic_tensor
from .solver import (PolySystem, TrackerConfig, point_sort_key,
                     total_degree_solve)

PLUECKER_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
INCIDENCE_TOL = 1e-7
REAL_TOL = 1e-8
RESTRICTION_TOL = 1e-8
CHART_RANGE = 50          # entries of the random integer coordinate change
LINE_SINGULAR_COND = 1e8


class LinesError(RuntimeError):
    """A combinatorial expectation failed; ``diagnostics`` says how."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class AmbiguousIncidence(LinesError):
    pass


def pluecker_from_span(u, v) -> np.ndarray:
    return np.array([u[i] * v[j] - u[j] * v[i] for i, j in PLUECKER_PAIRS])


def pairing(p, q):
    """Bilinear Pluecker pairing; zero iff the two lines meet."""
    return (p[0] * q[5] - p[1] * q[4] + p[2] * q[3]
            + p[3] * q[2] - p[4] * q[1] + p[5] * q[0])


def normalize_pluecker(p) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    p = p / np.linalg.norm(p)
    for z in p:
        if abs(z) > 1e-6:
            return p * (abs(z) / z)
    return p


def _cubic_numeric(f) -> np.ndarray:
    if isinstance(f, CubicForm):
        return np.array([complex(c) for c in f.coeffs])
    return np.asarray(f, dtype=complex)


def eval_cubic(coeffs: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Evaluate a numeric 20-vector cubic at points of shape (..., 4)."""
    E = np.array(MONOMIALS)
    mon = np.prod(pts[..., None, :] ** E, axis=-1)
    return mon @ coeffs


def restriction_residual(f, u, v) -> float:
    """Largest coefficient of the binary cubic f(s u + t v), relative to f."""
    c = _cubic_numeric(f)
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
    zeta = np.exp(2j * np.pi * np.arange(4) / 4)
    vals = eval_cubic(c, u[None, :] + zeta[:, None] * v[None, :])
    b = np.array([np.mean(vals * zeta ** (-k)) for k in range(4)])
    return float(np.max(np.abs(b)) / np.max(np.abs(c)))


def _complement(u, v):
    _, _, vh = np.linalg.svd(np.array([u, v]))
    return vh[2].conj(), vh[3].conj()


def _line_newton_system(F, u, v, n1, n2):
    """Restriction coefficients F(u,u,u), F(u,u,v), F(u,v,v), F(v,v,v) and their
    Jacobian in the local chart u + a n1 + b n2, v + c n1 + d n2."""
    t = lambda a, b, c: np.einsum("ijk,i,j,k->", F, a, b, c)
    vals = np.array([t(u, u, u), t(u, u, v), t(u, v, v), t(v, v, v)])
    J = np.zeros((4, 4), dtype=complex)
    for col, n in enumerate((n1, n2)):
        J[0, col] = 3 * t(u, u, n)
        J[1, col] = 2 * t(u, v, n)
        J[2, col] = t(v, v, n)
        J[1, col + 2] = t(u, u, n)
        J[2, col + 2] = 2 * t(u, v, n)
        J[3, col + 2] = 3 * t(v, v, n)
    return vals, J


def polish_line(F, u, v, iterations: int = 8):
    """Newton for 'the line lies on V(f)' in a local chart; returns (u, v, cond)."""
    scale = float(np.max(np.abs(F)))
    cond = float("inf")
    for _ in range(iterations):
        q, _ = np.linalg.qr(np.array([u, v], dtype=complex).T)
        u, v = q[:, 0], q[:, 1]
        n1, n2 = _complement(u, v)
        vals, J = _line_newton_system(F / scale, u, v, n1, n2)
        sv = np.linalg.svd(J, compute_uv=False)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
        if not np.all(np.isfinite(J)) or sv[-1] == 0:
            break
        d = np.linalg.lstsq(J, -vals, rcond=None)[0]
        u = u + d[0] * n1 + d[1] * n2
        v = v + d[2] * n1 + d[3] * n2
        if np.linalg.norm(d) < 1e-15:
            break
    return u, v, cond


def polish_line_mp(f: CubicForm, u, v, dps: int = 50, iterations: int = 12):
    """polish_line in mpmath against the exact coefficients; returns mp vectors."""
    n1, n2 = _complement(u, v)
    with mpmath.workdps(dps):
        F = {}
        for idx in product(range(4), repeat=3):
            e = [0, 0, 0, 0]
            for a in idx:
                e[a] += 1
            m = MONOMIAL_INDEX[tuple(e)]
            c = f.coeffs[m]
            F[idx] = mpmath.mpf(c.numerator) / c.denominator / int(MULTIPLICITY[m])
        t = lambda a, b, c: mpmath.fsum(F[i, j, k] * a[i] * b[j] * c[k]
                                        for (i, j, k) in F if F[i, j, k])
        U = [mpmath.mpc(z) for z in u]
        V = [mpmath.mpc(z) for z in v]
        N = [[mpmath.mpc(z) for z in n] for n in (n1, n2)]
        for _ in range(iterations):
            vals = [t(U, U, U), t(U, U, V), t(U, V, V), t(V, V, V)]
            J = mpmath.matrix(4, 4)
            for col, n in enumerate(N):
                J[0, col] = 3 * t(U, U, n)
                J[1, col] = 2 * t(U, V, n)
                J[2, col] = t(V, V, n)
                J[1, col + 2] = t(U, U, n)
                J[2, col + 2] = 2 * t(U, V, n)
                J[3, col + 2] = 3 * t(V, V, n)
            try:
                d = mpmath.lu_solve(J, -mpmath.matrix(vals))
            except ZeroDivisionError:
                break
            U = [a + d[0] * p + d[1] * q for a, p, q in zip(U, *N)]
            V = [a + d[2] * p + d[3] * q for a, p, q in zip(V, *N)]
            if mpmath.norm(d) < mpmath.mpf(10) ** (-dps + 5):
                break
        return U, V


@dataclass
class Line:
    span: np.ndarray          # (2, 4), orthonormal rows
    pluecker: np.ndarray      # (6,), unit norm, phase-normalized
    is_real: bool
    residual: float = 0.0
    chart_point: np.ndarray | None = None
    singular: bool = False

    @classmethod
    def from_points(cls, u, v, **kw) -> "Line":
        M = np.array([u, v], dtype=complex).T
        Q, _ = np.linalg.qr(M)
        span = Q.T.copy()
        p = normalize_pluecker(pluecker_from_span(span[0], span[1]))
        return cls(span=span, pluecker=p, is_real=bool(np.max(np.abs(p.imag)) < REAL_TOL), **kw)

    def contains(self, point, tol: float = 1e-7) -> bool:
        return point_line_distance(point, self) < tol

    def planes(self) -> np.ndarray:
        """Two linear forms (rows) cutting out the line."""
        _, _, vh = np.linalg.svd(self.span)
        return vh[2:].conj()

    def to_json(self) -> dict:
        return {
            "pluecker": [[z.real, z.imag] for z in self.pluecker],
            "span": [[[z.real, z.imag] for z in row] for row in self.span],
            "real": self.is_real,
            "residual": self.residual,
        }


def point_line_distance(point, line: Line) -> float:
    p = np.asarray(point, dtype=complex)
    p = p / np.linalg.norm(p)
    U = line.span.T
    r = p - U @ (U.conj().T @ p)
    return float(np.linalg.norm(r))


def chart_system(g: CubicForm) -> list[MultiPoly]:
    """Coefficients of z^3, z^2w, zw^2, w^3 in g(az+bw, cz+dw, z, w).

    Variables (a, b, c, d).  A common zero is a line through (a:c:1:0)
    and (b:d:0:1).
    """
    nv = 6
    a, b, c, d, z, w = (MultiPoly.variable(i, nv) for i in range(nv))
    sub = g.to_poly().substitute([a * z + b * w, c * z + d * w, z, w])
    eqs = []
    for k in range(4):
        terms = {}
        for e, coef in sub.terms.items():
            if e[4] == 3 - k and e[5] == k:
                terms[e[:4]] = coef
        eqs.append(MultiPoly(terms, 4))
    return eqs


@dataclass
class LineSet27:
    lines: list
    surface: CubicForm
    seed: int
    transform: ProjTransform
    stats: dict
    flags: list = field(default_factory=list)
    _chart: list | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.lines)

    @property
    def complete(self) -> bool:
        return len(self.lines) == 27 and not self.flags

    @property
    def residuals(self) -> list:
        return [l.residual for l in self.lines]

    def require_complete(self):
        if len(self.lines) != 27:
            raise LinesError("fewer than 27 lines found",
                             {"count": len(self.lines), "stats": self.stats, "flags": self.flags})

    def hp_pluecker(self, i: int, dps: int = 50):
        """Pluecker vector of line i after Newton in mpmath on the exact surface."""
        line = self.lines[i]
        with mpmath.workdps(dps):
            u, v = polish_line_mp(self.surface, line.span[0], line.span[1], dps)
            p = [u[a] * v[b] - u[b] * v[a] for a, b in PLUECKER_PAIRS]
            nrm = mpmath.sqrt(sum(abs(z) ** 2 for z in p))
            p = [z / nrm for z in p]
            for z in p:
                if abs(z) > 1e-6:
                    ph = abs(z) / z
                    return [q * ph for q in p]
            return p

    def to_json(self) -> dict:
        return {
            "count": len(self.lines),
            "real_count": sum(l.is_real for l in self.lines),
            "lines": [l.to_json() for l in self.lines],
            "max_restriction_residual": max(self.residuals, default=0.0),
            "transform": self.transform.to_json(),
            "seed": self.seed,
            "stats": self.stats,
            "flags": list(self.flags),
        }


def find_lines(f: CubicForm, cfg: TrackerConfig | None = None, attempts: int = 3,
               strict: bool = False) -> LineSet27:
    """Lines on V(f) via a random coordinate change and one affine chart.

    Returns whatever converged; ``strict`` raises LinesError unless all 27
    were found.  Attempts beyond the first use derived seeds.
    """
    cfg = cfg or TrackerConfig()
    best = None
    for attempt in range(attempts):
        seed = cfg.seed + 1000003 * attempt
        result = _find_lines_once(f, cfg, seed)
        if best is None or (result.complete, len(result.lines)) > (best.complete, len(best.lines)):
            best = result
        if result.complete:
            break
    if len(best.lines) != 27 and "fewer than 27 lines found" not in best.flags:
        best.flags.append("fewer than 27 lines found")
    if strict:
        best.require_complete()
    return best


def _find_lines_once(f: CubicForm, cfg: TrackerConfig, seed: int) -> LineSet27:
    rng = np.random.default_rng(seed)
    A = ProjTransform.random_integer(rng, -CHART_RANGE, CHART_RANGE)
    g = act(f, A)
    eqs = chart_system(g)
    scfg = TrackerConfig(**{**cfg.__dict__, "seed": seed, "max_failures": 81})
    sols = total_degree_solve(PolySystem.from_polys(eqs), scfg)
    Af = np.array([[float(q) for q in row] for row in A.rows])
    F = cubic_tensor(f)
    lines = []
    flags = []
    rejected = 0
    for pt, sing in zip(sols.points, sols.singular):
        a, b, c, d = pt
        u = Af @ np.array([a, c, 1, 0])
        v = Af @ np.array([b, d, 0, 1])
        u, v, cond = polish_line(F, u, v)
        line = Line.from_points(u, v, chart_point=np.array(pt))
        line.residual = restriction_residual(f, line.span[0], line.span[1])
        if line.residual > RESTRICTION_TOL:
            # chart solutions near the component at infinity do not polish
            # onto the surface; they are counted, not reported
            rejected += 1
            continue
        line.singular = bool(sing and cond > LINE_SINGULAR_COND)
        lines.append(line)
    before = len(lines)
    lines = _dedupe_lines(lines)
    lines.sort(key=lambda l: point_sort_key(l.pluecker))
    stats = dict(sols.stats)
    stats["rejected"] = rejected
    stats["merged"] = before - len(lines)
    if any(l.singular for l in lines):
        flags.append("singular chart solution (multiple line)")
    if stats.get("failed"):
        flags.append(f"{stats['failed']} paths failed")
    return LineSet27(lines=lines, surface=f, seed=seed, transform=A, stats=stats,
                     flags=flags, _chart=eqs)


def _dedupe_lines(lines):
    out = []
    for l in lines:
        if all(np.linalg.norm(l.pluecker - o.pluecker) > 1e-6 for o in out):
            out.append(l)
    return out


# ---------------------------------------------------------------------------
# incidence

def pairing_status(l1: Line, l2: Line, tol: float = INCIDENCE_TOL) -> str:
    """'meet', 'skew', or 'ambiguous' (|pairing| within [tol, 10 tol))."""
    val = abs(pairing(l1.pluecker, l2.pluecker))
    if val < tol:
        return "meet"
    if val < 10 * tol:
        return "ambiguous"
    return "skew"


def meets(l1: Line, l2: Line, tol: float = INCIDENCE_TOL) -> bool:
    """True iff the lines intersect; raises AmbiguousIncidence near the threshold."""
    s = pairing_status(l1, l2, tol)
    if s == "ambiguous":
        raise AmbiguousIncidence("pairing within 10x tolerance of zero",
                                 {"pairing": abs(pairing(l1.pluecker, l2.pluecker))})
    return s == "meet"


@dataclass
class IncidenceGraph:
    adjacency: np.ndarray     # (27, 27) bool
    rechecked: list = field(default_factory=list)

    @property
    def degrees(self) -> list[int]:
        return [int(d) for d in self.adjacency.sum(axis=1)]

    @property
    def edges(self) -> list[tuple[int, int]]:
        n = len(self.adjacency)
        return [(i, j) for i in range(n) for j in range(i + 1, n) if self.adjacency[i, j]]

    def neighbors(self, i: int) -> set[int]:
        return set(np.nonzero(self.adjacency[i])[0].tolist())

    def is_regular(self, k: int = 10) -> bool:
        return all(d == k for d in self.degrees)

    def to_json(self) -> dict:
        return {"edges": [list(e) for e in self.edges], "degrees": self.degrees,
                "rechecked": [list(p) for p in self.rechecked]}


def incidence_graph(L: LineSet27, tol: float = INCIDENCE_TOL,
                    expect_regular: bool = True) -> IncidenceGraph:
    L.require_complete()
    n = len(L.lines)
    adj = np.zeros((n, n), dtype=bool)
    rechecked = []
    for i, j in combinations(range(n), 2):
        s = pairing_status(L.lines[i], L.lines[j], tol)
        if s == "ambiguous":
            rechecked.append((i, j))
            with mpmath.workdps(50):
                val = abs(pairing(L.hp_pluecker(i), L.hp_pluecker(j)))
            if val < tol:
                s = "meet"
            elif val >= 10 * tol:
                s = "skew"
            else:
                raise AmbiguousIncidence(f"lines {i} and {j}: pairing {float(val):.3g} ambiguous "
                                         "after high-precision recheck")
        adj[i, j] = adj[j, i] = s == "meet"
    g = IncidenceGraph(adjacency=adj, rechecked=rechecked)
    if expect_regular and not g.is_regular(10):
        raise LinesError("incidence graph is not 10-regular (suspect numerics)",
                         {"degrees": g.degrees})
    return g


# ---------------------------------------------------------------------------
# tritangent planes, double-sixes, Eckardt points

@dataclass
class TritangentPlane:
    plane: np.ndarray                  # linear form, unit norm, phase-normalized
    line_triple: tuple[int, int, int]
    coplanarity: float = 0.0

    def to_json(self) -> dict:
        return {"plane": [[z.real, z.imag] for z in self.plane],
                "lines": list(self.line_triple), "coplanarity_residual": self.coplanarity}


def fit_plane(points: np.ndarray):
    """Linear form n with n . p = 0 for all rows p; returns (n, relative misfit)."""
    P = np.asarray(points, dtype=complex)
    P = P / np.linalg.norm(P, axis=1, keepdims=True)
    _, s, vh = np.linalg.svd(P)
    n = vh[-1].conj()
    return normalize_pluecker(n), float(s[-1] / s[0])


def tritangent_planes(L: LineSet27, graph: IncidenceGraph, tol: float = 1e-7) -> list:
    planes = []
    bad = []
    n = len(L.lines)
    for i, j, k in combinations(range(n), 3):
        if graph.adjacency[i, j] and graph.adjacency[i, k] and graph.adjacency[j, k]:
            pts = np.vstack([L.lines[i].span, L.lines[j].span, L.lines[k].span])
            plane, mis = fit_plane(pts)
            if mis > tol:
                bad.append(((i, j, k), mis))
                continue
            planes.append(TritangentPlane(plane=plane, line_triple=(i, j, k), coplanarity=mis))
    if bad:
        raise LinesError("non-coplanar triangle in incidence graph",
                         {"triangles": [list(t) for t, _ in bad], "misfit": [m for _, m in bad]})
    return planes


@dataclass(frozen=True)
class DoubleSix:
    first: tuple
    second: tuple

    def to_json(self) -> list:
        return [list(self.first), list(self.second)]


def _skew_sixes(adj: np.ndarray) -> list[tuple[int, ...]]:
    n = len(adj)
    out = []

    def grow(chosen, candidates):
        if len(chosen) == 6:
            out.append(tuple(chosen))
            return
        for idx, c in enumerate(candidates):
            grow(chosen + [c], [d for d in candidates[idx + 1:] if not adj[c, d]])

    grow([], list(range(n)))
    return out


def is_double_six(adj: np.ndarray, ds: DoubleSix) -> bool:
    a, b = ds.first, ds.second
    if len(set(a) | set(b)) != 12:
        return False
    for s in (a, b):
        if any(adj[p, q] for p, q in combinations(s, 2)):
            return False
    return all(bool(adj[a[i], b[j]]) == (i != j) for i in range(6) for j in range(6))


def double_sixes(graph: IncidenceGraph, expect: int | None = 36) -> list[DoubleSix]:
    """All double-sixes, each listed once with the smaller-indexed sixer first."""
    adj = graph.adjacency
    n = len(adj)
    found = {}
    for six in _skew_sixes(adj):
        partner = []
        for i, a in enumerate(six):
            others = [s for s in six if s != a]
            cands = [m for m in range(n) if m not in six and not adj[a, m]
                     and all(adj[o, m] for o in others)]
            if len(cands) != 1:
                break
            partner.append(cands[0])
        else:
            ds = DoubleSix(tuple(six), tuple(partner))
            if not is_double_six(adj, ds):
                continue
            key = frozenset([frozenset(six), frozenset(partner)])
            if key not in found:
                if min(partner) < min(six):
                    order = sorted(range(6), key=lambda i: partner[i])
                    ds = DoubleSix(tuple(partner[i] for i in order), tuple(six[i] for i in order))
                found[key] = ds
    result = sorted(found.values(), key=lambda d: (d.first, d.second))
    if expect is not None and len(result) != expect:
        raise LinesError(f"found {len(result)} double-sixes, expected {expect}",
                         {"count": len(result)})
    return result


def line_intersection(l1: Line, l2: Line) -> np.ndarray:
    M = np.vstack([l1.span, l2.span]).T   # 4 x 4, rank 3 when the lines meet
    _, _, vh = np.linalg.svd(M)
    c = vh[-1].conj()
    p = c[0] * l1.span[0] + c[1] * l1.span[1]
    return p / np.linalg.norm(p)


@dataclass
class EckardtPoint:
    point: np.ndarray
    plane_index: int
    lines: tuple
    distance: float
    ambiguous: bool = False

    def to_json(self) -> dict:
        return {"point": [[z.real, z.imag] for z in self.point], "plane": self.plane_index,
                "lines": list(self.lines), "concurrency_residual": self.distance,
                "ambiguous": self.ambiguous}


def _concurrency(l1: Line, l2: Line, l3: Line):
    p = line_intersection(l1, l2)
    return p, point_line_distance(p, l3)


def _concurrency_hp(L: LineSet27, i: int, j: int, k: int) -> float:
    """Concurrency residual of lines i, j, k from mpmath-refined Pluecker data."""
    with mpmath.workdps(50):
        P1, P2, P3 = (L.hp_pluecker(m) for m in (i, j, k))
        M1 = mpmath.matrix(_pluecker_matrix(P1))
        best = None
        for row in _dual_pluecker_matrix(P2):
            cand = M1 * mpmath.matrix(row)
            if best is None or mpmath.norm(cand) > mpmath.norm(best):
                best = cand
        pt = best / mpmath.norm(best)
        D3 = mpmath.matrix(_dual_pluecker_matrix(P3))
        return float(mpmath.norm(D3 * pt) / mpmath.mnorm(D3, "f"))


def _pluecker_matrix(p):
    """P[i][j] = p_ij; its rows span the line."""
    p12, p13, p14, p23, p24, p34 = p
    z = 0 * p12
    return [[z, p12, p13, p14], [-p12, z, p23, p24], [-p13, -p23, z, p34], [-p14, -p24, -p34, z]]


def _dual_pluecker_matrix(p):
    """Rows are planes through the line: the matrix annihilates its points."""
    p12, p13, p14, p23, p24, p34 = p
    return _pluecker_matrix((p34, -p24, p23, p14, -p13, p12))


def eckardt_points(L: LineSet27, planes: list, tol: float = 1e-7) -> list[EckardtPoint]:
    out = []
    for idx, pl in enumerate(planes):
        i, j, k = pl.line_triple
        p, d = _concurrency(L.lines[i], L.lines[j], L.lines[k])
        ambiguous = False
        if tol <= d < 10 * tol:
            d = _concurrency_hp(L, i, j, k)
            ambiguous = tol <= d < 10 * tol
        if d < tol or ambiguous:
            out.append(EckardtPoint(point=normalize_pluecker(p), plane_index=idx,
                                    lines=(i, j, k), distance=d, ambiguous=ambiguous))
    return out


def real_line_census(L: LineSet27, tol: float = REAL_TOL) -> tuple[int, int]:
    """(number of real lines, number of complex-conjugate pairs)."""
    L.require_complete()
    real = []
    for i, l in enumerate(L.lines):
        im = float(np.max(np.abs(l.pluecker.imag)))
        if tol <= im < 10 * tol:
            with mpmath.workdps(50):
                im = max(float(abs(mpmath.im(z))) for z in L.hp_pluecker(i))
            if tol <= im < 10 * tol:
                raise LinesError("phase ambiguity in reality test", {"line": i, "imag": im})
        real.append(im < tol)
    unmatched = [i for i in range(len(L.lines)) if not real[i]]
    pairs = 0
    used = set()
    for i in unmatched:
        if i in used:
            continue
        conj = normalize_pluecker(np.conj(L.lines[i].pluecker))
        match = [j for j in unmatched if j not in used and j != i
                 and np.linalg.norm(conj - L.lines[j].pluecker) < 1e-6]
        if len(match) != 1:
            raise LinesError("line set not closed under conjugation", {"line": i})
        used.update({i, match[0]})
        pairs += 1
    r = sum(real)
    if r + 2 * pairs != len(L.lines):
        raise LinesError("census does not add up", {"real": r, "pairs": pairs})
    return r, pairs
