"""Regular subdivisions of 3*Delta_3 induced by coefficient valuations.

Heights live on the 20 lattice points (i, j, k) of 3*Delta_3, where (i, j, k)
are the exponents of x, y, z.  The lower hull is found exactly: for every
affinely independent 4-subset S we know integer weights expressing each lattice
point in barycentric coordinates of S, so the defect of every point above the
affine interpolant of S is an integer linear function of the heights.  A
lexicographic secondary perturbation refines the subdivision to a
triangulation whose simplices give exact normalized volumes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .algebra import MONOMIALS, CubicForm, ProjTransform, act

INF = math.inf
LATTICE_POINTS = tuple(e[:3] for e in MONOMIALS)
TOTAL_VOLUME = 27


class TropicalError(ValueError):
    pass


# ---------------------------------------------------------------------------
# valuations

@dataclass(frozen=True)
class ValuationVector:
    values: tuple                   # Fraction or math.inf, coefficient order
    prime: int | None = None        # None: supplied explicitly

    def __post_init__(self):
        vals = tuple(INF if v == INF else Fraction(v) for v in self.values)
        if len(vals) != 20:
            raise ValueError("need 20 valuations")
        if all(v == INF for v in vals):
            raise ValueError("all valuations infinite")
        object.__setattr__(self, "values", vals)

    @property
    def finite(self) -> list[int]:
        return [i for i, v in enumerate(self.values) if v != INF]

    def to_json(self) -> dict:
        return {"values": ["inf" if v == INF else str(v) for v in self.values],
                "prime": self.prime}

    @classmethod
    def parse(cls, entries: Sequence[str]) -> "ValuationVector":
        return cls(tuple(INF if str(e).strip().lower() in ("inf", "+inf", "oo")
                         else Fraction(str(e).strip()) for e in entries))


def padic_valuation(c: Fraction, p: int) -> int | float:
    c = Fraction(c)
    if c == 0:
        return INF
    v = 0
    n, d = c.numerator, c.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, math.isqrt(p) + 1))


def valuation_vector(f: CubicForm, p: int = 2) -> ValuationVector:
    if not _is_prime(p):
        raise ValueError(f"{p} is not prime")
    return ValuationVector(tuple(padic_valuation(c, p) for c in f.coeffs), p)


# ---------------------------------------------------------------------------
# geometry of the 20 lattice points

def _det4(rows) -> int:
    """Exact determinant of a small integer matrix (cofactor expansion)."""
    def det(a):
        if len(a) == 1:
            return a[0][0]
        return sum((-1) ** j * a[0][j] * det([r[:j] + r[j + 1:] for r in a[1:]])
                   for j in range(len(a)) if a[0][j])
    return det([list(r) for r in rows])


@lru_cache(maxsize=1)
def _simplex_tables():
    """For each nondegenerate 4-subset S: |det|, and the integer matrix B_S with
    (B_S h)_q = |det| * (h_q - interpolant of h on S evaluated at q)."""
    pts = np.array([list(p) + [1] for p in LATTICE_POINTS], dtype=float)
    allS = np.array(list(combinations(range(20), 4)))
    M = pts[allS]                                        # (n, 4, 4), rows = points
    D = np.rint(np.linalg.det(M)).astype(np.int64)
    keep = D != 0
    allS, M, D = allS[keep], M[keep], D[keep]
    # entries are tiny, so D * inverse rounds to the exact adjugate
    adjT = np.rint(np.linalg.inv(np.transpose(M, (0, 2, 1))) * D[:, None, None]).astype(np.int64)
    lam = np.einsum("nkc,qc->nqk", adjT, pts.astype(np.int64))    # D * barycentric coords
    B = np.zeros((len(allS), 20, 20), dtype=np.int64)
    B[:, np.arange(20), np.arange(20)] = np.abs(D)[:, None]
    sign = np.sign(D)[:, None, None]
    rows = np.arange(len(allS))[:, None, None]
    qs = np.arange(20)[None, :, None]
    np.add.at(B, (rows, qs, allS[:, None, :]), -sign * lam)
    mask = np.zeros((len(allS), 20), dtype=bool)
    mask[np.arange(len(allS))[:, None], allS] = True
    subsets = [tuple(int(i) for i in S) for S in allS]
    return subsets, np.abs(D), B, mask


def normalized_volume(points: Sequence[Sequence[int]]) -> int:
    """6 * Euclidean volume of a lattice tetrahedron."""
    return abs(_det4([list(p) + [1] for p in points]))


def _affine_rank(indices) -> int:
    if not indices:
        return -1
    P = np.array([LATTICE_POINTS[i] for i in indices], dtype=float)
    return int(np.linalg.matrix_rank(P - P[0])) if len(indices) > 1 else 0


# ---------------------------------------------------------------------------
# subdivision

@dataclass
class RegularSubdivision:
    valuation: ValuationVector
    cells: list                     # sorted tuples of lattice-point indices
    volumes: list                   # normalized volume of each cell
    simplices: list                 # refining triangulation: (cell index, 4-tuple)
    perturbation_seed: int = 0
    flags: list = field(default_factory=list)

    @property
    def total_volume(self) -> int:
        return int(sum(self.volumes))

    @property
    def vertices_used(self) -> set:
        return set().union(*map(set, self.cells)) if self.cells else set()

    def to_json(self) -> dict:
        return {
            "valuation": self.valuation.to_json(),
            "cells": [list(c) for c in self.cells],
            "volumes": list(self.volumes),
            "total_volume": self.total_volume,
            "lattice_points": [list(p) for p in LATTICE_POINTS],
            "perturbation_seed": self.perturbation_seed,
            "flags": list(self.flags),
        }


def _integer_heights(values) -> tuple[np.ndarray, np.ndarray]:
    finite = np.array([v != INF for v in values])
    fin = [v for v in values if v != INF]
    den = math.lcm(*(Fraction(v).denominator for v in fin)) if fin else 1
    ints = [int(Fraction(v) * den) if v != INF else 0 for v in values]
    big = max((abs(h) for h in ints), default=0)
    if big * 20 * int(np.abs(_simplex_tables()[2]).max()) < 2 ** 62:
        return np.array(ints, dtype=np.int64), finite
    return np.array(ints, dtype=object), finite


def _lower_simplices(h, r, finite):
    """Indices of 4-subsets that are lower facets for the lexicographic lift (h, r)."""
    _, _, defect_maps, subset_mask = _simplex_tables()
    usable = ~(subset_mask & ~finite[None, :]).any(axis=1)
    maps = defect_maps[usable]
    dh = maps @ h if h.dtype != object else np.array([m.astype(object) @ h for m in maps])
    dr = maps @ r
    others = finite[None, :] & ~subset_mask[usable]
    ok = np.where(others, (dh > 0) | ((dh == 0) & (dr > 0)), True).all(axis=1)
    tie = (others & (dh == 0) & (dr == 0)).any(axis=1)
    idx = np.nonzero(usable)[0]
    return idx[ok], dh[ok], bool(tie[ok].any())


def regular_subdivision(v: ValuationVector, seed: int = 0, max_reseeds: int = 20) -> RegularSubdivision:
    """Lower hull of the lifted lattice points, exactly, with normalized cell volumes."""
    finite_idx = v.finite
    if _affine_rank(finite_idx) < 3:
        raise TropicalError("lift not full-dimensional")
    h, finite = _integer_heights(v.values)
    rng = np.random.default_rng(seed)
    for attempt in range(max_reseeds):
        r = rng.integers(-10 ** 6, 10 ** 6, size=20).astype(np.int64)
        chosen, dh, tie = _lower_simplices(h, r, finite)
        if tie:
            continue
        subsets, vols = _simplex_tables()[:2]
        cells: dict[tuple, list] = {}
        for n, row in zip(chosen, dh):
            cell = tuple(int(q) for q in np.nonzero(finite & (row == 0))[0])
            cells.setdefault(cell, []).append((subsets[n], int(vols[n])))
        ordered = sorted(cells)
        volumes = [sum(v for _, v in cells[c]) for c in ordered]
        simplices = [(k, S) for k, c in enumerate(ordered) for S, _ in sorted(cells[c])]
        sub = RegularSubdivision(valuation=v, cells=ordered, volumes=volumes,
                                 simplices=simplices, perturbation_seed=seed + attempt)
        corners = all(v.values[MONOMIALS.index(e)] != INF
                      for e in ((3, 0, 0, 0), (0, 3, 0, 0), (0, 0, 3, 0), (0, 0, 0, 3)))
        if corners and sub.total_volume != TOTAL_VOLUME:
            raise TropicalError(f"volume check failed: {sub.total_volume} != 27")
        if not corners:
            sub.flags.append("Newton polytope smaller than 3*Delta_3 (zero corner coefficient)")
        return sub
    raise TropicalError("perturbation ties persisted; refinement not generic")


def verify_lower_hull(sub: RegularSubdivision) -> bool:
    """Re-derive, in Fractions, an affine functional per cell: equal to the lift on
    the cell and strictly below it at every other finite point."""
    vals = sub.valuation.values
    finite = [i for i, x in enumerate(vals) if x != INF]
    for cell in sub.cells:
        base = None
        for S in combinations(cell, 4):
            if normalized_volume([LATTICE_POINTS[s] for s in S]):
                base = S
                break
        if base is None:
            return False
        # solve a.p + b = h on the four base points
        A = [[Fraction(c) for c in LATTICE_POINTS[s]] + [Fraction(1), Fraction(vals[s])]
             for s in base]
        for col in range(4):
            piv = next(rw for rw in range(col, 4) if A[rw][col] != 0)
            A[col], A[piv] = A[piv], A[col]
            A[col] = [x / A[col][col] for x in A[col]]
            for rw in range(4):
                if rw != col and A[rw][col] != 0:
                    k = A[rw][col]
                    A[rw] = [x - k * y for x, y in zip(A[rw], A[col])]
        coef = [A[k][4] for k in range(4)]
        for q in finite:
            phi = sum(c * x for c, x in zip(coef[:3], LATTICE_POINTS[q])) + coef[3]
            d = Fraction(vals[q]) - phi
            if (q in cell and d != 0) or (q not in cell and d <= 0):
                return False
    return True


@dataclass
class SmoothnessCertificate:
    smooth: bool
    offending: list                 # (cell index, reason)
    cells: int
    vertices_used: int
    counts_agree: bool

    def to_json(self) -> dict:
        return {"smooth": self.smooth, "offending": [list(o) for o in self.offending],
                "cells": self.cells, "vertices_used": self.vertices_used,
                "characterizations_agree": self.counts_agree}


def is_tropically_smooth(sub: RegularSubdivision) -> SmoothnessCertificate:
    """Unimodular triangulation test, cross-checked against (27 cells, 20 vertices)."""
    offending = []
    for k, (cell, vol) in enumerate(zip(sub.cells, sub.volumes)):
        if len(cell) != 4:
            offending.append((k, f"not a simplex ({len(cell)} points)"))
        elif vol != 1:
            offending.append((k, f"volume {vol}"))
    smooth = not offending
    by_count = len(sub.cells) == 27 and len(sub.vertices_used) == 20
    return SmoothnessCertificate(smooth=smooth, offending=offending, cells=len(sub.cells),
                                 vertices_used=len(sub.vertices_used),
                                 counts_agree=(smooth == by_count))


# ---------------------------------------------------------------------------
# heuristic search over coordinate changes

def score(sub: RegularSubdivision) -> tuple[int, int]:
    """Larger is better: more cells, then smaller largest cell."""
    return (len(sub.cells), -max(sub.volumes))


@dataclass
class SearchResult:
    valuation: ValuationVector
    transform: ProjTransform
    score: tuple
    smooth: bool
    candidate_index: int
    history: list                   # (index, score) per candidate tried

    def to_json(self) -> dict:
        return {"valuation": self.valuation.to_json(), "transform": self.transform.to_json(),
                "score": list(self.score), "smooth": self.smooth,
                "candidate": self.candidate_index,
                "history": [[i, list(s)] for i, s in self.history]}


def _evaluate_candidate(f: CubicForm, A: ProjTransform, p: int, seed: int):
    val = valuation_vector(act(f, A), p)
    try:
        sub = regular_subdivision(val, seed)
    except TropicalError:
        return None
    return score(sub), val, is_tropically_smooth(sub).smooth


def smoothness_search(f: CubicForm, p: int = 2, budget: int = 10, seed: int = 0,
                      low: int = -2, high: int = 2, threads: int = 1) -> SearchResult:
    """Best-effort random search over integer coordinate changes (identity first).

    Candidates are drawn up front and evaluated in batches of ``threads``; the
    winner is the first best score in candidate order, so the result does not
    depend on the thread count.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    transforms = [ProjTransform.identity()]
    transforms += [ProjTransform.random_integer(rng, low, high) for _ in range(budget - 1)]
    threads = max(1, int(threads))
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    best = None
    history = []
    try:
        for start in range(0, budget, threads):
            batch = transforms[start:start + threads]
            if pool is None:
                outcomes = [_evaluate_candidate(f, A, p, seed) for A in batch]
            else:
                outcomes = list(pool.map(lambda A: _evaluate_candidate(f, A, p, seed), batch))
            for k, (A, out) in enumerate(zip(batch, outcomes), start):
                if out is None:
                    history.append((k, (0, 0)))
                    continue
                sc, val, smooth = out
                history.append((k, sc))
                if best is None or sc > best[0]:
                    best = (sc, val, A, k, smooth)
                if best[4]:
                    break
            if best is not None and best[4]:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    if best is None:
        raise TropicalError("no candidate produced a full-dimensional lift")
    sc, val, A, k, smooth = best
    return SearchResult(valuation=val, transform=A, score=sc, smooth=smooth,
                        candidate_index=k, history=history)
