"""Exact resultant of four quaternary quadrics and the cubic-surface discriminant.

The resultant is computed as Macaulay's quotient det(M) / det(M') in the
critical degree 5, with exact integer determinants (fraction-free Gaussian
elimination).  The discriminant of a cubic f is the resultant of its four
partial derivatives, normalized so that Res(x^2, y^2, z^2, w^2) = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from math import lcm
from typing import Sequence

import numpy as np

from .algebra import CubicForm, MultiPoly, ProjTransform, gradient, substitute_linear

DEGREE = 5
RETRIES = 3


class ResultantError(ArithmeticError):
    pass


def monomials(degree: int, nvars: int = 4) -> list[tuple[int, ...]]:
    """All exponent vectors of the given total degree, graded-lex descending."""
    out = []
    for combo in combinations_with_replacement(range(nvars), degree):
        e = [0] * nvars
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return sorted(set(out), reverse=True)


MONOMIALS_5 = monomials(DEGREE)
_COLUMN = {m: k for k, m in enumerate(MONOMIALS_5)}


def bareiss_det(matrix: Sequence[Sequence[int]]) -> int:
    """Exact determinant of an integer matrix by fraction-free elimination."""
    a = [list(map(int, row)) for row in matrix]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        akk = a[k][k]
        rowk = a[k]
        for i in range(k + 1, n):
            rowi = a[i]
            aik = rowi[k]
            for j in range(k + 1, n):
                rowi[j] = (akk * rowi[j] - aik * rowk[j]) // prev
            rowi[k] = 0
        prev = akk
    return sign * a[n - 1][n - 1]


def det_rational(matrix: Sequence[Sequence[Fraction]]) -> Fraction:
    """Exact determinant of a rational matrix: clear row denominators, then Bareiss."""
    scale = Fraction(1)
    rows = []
    for row in matrix:
        den = lcm(*(Fraction(a).denominator for a in row)) if row else 1
        rows.append([int(Fraction(a) * den) for a in row])
        scale /= den
    return bareiss_det(rows) * scale


def _reduced(m: tuple[int, ...]) -> bool:
    """Macaulay-reduced: exactly one variable appears to power >= 2."""
    return sum(1 for e in m if e >= 2) <= 1


@dataclass
class MacaulayData:
    matrix: list[list[Fraction]]
    minor_rows: list[int]
    row_owner: list[int]           # index of the quadric used for each row
    numerator: Fraction
    denominator: Fraction

    @property
    def resultant(self) -> Fraction | None:
        if self.denominator == 0:
            return None
        return self.numerator / self.denominator


def macaulay_data(quadrics: Sequence[MultiPoly]) -> MacaulayData:
    if len(quadrics) != 4 or any(q.nvars != 4 for q in quadrics):
        raise ValueError("need four quadrics in x, y, z, w")
    for q in quadrics:
        if not q.is_zero() and q.homogeneous_degree != 2:
            raise ValueError("quadrics must be homogeneous of degree 2")
    matrix, owner = [], []
    for m in MONOMIALS_5:
        i = next(k for k in range(4) if m[k] >= 2)
        shift = list(m)
        shift[i] -= 2
        row = [Fraction(0)] * len(MONOMIALS_5)
        for e, c in quadrics[i].terms.items():
            row[_COLUMN[tuple(a + b for a, b in zip(e, shift))]] = Fraction(c)
        matrix.append(row)
        owner.append(i)
    minor = [k for k, m in enumerate(MONOMIALS_5) if not _reduced(m)]
    sub = [[matrix[r][c] for c in minor] for r in minor]
    return MacaulayData(matrix=matrix, minor_rows=minor, row_owner=owner,
                        numerator=det_rational(matrix), denominator=det_rational(sub))


def _random_unimodular(rng) -> ProjTransform:
    """Product of elementary integer shears and a signed permutation (det +-1)."""
    A = np.eye(4, dtype=object)
    for _ in range(6):
        i, j = rng.choice(4, size=2, replace=False)
        E = np.eye(4, dtype=object)
        E[i, j] = int(rng.integers(-2, 3))
        A = A.dot(E)
    A = A[rng.permutation(4)]
    return ProjTransform(tuple(tuple(int(a) for a in row) for row in A))


def _transform(quadrics, A: ProjTransform):
    return [substitute_linear(q, A.rows) for q in quadrics]


def _gcp_resultant(quadrics: Sequence[MultiPoly]) -> Fraction:
    """Resultant via the generalized characteristic polynomial.

    C(e) = Res(F_i + e x_i^2) is a polynomial of degree 32 in e whose value at
    e = 0 is the resultant.  Its values at nonzero integers come from Macaulay
    quotients with a nonvanishing minor; exact Lagrange interpolation recovers C(0).
    """
    xs, ys = [], []
    e = 0
    while len(xs) < 33:
        e += 1
        perturbed = []
        for i, q in enumerate(quadrics):
            sq = [0] * 4
            sq[i] = 2
            perturbed.append(q + MultiPoly({tuple(sq): Fraction(e)}))
        r = macaulay_data(perturbed).resultant
        if r is not None:
            xs.append(Fraction(e))
            ys.append(r)
        if e > 200:
            raise ResultantError("denominator identically zero after retries")
    total = Fraction(0)
    for k, (xk, yk) in enumerate(zip(xs, ys)):
        w = Fraction(1)
        for j, xj in enumerate(xs):
            if j != k:
                w *= (0 - xj) / (xk - xj)
        total += yk * w
    return total


@dataclass
class ResultantInfo:
    value: Fraction
    method: str                    # "macaulay", "macaulay-retry", "gcp"
    attempts: int = 1
    transforms: list = field(default_factory=list)


def macaulay_resultant_info(quadrics: Sequence[MultiPoly], seed: int = 0) -> ResultantInfo:
    data = macaulay_data(quadrics)
    if data.denominator != 0:
        return ResultantInfo(data.numerator / data.denominator, "macaulay")
    rng = np.random.default_rng(seed)
    tried = []
    for attempt in range(RETRIES):
        A = _random_unimodular(rng)
        tried.append(A.to_json())
        # Res(F o A) = det(A)^16 Res(F) and det(A) = +-1
        r = macaulay_data(_transform(quadrics, A)).resultant
        if r is not None:
            return ResultantInfo(r, "macaulay-retry", attempt + 2, tried)
    return ResultantInfo(_gcp_resultant(quadrics), "gcp", RETRIES + 1, tried)


def macaulay_resultant(quadrics: Sequence[MultiPoly], seed: int = 0) -> Fraction:
    """Exact resultant of four quadrics; zero iff they share a projective zero."""
    return macaulay_resultant_info(quadrics, seed).value


@dataclass
class DiscriminantValue:
    value: Fraction
    method: str

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    def to_json(self) -> dict:
        return {"value": str(self.value), "singular": self.is_zero, "exact": True,
                "method": self.method}


# regression constant: the discriminant of x^3+y^3+z^3+w^3 is Res(3x^2,...,3w^2) = 3^32
FERMAT_DISCRIMINANT = Fraction(3) ** 32


def discriminant(f: CubicForm, seed: int = 0) -> DiscriminantValue:
    """Res(df/dx, df/dy, df/dz, df/dw): degree 32 in the coefficients, exact."""
    info = macaulay_resultant_info(gradient(f), seed)
    return DiscriminantValue(info.value, info.method)


@dataclass
class SingularityReport:
    singular: bool
    discriminant: DiscriminantValue
    witnesses: list = field(default_factory=list)
    witness_residuals: list = field(default_factory=list)
    isolated: bool | None = None
    note: str = ""

    def to_json(self) -> dict:
        return {
            "singular": self.singular,
            "discriminant": str(self.discriminant.value),
            "witnesses": [[[z.real, z.imag] for z in p] for p in self.witnesses],
            "witness_residuals": list(self.witness_residuals),
            "isolated": self.isolated,
            "note": self.note,
        }


def is_singular(f: CubicForm, cfg=None, seed: int = 0) -> SingularityReport:
    """Exact zero test, plus numeric singular points when the test says singular."""
    from .solver import PolySystem, SolverError, TrackerConfig, solve_overdetermined

    disc = discriminant(f, seed)
    if not disc.is_zero:
        return SingularityReport(False, disc)
    grad = [g for g in gradient(f) if not g.is_zero()]
    if len(grad) < 3:
        return SingularityReport(True, disc, [], [], False, "singular, witness not isolated")
    cfg = cfg or TrackerConfig(seed=seed, max_failures=8)
    try:
        sols = solve_overdetermined(PolySystem.from_polys(grad), cfg)
    except SolverError as exc:
        return SingularityReport(True, disc, [], [], False,
                                 f"singular, witness not isolated ({exc})")
    isolated = bool(sols.points) and not any(sols.singular)
    note = "" if isolated else "singular, witness not isolated"
    return SingularityReport(True, disc, list(sols.points), list(sols.residuals), isolated, note)
