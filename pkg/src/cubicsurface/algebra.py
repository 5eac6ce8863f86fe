"""Exact polynomial arithmetic and the 20-coefficient model of a cubic surface.

Coefficients are :class:`fractions.Fraction` throughout.  ``MultiPoly`` itself
is agnostic about the coefficient type, so the same substitution code is
reused with complex floats by the numeric modules.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Iterable, Sequence

VARS = ("x", "y", "z", "w")

# c1..c20, in the order x^3, y^3, z^3, w^3, x^2y, x^2z, x^2w, xy^2, y^2z, y^2w,
# xz^2, yz^2, z^2w, xw^2, yw^2, zw^2, xyz, xyw, xzw, yzw.
MONOMIALS: tuple[tuple[int, int, int, int], ...] = (
    (3, 0, 0, 0), (0, 3, 0, 0), (0, 0, 3, 0), (0, 0, 0, 3),
    (2, 1, 0, 0), (2, 0, 1, 0), (2, 0, 0, 1), (1, 2, 0, 0),
    (0, 2, 1, 0), (0, 2, 0, 1), (1, 0, 2, 0), (0, 1, 2, 0),
    (0, 0, 2, 1), (1, 0, 0, 2), (0, 1, 0, 2), (0, 0, 1, 2),
    (1, 1, 1, 0), (1, 1, 0, 1), (1, 0, 1, 1), (0, 1, 1, 1),
)
MONOMIAL_INDEX = {m: i for i, m in enumerate(MONOMIALS)}


class ParseError(ValueError):
    """Malformed polynomial text; ``position`` is the 0-based character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


def _sign(perm: Sequence[int]) -> int:
    s = 1
    p = list(perm)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            s = -s
    return s


def _format_coeff(c) -> str:
    if isinstance(c, Fraction):
        return str(c)
    return repr(c)


class MultiPoly:
    """Sparse polynomial: a map from exponent tuples to nonzero coefficients."""

    __slots__ = ("terms", "nvars")

    def __init__(self, terms=None, nvars: int = 4):
        self.nvars = nvars
        clean = {}
        for e, c in (terms or {}).items():
            e = tuple(e)
            if len(e) != nvars:
                raise ValueError(f"exponent {e} does not have {nvars} entries")
            if c != 0:
                clean[e] = c
        self.terms = clean

    @classmethod
    def constant(cls, c, nvars: int = 4) -> "MultiPoly":
        return cls({(0,) * nvars: c}, nvars)

    @classmethod
    def variable(cls, i: int, nvars: int = 4) -> "MultiPoly":
        e = [0] * nvars
        e[i] = 1
        return cls({tuple(e): Fraction(1)}, nvars)

    @classmethod
    def linear(cls, coeffs: Sequence, nvars: int | None = None) -> "MultiPoly":
        n = len(coeffs) if nvars is None else nvars
        terms = {}
        for i, c in enumerate(coeffs):
            e = [0] * n
            e[i] = 1
            terms[tuple(e)] = c
        return cls(terms, n)

    # -- structure -------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def degrees(self) -> set[int]:
        return {sum(e) for e in self.terms}

    @property
    def degree(self) -> int:
        return max(self.degrees(), default=-1)

    @property
    def homogeneous_degree(self) -> int | None:
        """The common total degree of all terms, or None if mixed (or zero)."""
        ds = self.degrees()
        return ds.pop() if len(ds) == 1 else None

    def coefficient(self, exponent: Iterable[int]):
        return self.terms.get(tuple(exponent), 0)

    def sorted_terms(self):
        # graded lex, x > y > z > w
        return sorted(self.terms.items(), key=lambda t: (sum(t[0]), t[0]), reverse=True)

    # -- arithmetic ------------------------------------------------------
    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return MultiPoly.constant(other, self.nvars)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return MultiPoly(out, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly({e: -c for e, c in self.terms.items()}, self.nvars)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            return MultiPoly({e: c * other for e, c in self.terms.items()}, self.nvars)
        other = self._coerce(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return MultiPoly(out, self.nvars)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = MultiPoly.constant(Fraction(1), self.nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.nvars == other.nvars and self.terms == other.terms
        return self == MultiPoly.constant(other, self.nvars)

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def diff(self, i: int) -> "MultiPoly":
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                out[tuple(e2)] = c * e[i]
        return MultiPoly(out, self.nvars)

    def map_coeffs(self, fn) -> "MultiPoly":
        return MultiPoly({e: fn(c) for e, c in self.terms.items()}, self.nvars)

    def substitute(self, images: Sequence["MultiPoly"]) -> "MultiPoly":
        """Replace variable i by ``images[i]`` (all images share one ring)."""
        if len(images) != self.nvars:
            raise ValueError("need one image per variable")
        nv = images[0].nvars
        powers: dict[tuple[int, int], MultiPoly] = {}

        def pw(i, k):
            if (i, k) not in powers:
                powers[(i, k)] = images[i] ** k if k > 1 else (
                    images[i] if k == 1 else MultiPoly.constant(Fraction(1), nv))
            return powers[(i, k)]

        out = MultiPoly({}, nv)
        for e, c in self.terms.items():
            term = MultiPoly.constant(c, nv)
            for i, k in enumerate(e):
                if k:
                    term = term * pw(i, k)
            out = out + term
        return out

    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (list, tuple)):
            point = tuple(point[0])
        total = 0
        for e, c in self.terms.items():
            t = c
            for v, k in zip(point, e):
                if k:
                    t = t * v ** k
            total = total + t
        return total

    def format(self, names: Sequence[str] = VARS) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                names[i] if k == 1 else f"{names[i]}^{k}" for i, k in enumerate(e) if k
            )
            neg = (c < 0) if isinstance(c, (Fraction, int, float)) else False
            mag = -c if neg else c
            if mono and mag == 1:
                body = mono
            elif mono:
                body = f"{_format_coeff(mag)}*{mono}"
            else:
                body = _format_coeff(mag)
            parts.append(("- " if neg else "+ ") + body)
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    def __str__(self):
        return self.format(VARS[: self.nvars] if self.nvars <= 4 else
                           [f"x{i}" for i in range(self.nvars)])

    def __repr__(self):
        return f"MultiPoly({self})"


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(r"\s*(?:(\d+)|([xyzw])|(\*\*|[-+*^/()]))")


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[pos + stripped]!r}", pos + stripped)
        start = m.start(m.lastindex)
        if m.group(1):
            tokens.append(("num", int(m.group(1)), start))
        elif m.group(2):
            tokens.append(("var", m.group(2), start))
        else:
            op = "^" if m.group(3) == "**" else m.group(3)
            tokens.append(("op", op, start))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}", pos)

    def parse(self) -> MultiPoly:
        poly = self.expr()
        kind, _, pos = self.peek()
        if kind != "end":
            raise ParseError("unexpected trailing input", pos)
        return poly

    def expr(self) -> MultiPoly:
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            acc = self.term()
            if val == "-":
                acc = -acc
        else:
            acc = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                t = self.term()
                acc = acc + t if val == "+" else acc - t
            else:
                return acc

    def term(self) -> MultiPoly:
        acc = self.power()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val == "*":
                self.take()
                acc = acc * self.power()
            elif kind in ("num", "var") or (kind == "op" and val == "("):
                acc = acc * self.power()  # implicit multiplication, e.g. 2x^3
            else:
                return acc

    def power(self) -> MultiPoly:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, n, pos = self.take()
            if kind != "num":
                raise ParseError("expected a natural-number exponent", pos)
            base = base ** n
        return base

    def atom(self) -> MultiPoly:
        kind, val, pos = self.take()
        if kind == "num":
            c = Fraction(val)
            k2, v2, _ = self.peek()
            if k2 == "op" and v2 == "/":
                self.take()
                k3, den, p3 = self.take()
                if k3 != "num":
                    raise ParseError("expected a denominator", p3)
                if den == 0:
                    raise ParseError("zero denominator", p3)
                c = Fraction(val, den)
            return MultiPoly.constant(c)
        if kind == "var":
            return MultiPoly.variable(VARS.index(val))
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        if kind == "op" and val in "+-":
            inner = self.power()
            return -inner if val == "-" else inner
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected token {val!r}", pos)


def parse_poly(text: str) -> MultiPoly:
    """Parse a polynomial in x, y, z, w with rational coefficients."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# cubic forms and transforms

@dataclass(frozen=True)
class CubicForm:
    """A cubic surface as its coefficient vector c1..c20 (see ``MONOMIALS``)."""

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        cs = tuple(Fraction(c) for c in self.coeffs)
        if len(cs) != 20:
            raise ValueError(f"a cubic form has 20 coefficients, got {len(cs)}")
        if not any(cs):
            raise ValueError("cubic form is identically zero")
        object.__setattr__(self, "coeffs", cs)

    @classmethod
    def from_poly(cls, poly: MultiPoly) -> "CubicForm":
        if poly.nvars != 4 or poly.is_zero() or poly.homogeneous_degree != 3:
            raise ValueError("not homogeneous of degree 3")
        out = [Fraction(0)] * 20
        for e, c in poly.terms.items():
            out[MONOMIAL_INDEX[e]] = Fraction(c)
        return cls(tuple(out))

    @classmethod
    def from_strings(cls, values: Sequence[str]) -> "CubicForm":
        return cls(tuple(Fraction(str(v).strip()) for v in values))

    def to_poly(self) -> MultiPoly:
        return MultiPoly(dict(zip(MONOMIALS, self.coeffs)), 4)

    def to_json(self) -> list[str]:
        return [str(c) for c in self.coeffs]

    def scaled(self, lam) -> "CubicForm":
        return CubicForm(tuple(c * Fraction(lam) for c in self.coeffs))

    def __getitem__(self, i: int) -> Fraction:
        return self.coeffs[i]

    def __str__(self):
        return self.to_poly().format()


def parse_cubic(text: str) -> CubicForm:
    """Parse ``text`` and return its coefficient vector.

    >>> parse_cubic("x^3+y^3+z^3+w^3").coeffs[:5]
    (Fraction(1, 1), Fraction(1, 1), Fraction(1, 1), Fraction(1, 1), Fraction(0, 1))
    """
    return CubicForm.from_poly(parse_poly(text))


def format_cubic(f: CubicForm) -> str:
    return f.to_poly().format()


def _det_fraction(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    m = [list(map(Fraction, r)) for r in rows]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if m[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            m[c], m[p] = m[p], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            if m[r][c]:
                k = m[r][c] / m[c][c]
                m[r] = [a - k * b for a, b in zip(m[r], m[c])]
    return det


@dataclass(frozen=True)
class ProjTransform:
    """An invertible 4x4 rational matrix acting on P^3."""

    rows: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(Fraction(a) for a in r) for r in self.rows)
        if len(rows) != 4 or any(len(r) != 4 for r in rows):
            raise ValueError("need a 4x4 matrix")
        object.__setattr__(self, "rows", rows)
        if _det_fraction(rows) == 0:
            raise ValueError("singular matrix")

    @classmethod
    def identity(cls) -> "ProjTransform":
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(4)) for i in range(4)))

    @classmethod
    def permutation(cls, perm: Sequence[int]) -> "ProjTransform":
        """Matrix sending coordinate perm[i] to slot i: (A v)_i = v[perm[i]]."""
        return cls(tuple(tuple(Fraction(int(perm[i] == j)) for j in range(4)) for i in range(4)))

    @classmethod
    def random_integer(cls, rng, low: int = -3, high: int = 3) -> "ProjTransform":
        while True:
            rows = [[int(v) for v in rng.integers(low, high + 1, size=4)] for _ in range(4)]
            if _det_fraction(rows) != 0:
                return cls(tuple(tuple(r) for r in rows))

    @property
    def det(self) -> Fraction:
        return _det_fraction(self.rows)

    def __matmul__(self, other: "ProjTransform") -> "ProjTransform":
        return ProjTransform(tuple(
            tuple(sum(self.rows[i][k] * other.rows[k][j] for k in range(4)) for j in range(4))
            for i in range(4)))

    def inverse(self) -> "ProjTransform":
        m = [list(r) + [Fraction(int(i == j)) for j in range(4)] for i, r in enumerate(self.rows)]
        for c in range(4):
            p = next(r for r in range(c, 4) if m[r][c] != 0)
            m[c], m[p] = m[p], m[c]
            piv = m[c][c]
            m[c] = [a / piv for a in m[c]]
            for r in range(4):
                if r != c and m[r][c]:
                    k = m[r][c]
                    m[r] = [a - k * b for a, b in zip(m[r], m[c])]
        return ProjTransform(tuple(tuple(r[4:]) for r in m))

    def transpose(self) -> "ProjTransform":
        return ProjTransform(tuple(zip(*self.rows)))

    def to_json(self) -> list[list[str]]:
        return [[str(a) for a in r] for r in self.rows]


def substitute_linear(poly: MultiPoly, matrix: Sequence[Sequence]) -> MultiPoly:
    """poly(M x): variable i is replaced by the linear form given by row i of M."""
    images = [MultiPoly.linear(list(row), poly.nvars) for row in matrix]
    return poly.substitute(images)


def act(f: CubicForm, A: ProjTransform) -> CubicForm:
    """The cubic x -> f(A x).  A right action: act(f, A @ B) == act(act(f, A), B)."""
    return CubicForm.from_poly(substitute_linear(f.to_poly(), A.rows))


def gradient(f: CubicForm | MultiPoly) -> tuple[MultiPoly, ...]:
    p = f.to_poly() if isinstance(f, CubicForm) else f
    return tuple(p.diff(i) for i in range(p.nvars))


def hessian_matrix(f: CubicForm | MultiPoly) -> list[list[MultiPoly]]:
    grad = gradient(f)
    return [[g.diff(j) for j in range(len(grad))] for g in grad]


def poly_det(matrix: Sequence[Sequence[MultiPoly]]) -> MultiPoly:
    n = len(matrix)
    nv = matrix[0][0].nvars
    total = MultiPoly({}, nv)
    for perm in permutations(range(n)):
        term = MultiPoly.constant(Fraction(_sign(perm)), nv)
        for i, j in enumerate(perm):
            term = term * matrix[i][j]
            if term.is_zero():
                break
        total = total + term
    return total


def hessian_det(f: CubicForm | MultiPoly) -> MultiPoly:
    """Determinant of the 4x4 matrix of second partials (a quartic for a cubic f)."""
    return poly_det(hessian_matrix(f))


def evaluate(f: CubicForm | MultiPoly, point: Sequence):
    """Value of f at ``point`` in the arithmetic of the inputs."""
    p = f.to_poly() if isinstance(f, CubicForm) else f
    return p(tuple(point))


def cubic_from_linear_product(*forms: Sequence) -> list:
    """Coefficient vector (``MONOMIALS`` order) of a product of three linear forms."""
    prod = None
    for l in forms:
        lp = MultiPoly.linear(list(l), 4)
        prod = lp if prod is None else prod * lp
    return [prod.coefficient(m) for m in MONOMIALS]
