"""Eigenpoints of a cubic form: fixed points of the gradient map P^3 -> P^3."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import mpmath
import numpy as np

from .algebra import MONOMIALS, CubicForm, MultiPoly
from .solver import (PolySystem, SolverError, TrackerConfig, projective_distance,
                     refine_mp, solve_overdetermined)

GENERIC_COUNT = 15
FILTER_TOL = 1e-8
NEAR_MULTIPLE = 1e-4
REAL_TOL = 1e-8


class EigenError(ValueError):
    pass


def _as_poly(f) -> tuple[MultiPoly, bool]:
    """(polynomial, has_real_coefficients)."""
    if isinstance(f, CubicForm):
        return f.to_poly(), True
    if isinstance(f, MultiPoly):
        return f, all(complex(c).imag == 0 for c in f.terms.values())
    coeffs = list(f)
    if len(coeffs) != 20:
        raise ValueError("need 20 coefficients")
    real = all(isinstance(c, (int, Fraction)) or complex(c).imag == 0 for c in coeffs)
    return MultiPoly(dict(zip(MONOMIALS, coeffs))), real


def eigen_minors(f) -> list[MultiPoly]:
    """The six cubics x_i d_j f - x_j d_i f, i < j (some may vanish identically)."""
    p, _ = _as_poly(f)
    grad = [p.diff(i) for i in range(4)]
    xs = [MultiPoly.variable(i) for i in range(4)]
    return [xs[i] * grad[j] - xs[j] * grad[i] for i, j in combinations(range(4), 2)]


@dataclass
class EigenConfiguration:
    points: list                    # unit vectors, canonical phase
    eigenvalues: list               # lambda = v^H grad f(v) for the unit representative
    residuals: list                 # minor residuals after refinement
    fixed_point_residuals: list     # |grad f(v) - lambda v| / |f|
    flags: list = field(default_factory=list)
    real_input: bool = True
    candidates: int = 0
    seed: int = 0
    stats: dict = field(default_factory=dict)
    _minors: list | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.points)

    @property
    def generic(self) -> bool:
        return len(self.points) == GENERIC_COUNT and not self.flags

    def to_json(self) -> dict:
        cj = lambda z: [z.real, z.imag]
        return {
            "count": len(self.points),
            "points": [[cj(z) for z in p] for p in self.points],
            "eigenvalues": [cj(complex(l)) for l in self.eigenvalues],
            "residuals": list(self.residuals),
            "fixed_point_residuals": list(self.fixed_point_residuals),
            "flags": list(self.flags),
            "candidates": self.candidates,
            "seed": self.seed,
            "stats": dict(self.stats),
        }


def _grad_numeric(p: MultiPoly):
    grads = [PolySystem([p.diff(i)], 4) for i in range(4)]
    return lambda v: np.array([g.evaluate(v)[0] for g in grads])


def eigenpoints(f, cfg: TrackerConfig | None = None) -> EigenConfiguration:
    """Solve grad f(v) ^ v = 0 by squaring the six minors down to three (27 paths)."""
    cfg = cfg or TrackerConfig()
    p, real = _as_poly(f)
    minors = [m for m in eigen_minors(p) if not m.is_zero()]
    flags = []
    if len(minors) < 3:
        return EigenConfiguration([], [], [], [], ["degenerate: fixed locus not isolated"],
                                  real, 0, cfg.seed)
    system = PolySystem.from_polys(minors)
    run_cfg = TrackerConfig(**{**cfg.__dict__, "max_failures": 27})
    try:
        sols = solve_overdetermined(system, run_cfg, FILTER_TOL)
    except SolverError as exc:
        return EigenConfiguration([], [], [], [], [f"degenerate: {exc}"], real, 0, cfg.seed,
                                  exc.stats)
    grad = _grad_numeric(p)
    scale = max(abs(complex(c)) for c in p.terms.values())
    lams, fres = [], []
    for v in sols.points:
        g = grad(v)
        lam = np.vdot(v, g)
        lams.append(complex(lam))
        fres.append(float(np.linalg.norm(g - lam * v) / scale))
    if sols.stats.get("failed"):
        flags.append(f"{sols.stats['failed']} paths failed")
    if any(sols.singular):
        flags.append("degenerate: singular eigenpoint (fixed locus not isolated or multiple)")
    for a, b in combinations(range(len(sols.points)), 2):
        if projective_distance(sols.points[a], sols.points[b]) < NEAR_MULTIPLE:
            flags.append("near eigendiscriminant: eigenpoints closer than 1e-4")
            break
    if len(sols.points) != GENERIC_COUNT:
        flags.append(f"non-generic eigenconfiguration: {len(sols.points)} points")
    return EigenConfiguration(points=list(sols.points), eigenvalues=lams,
                              residuals=list(sols.residuals), fixed_point_residuals=fres,
                              flags=flags, real_input=real, candidates=sols.candidates,
                              seed=cfg.seed, stats=dict(sols.stats), _minors=minors)


def _imag_size(v: np.ndarray) -> float:
    return float(np.max(np.abs(v.imag)))


def eigen_real_census(config: EigenConfiguration, tol: float = REAL_TOL) -> int:
    """Number of real eigenpoints; checks real + 2 * (conjugate pairs) = total."""
    if not config.real_input:
        raise EigenError("census requires real input")
    if any(fl.startswith("degenerate") for fl in config.flags):
        raise EigenError("census undefined for a degenerate eigenconfiguration")
    real = []
    for v in config.points:
        im = _imag_size(v)
        if tol <= im < 10 * tol and config._minors is not None:
            xm, _ = refine_mp(v, PolySystem.from_polys(config._minors), 50, 30, True)
            with mpmath.workdps(50):
                nrm = mpmath.sqrt(sum(abs(z) ** 2 for z in xm))
                lead = next(z for z in xm if abs(z) > 1e-6 * nrm)
                ph = abs(lead) / lead
                im = max(float(abs(mpmath.im(z * ph / nrm))) for z in xm)
            if tol <= im < 10 * tol:
                raise EigenError("phase ambiguity in reality test")
        real.append(im < tol)
    rest = [v for v, r in zip(config.points, real) if not r]
    used = set()
    pairs = 0
    for i, v in enumerate(rest):
        if i in used:
            continue
        for j in range(i + 1, len(rest)):
            if j not in used and projective_distance(np.conj(v), rest[j]) < 1e-6:
                used.update((i, j))
                pairs += 1
                break
    r = sum(real)
    if r + 2 * pairs != len(config.points):
        raise EigenError(f"conjugation mismatch: {r} real + 2*{pairs} pairs != {len(config.points)}")
    return r
