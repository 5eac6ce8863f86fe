"""Total-degree homotopy continuation with Newton refinement.

Every square system is tracked in homogeneous coordinates on a random affine
patch, so paths heading to infinity stay bounded and are classified at the
end instead of being chased numerically.  All paths of one solve are advanced
together as numpy batches; each path keeps its own step size.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Sequence

import mpmath
import numpy as np

from .algebra import MultiPoly

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    def __init__(self, message: str, stats: dict | None = None):
        super().__init__(message)
        self.stats = stats or {}


@dataclass(frozen=True)
class TrackerConfig:
    seed: int = 0
    newton_tol: float = 1e-10       # relative residual required of a reported solution
    track_tol: float = 1e-9         # corrector step tolerance while tracking
    max_corrector_iters: int = 3
    initial_step: float = 0.02
    min_step: float = 1e-14
    max_step: float = 0.1
    max_steps: int = 20000
    divergence_bound: float = 1e8
    infinity_tol: float = 1e-4      # |x0|/|X| below this and ill-conditioned: at infinity
    dedup_dist: float = 1e-6
    singular_cond: float = 1e8
    refine_iters: int = 30
    max_failures: int = 0
    mp_dps: int = 40

    def __post_init__(self):
        for name in ("newton_tol", "track_tol", "min_step", "max_step", "dedup_dist"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def tightened(self) -> "TrackerConfig":
        d = asdict(self)
        d.update(max_step=self.max_step / 8, initial_step=self.initial_step / 8,
                 track_tol=self.track_tol / 100, max_corrector_iters=self.max_corrector_iters + 2,
                 max_steps=self.max_steps * 4)
        return TrackerConfig(**d)


def _as_complex(c) -> complex:
    return complex(c)


class _Compiled:
    """Vectorized evaluation of a list of sparse polynomials and their Jacobian."""

    def __init__(self, equations: Sequence[dict], nvars: int):
        self.nvars = nvars
        self.neq = len(equations)
        exps, coefs, eqs = [], [], []
        for k, eq in enumerate(equations):
            for e, c in eq.items():
                exps.append(e)
                coefs.append(_as_complex(c))
                eqs.append(k)
        E = np.array(exps, dtype=np.int64).reshape(-1, nvars)
        self.maxdeg = int(E.max()) if E.size else 0
        self.E = E
        W = np.zeros((len(exps), self.neq), dtype=complex)
        W[np.arange(len(exps)), eqs] = coefs
        self.W = W
        dexps, dcols, dcoef = [], [], []
        for t, (e, c, k) in enumerate(zip(exps, coefs, eqs)):
            for j in range(nvars):
                if e[j]:
                    e2 = list(e)
                    e2[j] -= 1
                    dexps.append(e2)
                    dcoef.append(c * e[j])
                    dcols.append(k * nvars + j)
        self.DE = np.array(dexps, dtype=np.int64).reshape(-1, nvars)
        DW = np.zeros((len(dexps), self.neq * nvars), dtype=complex)
        DW[np.arange(len(dexps)), dcols] = dcoef
        self.DW = DW
        self._cols = np.arange(nvars)[None, :]

    def _powers(self, Y):
        pw = np.empty(Y.shape + (self.maxdeg + 1,), dtype=complex)
        pw[..., 0] = 1.0
        for k in range(1, self.maxdeg + 1):
            pw[..., k] = pw[..., k - 1] * Y
        return pw

    def eval_jac(self, Y: np.ndarray):
        """Y: (P, nvars) -> values (P, neq), Jacobian (P, neq, nvars)."""
        pw = self._powers(Y)
        mon = pw[:, self._cols, self.E].prod(axis=2)
        vals = mon @ self.W
        if self.DE.shape[0]:
            dmon = pw[:, self._cols, self.DE].prod(axis=2)
            jac = (dmon @ self.DW).reshape(Y.shape[0], self.neq, self.nvars)
        else:
            jac = np.zeros((Y.shape[0], self.neq, self.nvars), dtype=complex)
        return vals, jac


@dataclass
class PolySystem:
    """Polynomial equations as sparse maps exponent-tuple -> coefficient.

    Coefficients may be exact (Fraction/int) or complex; evaluation is in
    complex double, and :func:`refine_mp` uses exact values when available.
    """

    equations: list
    nvars: int
    _compiled: _Compiled | None = field(default=None, repr=False, compare=False)
    _scales: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        eqs = []
        for eq in self.equations:
            if isinstance(eq, MultiPoly):
                if eq.nvars != self.nvars:
                    raise ValueError("all equations must share the variable count")
                eqs.append(dict(eq.terms))
            else:
                d = {tuple(e): c for e, c in eq.items() if c != 0}
                if any(len(e) != self.nvars for e in d):
                    raise ValueError("all equations must share the variable count")
                eqs.append(d)
        self.equations = eqs

    @classmethod
    def from_polys(cls, polys: Sequence[MultiPoly]) -> "PolySystem":
        return cls(list(polys), polys[0].nvars)

    @property
    def compiled(self) -> _Compiled:
        if self._compiled is None:
            self._compiled = _Compiled(self.equations, self.nvars)
        return self._compiled

    @property
    def degrees(self) -> list[int]:
        return [max((sum(e) for e in eq), default=0) for eq in self.equations]

    @property
    def homogeneous(self) -> bool:
        return all(len({sum(e) for e in eq}) <= 1 for eq in self.equations)

    @property
    def scales(self) -> np.ndarray:
        if self._scales is None:
            self._scales = np.array([max((abs(_as_complex(c)) for c in eq.values()), default=1.0)
                                     for eq in self.equations])
        return self._scales

    def __len__(self):
        return len(self.equations)

    def evaluate(self, point) -> np.ndarray:
        v, _ = self.compiled.eval_jac(np.atleast_2d(np.asarray(point, dtype=complex)))
        return v[0]

    def jacobian(self, point) -> np.ndarray:
        _, j = self.compiled.eval_jac(np.atleast_2d(np.asarray(point, dtype=complex)))
        return j[0]

    def residual(self, point, projective: bool = False) -> float:
        """max_i |F_i(p)| / (coefficient scale_i * max(1, |p|_inf)^deg_i)."""
        p = np.asarray(point, dtype=complex)
        if projective:
            p = p / np.linalg.norm(p)
        vals = np.abs(self.evaluate(p))
        size = max(1.0, float(np.max(np.abs(p)))) if p.size else 1.0
        denom = self.scales * size ** np.array(self.degrees, dtype=float)
        return float(np.max(vals / denom)) if vals.size else 0.0

    def homogenize(self) -> "PolySystem":
        """Prepend a homogenizing variable x0."""
        eqs = []
        for eq, d in zip(self.equations, self.degrees):
            eqs.append({(d - sum(e),) + e: c for e, c in eq.items()})
        return PolySystem(eqs, self.nvars + 1)


@dataclass
class RefineResult:
    point: np.ndarray
    residual: float
    converged: bool
    singular: bool
    quadratic: bool
    cond: float
    iterations: int


@dataclass
class SolutionSet:
    points: list
    residuals: list
    conditions: list
    singular: list
    seed: int
    config: TrackerConfig
    stats: dict
    projective: bool = False
    near_multiple: list = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def to_json(self) -> dict:
        return {
            "points": [[[z.real, z.imag] for z in p] for p in self.points],
            "residuals": list(self.residuals),
            "conditions": list(self.conditions),
            "singular": list(self.singular),
            "seed": self.seed,
            "config": asdict(self.config),
            "stats": dict(self.stats),
        }


# ---------------------------------------------------------------------------
# Newton refinement

def _scaled_rows(system: PolySystem, x: np.ndarray):
    size = max(1.0, float(np.max(np.abs(x))))
    degs = np.array(system.degrees, dtype=float)
    return system.scales * size ** np.maximum(degs - 1, 0)


def _newton_matrix(system: PolySystem, x: np.ndarray, projective: bool, patch):
    vals, jac = system.compiled.eval_jac(x[None, :])
    vals, jac = vals[0], jac[0]
    if projective:
        jac = np.vstack([jac, patch[None, :]])
        vals = np.append(vals, patch @ x - 1.0)
    return vals, jac


def refine(point, system: PolySystem, iterations: int = 30, tol: float = 1e-10,
           projective: bool = False, singular_cond: float = 1e8) -> RefineResult:
    """Newton (Gauss-Newton when overdetermined) in double precision.

    Never raises on divergence; check ``converged``.  Projective points are
    corrected on the tangent patch through the starting point.
    """
    x = np.array(point, dtype=complex)
    patch = None
    if projective:
        x = x / np.linalg.norm(x)
        patch = np.conj(x)
    steps = []
    res = system.residual(x, projective)
    it = 0
    for it in range(1, iterations + 1):
        if res == 0.0:
            it -= 1
            break
        vals, jac = _newton_matrix(system, x, projective, patch)
        if not np.all(np.isfinite(jac)) or not np.all(np.isfinite(vals)):
            break
        dx = np.linalg.lstsq(jac, -vals, rcond=None)[0]
        x_new = x + dx
        res_new = system.residual(x_new, projective)
        step = float(np.linalg.norm(dx))
        steps.append(step)
        if not np.isfinite(res_new):
            break
        x = x_new
        res = res_new
        if step <= 1e-15 * max(1.0, float(np.linalg.norm(x))):
            break
    if projective:
        x = x / np.linalg.norm(x)
    _, jac = _newton_matrix(system, x, projective, patch if patch is not None else np.conj(x))
    rows = _scaled_rows(system, x)
    if projective:
        rows = np.append(rows, 1.0)
    jac = jac / rows[:, None]
    sv = np.linalg.svd(jac, compute_uv=False)
    smin = float(sv[min(jac.shape) - 1]) if sv.size else 0.0
    # rows are scaled to O(1), so max(smax, 1) / smin also catches 1x1 systems
    cond = float("inf") if smin == 0.0 else max(float(sv[0]), 1.0) / smin
    quadratic = True
    for a, b in zip(steps, steps[1:]):
        if a > 1e-12 and b > 1e-14 and b > 10 * a * a and b > 0.2 * a:
            quadratic = False
    return RefineResult(point=x, residual=res, converged=bool(res <= tol),
                        singular=bool(cond > singular_cond), quadratic=quadratic,
                        cond=cond, iterations=it)


def _mp_value(c):
    if isinstance(c, Fraction):
        return mpmath.mpf(c.numerator) / c.denominator
    if isinstance(c, int):
        return mpmath.mpf(c)
    return mpmath.mpc(c)


def refine_mp(point, system: PolySystem, dps: int = 40, iterations: int = 30,
              projective: bool = False):
    """Newton in mpmath at ``dps`` digits; returns (mp point list, residual as float).

    Used as the extended-precision retry for flagged points.
    """
    with mpmath.workdps(dps):
        x = [mpmath.mpc(complex(v)) for v in point]
        if projective:
            nrm = mpmath.sqrt(sum(abs(v) ** 2 for v in x))
            x = [v / nrm for v in x]
            patch = [mpmath.conj(v) for v in x]
        eqs = [[(e, _mp_value(c)) for e, c in eq.items()] for eq in system.equations]
        n = system.nvars

        def ev(x):
            vals, jac = [], []
            for eq in eqs:
                val = mpmath.mpc(0)
                row = [mpmath.mpc(0)] * n
                for e, c in eq:
                    t = c
                    for i, k in enumerate(e):
                        if k:
                            t *= x[i] ** k
                    val += t
                    for j in range(n):
                        if e[j]:
                            d = c * e[j]
                            for i, k in enumerate(e):
                                kk = k - (i == j)
                                if kk:
                                    d *= x[i] ** kk
                            row[j] += d
                vals.append(val)
                jac.append(row)
            if projective:
                vals.append(sum(p * v for p, v in zip(patch, x)) - 1)
                jac.append(list(patch))
            return vals, jac

        for _ in range(iterations):
            vals, jac = ev(x)
            J = mpmath.matrix(jac)
            F = mpmath.matrix(vals)
            if J.rows == J.cols:
                try:
                    dx = mpmath.lu_solve(J, -F)
                except ZeroDivisionError:
                    break
            else:
                JH = J.transpose_conj()
                try:
                    dx = mpmath.lu_solve(JH * J, -(JH * F))
                except ZeroDivisionError:
                    break
            x = [a + dx[i] for i, a in enumerate(x)]
            if mpmath.norm(dx) < mpmath.mpf(10) ** (-dps + 5):
                break
        vals, _ = ev(x)
        res = max((abs(v) for v in vals[: len(eqs)]), default=mpmath.mpf(0))
        scale = max((abs(complex(c)) for eq in system.equations for c in eq.values()), default=1.0)
        return x, float(res) / scale


# ---------------------------------------------------------------------------
# path tracking

def _solve_batch(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.empty_like(b)
        for i in range(A.shape[0]):
            out[i] = np.linalg.lstsq(A[i], b[i], rcond=None)[0]
        return out


class _Homotopy:
    """H(Y, t) = gamma * t * G(Y) + (1 - t) * F(Y) with a linear patch c.Y = 1."""

    def __init__(self, target: Callable, degrees, gamma: complex, start_consts, patch):
        self.target = target
        self.degrees = np.array(degrees)
        self.gamma = gamma
        self.consts = np.asarray(start_consts)
        self.patch = patch
        self.n = len(degrees)

    def start(self, Y):
        d = self.degrees
        y0 = Y[:, :1]
        yi = Y[:, 1:]
        G = yi ** d - self.consts * y0 ** d
        P, N = Y.shape
        JG = np.zeros((P, self.n, N), dtype=complex)
        idx = np.arange(self.n)
        JG[:, idx, idx + 1] = d * yi ** (d - 1)
        JG[:, :, 0] = -self.consts * d * y0 ** (d - 1)
        return G, JG

    def parts(self, Y, t):
        F, JF = self.target(Y)
        G, JG = self.start(Y)
        tt = t[:, None]
        H = self.gamma * tt * G + (1 - tt) * F
        HY = self.gamma * tt[:, :, None] * JG + (1 - tt)[:, :, None] * JF
        Ht = self.gamma * G - F
        return H, HY, Ht

    def augmented(self, HY):
        P = HY.shape[0]
        return np.concatenate([HY, np.broadcast_to(self.patch, (P, 1, HY.shape[2]))], axis=1)

    def velocity(self, Y, t):
        _, HY, Ht = self.parts(Y, t)
        rhs = np.concatenate([-Ht, np.zeros((Y.shape[0], 1), dtype=complex)], axis=1)
        return _solve_batch(self.augmented(HY), rhs)

    def newton_step(self, Y, t):
        H, HY, _ = self.parts(Y, t)
        rhs = np.concatenate([-H, (1.0 - Y @ self.patch)[:, None]], axis=1)
        return _solve_batch(self.augmented(HY), rhs)


def _track(hom: _Homotopy, Y: np.ndarray, cfg: TrackerConfig, affine_chart: bool):
    """Advance all start points from t=1 to t=0.

    Returns endpoints, final t, and per-path status in
    {"reached", "stalled", "diverged"}.
    """
    P = Y.shape[0]
    Y = Y.copy()
    t = np.ones(P)
    h = np.full(P, cfg.initial_step)
    succ = np.zeros(P, dtype=int)
    status = np.array(["active"] * P, dtype=object)
    steps = 0
    while True:
        act = np.nonzero(status == "active")[0]
        if act.size == 0 or steps >= cfg.max_steps:
            break
        steps += 1
        Ya, ta = Y[act], t[act]
        dt = -np.minimum(h[act], ta)
        with np.errstate(all="ignore"):
            k1 = hom.velocity(Ya, ta)
            k2 = hom.velocity(Ya + (dt / 2)[:, None] * k1, ta + dt / 2)
            k3 = hom.velocity(Ya + (dt / 2)[:, None] * k2, ta + dt / 2)
            k4 = hom.velocity(Ya + dt[:, None] * k3, ta + dt)
            Yp = Ya + (dt / 6)[:, None] * (k1 + 2 * k2 + 2 * k3 + k4)
            t1 = ta + dt
            t1[t1 < 1e-300] = 0.0
            ok = np.ones(act.size, dtype=bool)
            prev = None
            for _ in range(cfg.max_corrector_iters):
                dY = hom.newton_step(Yp, t1)
                Yp = Yp + dY
                nrm = np.linalg.norm(dY, axis=1)
                scale = np.maximum(np.linalg.norm(Yp, axis=1), 1.0)
                if prev is not None:
                    ok &= ~((nrm > 0.5 * prev) & (nrm > cfg.track_tol * scale))
                prev = nrm
            ok &= nrm <= cfg.track_tol * scale
            ok &= np.all(np.isfinite(Yp), axis=1)
        for j, p in enumerate(act):
            if ok[j]:
                Y[p] = Yp[j]
                t[p] = t1[j]
                succ[p] += 1
                if succ[p] >= 3:
                    h[p] = min(2 * h[p], cfg.max_step)
                    succ[p] = 0
                if t[p] == 0.0:
                    status[p] = "reached"
                elif affine_chart:
                    ny = np.linalg.norm(Y[p])
                    if abs(Y[p, 0]) * cfg.divergence_bound < ny:
                        status[p] = "diverged"
            else:
                succ[p] = 0
                h[p] *= 0.5
                if h[p] < cfg.min_step:
                    status[p] = "stalled"
    status[status == "active"] = "stalled"
    return Y, t, status


def _canonical(v: np.ndarray) -> np.ndarray:
    """Unit norm, first entry of modulus > 1e-6 made real positive."""
    v = v / np.linalg.norm(v)
    for z in v:
        if abs(z) > 1e-6:
            return v * (abs(z) / z)
    return v


def _sort_key(v: np.ndarray):
    return tuple(x for z in v for x in (round(z.real, 8) + 0.0, round(z.imag, 8) + 0.0))


def _proj_dist(a: np.ndarray, b: np.ndarray) -> float:
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return float(np.linalg.norm(a - (np.vdot(b, a)) * b))


def total_degree_solve(system: PolySystem, cfg: TrackerConfig | None = None) -> SolutionSet:
    """Solve a square system by total-degree homotopy.

    Affine input: n equations in n unknowns.  Projective input: n homogeneous
    equations in n+1 unknowns; points are returned unit-normalized with the
    phase convention of ``_canonical``.
    """
    cfg = cfg or TrackerConfig()
    n_eq = len(system)
    degrees = system.degrees
    if any(d < 1 for d in degrees):
        raise ValueError("every equation needs degree >= 1")
    if system.homogeneous and system.nvars == n_eq + 1:
        projective = True
    elif system.nvars == n_eq:
        projective = False
    else:
        raise ValueError(f"system is not square: {n_eq} equations in {system.nvars} unknowns")

    rng = np.random.default_rng(cfg.seed)
    N = n_eq + 1
    if projective:
        Q, _ = np.linalg.qr(rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N)))
        chart = Q
        target_sys = system
    else:
        chart = None
        target_sys = system.homogenize()
    comp = target_sys.compiled
    scales = target_sys.scales

    def target(Y):
        X = Y @ chart.T if chart is not None else Y
        F, J = comp.eval_jac(X)
        if chart is not None:
            J = J @ chart
        return F / scales, J / scales[:, None]

    gamma = np.exp(2j * np.pi * rng.random())
    consts = np.exp(2j * np.pi * rng.random(n_eq))
    patch = rng.normal(size=N) + 1j * rng.normal(size=N)
    patch /= np.linalg.norm(patch)
    hom = _Homotopy(target, degrees, gamma, consts, patch)

    roots = [consts[i] ** (1.0 / d) * np.exp(2j * np.pi * np.arange(d) / d)
             for i, d in enumerate(degrees)]
    starts = np.array([(1.0,) + combo for combo in product(*roots)], dtype=complex)
    starts = starts / (starts @ patch)[:, None]

    stats = {"tracked": len(starts), "converged": 0, "diverged": 0, "failed": 0,
             "deduplicated": 0, "retried": 0, "extended_precision": 0,
             "bezout": int(np.prod(degrees))}

    def classify(Y_end, t_end, status):
        """Return (kind, point, RefineResult|None) for one endpoint."""
        if status == "diverged":
            return "diverged", None, None
        kind = _classify(Y_end, t_end, status)
        if kind[0] == "finite" and status == "stalled" and t_end > 1e-6:
            # an untracked endpoint may Newton onto a root claimed by another path
            return "failed", None, kind[2]
        return kind

    def _classify(Y_end, t_end, status):
        if projective:
            x = Y_end @ chart.T
            r = refine(x, system, cfg.refine_iters, cfg.newton_tol, True, cfg.singular_cond)
        else:
            # settle the endpoint in homogeneous coordinates first: near the
            # solution set at infinity, projective Newton drives x0 to zero
            # where affine Newton would creep outward with a deceptively
            # small scaled residual
            yr = refine(Y_end, target_sys, cfg.refine_iters, cfg.newton_tol, True,
                        cfg.singular_cond)
            Y = yr.point if np.all(np.isfinite(yr.point)) else Y_end
            ratio = abs(Y[0]) / np.linalg.norm(Y)
            if ratio * cfg.divergence_bound < 1.0:
                return "diverged", None, None
            r = refine(Y[1:] / Y[0], system, cfg.refine_iters, cfg.newton_tol, False,
                       cfg.singular_cond)
            if not np.all(np.isfinite(r.point)) or np.max(np.abs(r.point)) > cfg.divergence_bound:
                return "diverged", None, None
            # conditioning is judged in homogeneous coordinates, where it does
            # not depend on how large the affine coordinates are
            Yx = np.append(1.0, r.point)
            Yx = Yx / np.linalg.norm(Yx)
            hr = refine(Yx, target_sys, 0, cfg.newton_tol, True, cfg.singular_cond)
            r.cond, r.singular = hr.cond, hr.singular
            if r.singular or not r.converged:
                # an ill-conditioned candidate may be creeping toward the
                # solution set at infinity; longer projective Newton exposes it
                yh = refine(Yx, target_sys, 100, cfg.newton_tol, True, cfg.singular_cond)
                if abs(yh.point[0]) < cfg.infinity_tol * np.linalg.norm(yh.point):
                    return "diverged", None, None
        if r.converged:
            return "finite", r.point, r
        # reached t=0 (or stalled at its doorstep) but double Newton is not enough
        stats["extended_precision"] += 1
        xm, res = refine_mp(r.point, system, cfg.mp_dps, cfg.refine_iters, projective)
        xc = np.array([complex(v) for v in xm])
        if res <= cfg.newton_tol and np.all(np.isfinite(xc)):
            if not projective and np.linalg.norm(xc) * cfg.infinity_tol > 1.0:
                return "diverged", None, None
            r2 = refine(xc, system, 1, cfg.newton_tol, projective, cfg.singular_cond)
            r2.residual = min(r2.residual, res)
            r2.converged = True
            r2.singular = True
            return "finite", r2.point, r2
        return "failed", None, r

    Y_end, t_end, status = _track(hom, starts, cfg, affine_chart=not projective)
    kinds = [classify(Y_end[i], t_end[i], status[i]) for i in range(len(starts))]

    # one-shot retry with tighter step control for failed paths and for
    # paths that landed on an already-claimed regular solution (path jumping)
    retry = [i for i, k in enumerate(kinds) if k[0] == "failed"]
    finite = [i for i, k in enumerate(kinds) if k[0] == "finite" and not k[2].singular]
    for a_i, a in enumerate(finite):
        for b in finite[a_i + 1:]:
            if _dist(kinds[a][1], kinds[b][1], projective) < cfg.dedup_dist:
                retry.extend([a, b])
    retry = sorted(set(retry))
    if retry:
        stats["retried"] = len(retry)
        tight = cfg.tightened()
        Y2, t2, s2 = _track(hom, starts[retry], tight, affine_chart=not projective)
        for j, i in enumerate(retry):
            kinds[i] = classify(Y2[j], t2[j], s2[j])

    cands = []
    for i, (kind, pt, r) in enumerate(kinds):
        if kind == "finite":
            stats["converged"] += 1
            cands.append((r.residual, i, pt if not projective else _canonical(pt), r))
        elif kind == "diverged":
            stats["diverged"] += 1
        else:
            stats["failed"] += 1
    if stats["failed"] > cfg.max_failures:
        raise SolverError(
            f"path failures exceeded budget: {stats['failed']} failed of {stats['tracked']}"
            f" (budget {cfg.max_failures})", stats)

    kept = []
    for res, i, pt, r in sorted(cands, key=lambda c: (c[0], c[1])):
        if any(_dist(pt, q[0], projective) < cfg.dedup_dist for q in kept):
            stats["deduplicated"] += 1
            continue
        kept.append((pt, r))
    kept.sort(key=lambda q: _sort_key(q[0]))
    return SolutionSet(
        points=[q[0] for q in kept],
        residuals=[q[1].residual for q in kept],
        conditions=[q[1].cond for q in kept],
        singular=[q[1].singular for q in kept],
        seed=cfg.seed, config=cfg, stats=stats, projective=projective)


def _dist(a, b, projective: bool) -> float:
    if projective:
        return _proj_dist(a, b)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(a)))))


# ---------------------------------------------------------------------------
# overdetermined systems

def square_up(system: PolySystem, seed: int = 0, tol: float = 1e-8,
              projective: bool | None = None):
    """Random complex combinations down to a square system, plus a filter.

    The filter re-tests candidate points against every original equation and
    returns the list of booleans (True = genuine solution).
    """
    if projective is None:
        projective = system.homogeneous and len(system) >= system.nvars - 1 and len(system) != system.nvars
    n = system.nvars - 1 if projective else system.nvars
    m = len(system)
    if m < n:
        raise ValueError("underdetermined system")

    def keep(points, tol=tol):
        return [system.residual(p, projective) <= tol for p in points]

    if m == n:
        return system, keep
    if projective and len(set(system.degrees)) > 1:
        raise ValueError("projective squaring needs equations of one degree")
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))
    eqs = []
    for row in M:
        acc: dict = {}
        for coef, eq in zip(row, system.equations):
            for e, c in eq.items():
                acc[e] = acc.get(e, 0) + coef * _as_complex(c)
        eqs.append(acc)
    return PolySystem(eqs, system.nvars), keep


@dataclass
class FilteredSolutions:
    points: list
    residuals: list
    singular: list
    conditions: list
    candidates: int
    stats: dict
    seed: int


def solve_overdetermined(system: PolySystem, cfg: TrackerConfig | None = None,
                         filter_tol: float = 1e-8) -> FilteredSolutions:
    """Square up, solve projectively, filter, and Gauss-Newton polish on all equations."""
    cfg = cfg or TrackerConfig()
    square, keep = square_up(system, cfg.seed + 7919, filter_tol, projective=True)
    sols = total_degree_solve(square, cfg)
    flags = keep(sols.points)
    pts, res, sing, conds = [], [], [], []
    for p, ok in zip(sols.points, flags):
        if not ok:
            continue
        r = refine(p, system, cfg.refine_iters, cfg.newton_tol, True, cfg.singular_cond)
        q = _canonical(r.point)
        if any(_proj_dist(q, o) < cfg.dedup_dist for o in pts):
            continue
        pts.append(q)
        res.append(r.residual)
        sing.append(r.singular)
        conds.append(r.cond)
    order = sorted(range(len(pts)), key=lambda i: _sort_key(pts[i]))
    return FilteredSolutions(
        points=[pts[i] for i in order], residuals=[res[i] for i in order],
        singular=[sing[i] for i in order], conditions=[conds[i] for i in order],
        candidates=len(sols.points), stats=sols.stats, seed=cfg.seed)


def canonical_point(v) -> np.ndarray:
    return _canonical(np.asarray(v, dtype=complex))


def point_sort_key(v):
    return _sort_key(np.asarray(v, dtype=complex))


def projective_distance(a, b) -> float:
    return _proj_dist(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
