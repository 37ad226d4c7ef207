"""Newton-type diagrams of a trilinear form and the nondegeneracy decision.

For orthonormal bases the diagram is the origin together with every lattice
triple ``(alpha, beta, gamma)`` whose derivative coefficient is nonzero.  The
form is nondegenerate when the scaling point lies in the convex hull of the
diagram for *every* orthonormal triple.  Since the orthogonal group cannot be
exhausted, the decision combines a seeded sample of triples, descent on a
smooth surrogate, and, when a degenerate triple is approached, a polish step
that drives the offending coefficients to zero.  A degenerate verdict is only
issued after the one-parameter witness built from the separating functional
has been checked to drive the normalized curvature ratio to zero.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import expm
from scipy.optimize import least_squares, linprog, minimize

from . import exactlp
from .errors import NonOrthonormalBases, NotNondegenerate, TraceViolation
from .multilinear import random_orthogonal
from .qcalc import (BasisTriple, TrilinearForm, coefficient_vector, layout, script_q,
                    transform)

HULL_TOL = 1e-9


def scaling_point_exact(d1: int, k: int, d: int, s) -> list:
    s = Fraction(s)
    return [s / d1] * d1 + [s / k] * k + [s / d] * d


def scaling_point(d1: int, k: int, d: int, s) -> np.ndarray:
    return np.array([float(a) for a in scaling_point_exact(d1, k, d, s)])


def main_order(k: int, d: int) -> Fraction:
    """The order ``s = dk/n`` used for the main verdict."""
    return Fraction(d * k, d + k)


# -- diagram ------------------------------------------------------------------------

@dataclass
class DiagramSample:
    bases: BasisTriple
    points: list            # list of (alpha, beta, gamma), origin first
    margins: list           # |coefficient| / ||Q||^s per point (inf for the origin)

    def vectors(self) -> np.ndarray:
        return np.array([a + b + c for a, b, c in self.points], dtype=float)


def _origin(dims):
    d1, k, d = dims
    return ((0,) * d1, (0,) * k, (0,) * d)


def relative_margins(Q: TrilinearForm, coefs: np.ndarray) -> np.ndarray:
    """``|coef| / ||Q||^s``: the scale-free size of each coefficient."""
    lay = layout(*Q.dims)
    nrm = Q.norm
    if nrm == 0:
        return np.zeros_like(coefs)
    return np.abs(coefs) / nrm ** lay.orders


def n0_points(Q: TrilinearForm, bases: BasisTriple, eps_coef: float = 1e-9) -> DiagramSample:
    if bases.dims != Q.dims:
        raise NonOrthonormalBases("bases do not match the form")
    if not bases.is_orthonormal(1e-10):
        raise NonOrthonormalBases("diagram needs orthonormal bases")
    lay = layout(*Q.dims)
    marg = relative_margins(Q, coefficient_vector(Q.transformed(bases)))
    pts = [_origin(Q.dims)]
    ms = [math.inf]
    for tr, m in zip(lay.triples, marg):
        if m > eps_coef:
            pts.append(tr)
            ms.append(float(m))
    return DiagramSample(bases, pts, ms)


# -- hull membership -----------------------------------------------------------------

@dataclass
class InHull:
    weights: np.ndarray
    residual: float
    exact_weights: list | None = None
    boundary: bool = False


@dataclass
class Outside:
    x: np.ndarray
    margin: float
    boundary: bool = False


def _gauge_rows(blocks, points, query):
    """Gauge equalities x.(0;1_k;0) = x.(0;0;1_d) = 0 when they are without loss."""
    if blocks is None:
        return None
    d1, k, d = blocks
    D = d1 + k + d
    allp = np.vstack([points, query[None, :]])
    sums = np.stack([allp[:, :d1].sum(1), allp[:, d1:d1 + k].sum(1), allp[:, d1 + k:].sum(1)], 1)
    if np.max(np.abs(sums - sums[:, :1])) > 1e-12:
        return None
    G = np.zeros((2, D))
    G[0, d1:d1 + k] = 1.0
    G[1, d1 + k:] = 1.0
    return G


def _feasibility_lp(P: np.ndarray, q: np.ndarray):
    N, D = P.shape
    c = np.concatenate([np.zeros(N), np.ones(2 * D)])
    A = np.zeros((D + 1, N + 2 * D))
    A[:D, :N] = P.T
    A[:D, N:N + D] = np.eye(D)
    A[:D, N + D:] = -np.eye(D)
    A[D, :N] = 1.0
    b = np.concatenate([q, [1.0]])
    res = linprog(c, A_eq=A, b_eq=b, bounds=[(0, None)] * (N + 2 * D), method="highs")
    if res.status != 0:
        return math.inf, None
    theta = np.clip(res.x[:N], 0, None)
    resid = float(np.sum(np.abs(P.T @ theta - q)) + abs(theta.sum() - 1.0))
    return resid, theta


def _exact_weights(P: np.ndarray, q_exact, support=None):
    idx = list(range(len(P))) if support is None else list(support)
    A = [[int(round(P[j, i])) for j in idx] for i in range(P.shape[1])] + [[1] * len(idx)]
    b = list(q_exact) + [1]
    sol = exactlp.feasible_point(A, b)
    if sol is None:
        return None
    full = [Fraction(0)] * len(P)
    for j, v in zip(idx, sol):
        full[j] = v
    return full


def separating_functional(P: np.ndarray, q: np.ndarray, blocks=None):
    """Maximize ``x.q - max_p x.p`` over ``|x_i| <= 1`` (with the gauge when valid)."""
    N, D = P.shape
    c = np.concatenate([-q, [1.0]])
    A_ub = np.hstack([P, -np.ones((N, 1))])
    b_ub = np.zeros(N)
    G = _gauge_rows(blocks, P, q)
    A_eq = b_eq = None
    if G is not None:
        A_eq = np.hstack([G, np.zeros((2, 1))])
        b_eq = np.zeros(2)
    bounds = [(-1.0, 1.0)] * D + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    x = res.x[:D]
    x = np.where(np.abs(x) < 1e-12, 0.0, x)
    margin = float(x @ q - np.max(P @ x))
    return x, margin


def hull_membership(points, query, blocks=None, tol: float = HULL_TOL, query_exact=None):
    """Decide whether ``query`` is a convex combination of ``points``.

    Lattice points and a rational query allow an exact re-solve whenever the
    floating-point residual lands within a factor 10 of the tolerance.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    q = np.asarray(query, dtype=float)
    if query_exact is None:
        query_exact = [Fraction(float(a)).limit_denominator(10 ** 6) for a in q]
    resid, theta = _feasibility_lp(P, q)
    boundary = tol / 10 <= resid <= 10 * tol
    lattice = np.allclose(P, np.round(P))
    if boundary and lattice:
        ex = _exact_weights(P, query_exact)
        if ex is not None:
            w = np.array([float(a) for a in ex])
            return InHull(w, 0.0, ex, boundary=True)
        x, margin = separating_functional(P, q, blocks)
        return Outside(x, margin, boundary=True)
    if resid <= tol:
        ex = None
        if lattice:
            support = [j for j in range(len(P)) if theta[j] > 1e-12]
            ex = _exact_weights(P, query_exact, support) or _exact_weights(P, query_exact)
        return InHull(theta, resid, ex)
    x, margin = separating_functional(P, q, blocks)
    return Outside(x, margin)


def bottleneck_margin(Q: TrilinearForm, bases: BasisTriple, order=None, eps_coef=1e-9,
                      margins=None):
    """Largest level ``m`` such that the scaling point stays in the hull of the origin
    and the triples whose relative coefficient is at least ``m`` (0 if none works)."""
    d1, k, d = Q.dims
    s = main_order(k, d) if order is None else Fraction(order)
    lay = layout(d1, k, d)
    if margins is None:
        margins = relative_margins(Q, coefficient_vector(Q.transformed(bases)))
    q = scaling_point(d1, k, d, s)
    qx = scaling_point_exact(d1, k, d, s)
    origin = np.zeros(d1 + k + d)
    levels = np.unique(margins[margins > eps_coef])[::-1]
    if levels.size == 0:
        return 0.0
    def inside(level):
        keep = margins >= level
        P = np.vstack([origin, lay.points[keep]])
        return isinstance(hull_membership(P, q, (d1, k, d), query_exact=qx), InHull)
    if not inside(levels[-1]):
        return 0.0
    lo, hi = 0, len(levels) - 1          # inside(levels[hi]) is True
    if inside(levels[0]):
        return float(levels[0])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if inside(levels[mid]):
            hi = mid
        else:
            lo = mid
    return float(levels[hi])


# -- smooth surrogate -------------------------------------------------------------------

def log_ratio_floor(Q: TrilinearForm, bases: BasisTriple, order=None, ymax: float = 25.0,
                    coefs=None):
    """Infimum over diagonal rescalings of ``log(Q[scaled]^2 / detprod^2)``.

    Rescaling basis vectors by ``exp(y)`` multiplies each weighted squared
    coefficient by ``exp(2 y.p)`` and the determinant product by
    ``exp(y.o_s)``, so this is a convex problem in ``y``.  The box
    ``|y_i| <= ymax`` keeps it finite when the infimum is minus infinity.
    Returns ``(value, y)``.
    """
    d1, k, d = Q.dims
    s = main_order(k, d) if order is None else Fraction(order)
    lay = layout(d1, k, d)
    if coefs is None:
        coefs = coefficient_vector(Q.transformed(bases))
    c = lay.weights * coefs ** 2
    keep = c > 1e-300
    logc = np.log(c[keep])
    P = lay.points[keep]
    o = scaling_point(d1, k, d, s)

    def f(y):
        z = np.concatenate([[0.0], logc + 2 * P @ y])
        zmax = z.max()
        e = np.exp(z - zmax)
        S = e.sum()
        val = zmax + math.log(S) - 2 * o @ y
        grad = 2 * (e[1:] @ P) / S - 2 * o
        return val, grad

    y0 = np.zeros(d1 + k + d)
    res = minimize(f, y0, jac=True, method="L-BFGS-B", bounds=[(-ymax, ymax)] * len(y0),
                   options={"maxiter": 500, "ftol": 1e-15, "gtol": 1e-12})
    return float(res.fun), res.x


# -- witnesses ----------------------------------------------------------------------

@dataclass
class Witness:
    bases: BasisTriple          # orthonormal eigenbases (rows)
    x: np.ndarray               # concatenated eigenvalues (d1 + k + d)

    @property
    def blocks(self):
        d1, k, d = self.bases.dims
        return self.x[:d1], self.x[d1:d1 + k], self.x[d1 + k:]

    def matrices(self):
        """``D_j = B^T diag(x_j) B`` in standard coordinates."""
        return tuple(B.T @ np.diag(xb) @ B for B, xb in
                     zip((self.bases.u, self.bases.v, self.bases.w), self.blocks))

    def check_traces(self, tol=1e-9):
        a, b, c = self.blocks
        if not a.sum() > tol:
            raise TraceViolation("trace of D1 must be positive")
        if abs(b.sum()) > tol or abs(c.sum()) > tol:
            raise TraceViolation("D2 and D3 must be traceless")


@dataclass
class DecayReport:
    taus: np.ndarray
    log_ratios: np.ndarray
    slope: float                # least-squares slope over the whole grid
    tail_slope: float           # slope over the second half of the grid
    accepted: bool
    stderr: float = 0.0


def witness_ratio(Q: TrilinearForm, witness: Witness, tau: float, order=None) -> float:
    d1, k, d = Q.dims
    s = float(main_order(k, d) if order is None else Fraction(order))
    a, b, c = witness.blocks
    B = witness.bases.scaled(tau * a, tau * b, tau * c)
    num = script_q(Q, B)
    du, dv, dw = B.dets
    return num / (du ** (s / d1) * dv ** (s / k) * dw ** (s / d))


def _fit(t, y):
    A = np.vstack([t, np.ones_like(t)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    n = len(t)
    if n > 2:
        r = y - A @ coef
        s2 = float(r @ r) / (n - 2)
        se = math.sqrt(s2 / float(np.sum((t - t.mean()) ** 2)))
    else:
        se = 0.0
    return float(coef[0]), se


def witness_check(Q: TrilinearForm, witness: Witness, tau_grid=None, slope_floor: float = 0.05,
                  order=None) -> DecayReport:
    witness.check_traces()
    taus = np.linspace(0.0, 10.0, 21) if tau_grid is None else np.asarray(tau_grid, dtype=float)
    logs = np.array([math.log(witness_ratio(Q, witness, t, order)) for t in taus])
    slope, se = _fit(taus, logs)
    h = len(taus) // 2
    tail, _ = _fit(taus[h:], logs[h:]) if len(taus) - h >= 2 else (slope, 0.0)
    return DecayReport(taus, logs, slope, tail, bool(tail <= -slope_floor), se)


def witness_from_functional(x: np.ndarray, bases: BasisTriple) -> Witness:
    return Witness(bases, np.asarray(x, dtype=float).copy())


# -- verdict ------------------------------------------------------------------------------

@dataclass
class VerdictConfig:
    n_samples: int = 64
    descent_starts: int = 3
    descent_evals: int = 400
    eps_coef: float = 1e-9
    margin_floor: float = 1e-6
    slope_floor: float = 0.05
    ymax: float = 25.0
    seed: int = 0
    threads: int = 1
    tau_max: float = 10.0
    n_tau: int = 21
    n_certificates: int = 3


@dataclass
class Verdict:
    status: str                                   # Nondegenerate | Degenerate | Inconclusive
    certificate: list = field(default_factory=list)
    witness: Witness | None = None
    decay: DecayReport | None = None
    search_stats: dict = field(default_factory=dict)


def _skew(theta, n):
    S = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    S[iu] = theta
    return S - S.T


def _nparams(dims):
    return sum(n * (n - 1) // 2 for n in dims)


def _rotate(base: BasisTriple, theta) -> BasisTriple:
    mats, off = [], 0
    for B in (base.u, base.v, base.w):
        n = B.shape[0]
        m = n * (n - 1) // 2
        R = expm(_skew(theta[off:off + m], n)) if m else np.eye(n)
        mats.append(R @ B)
        off += m
    return BasisTriple(*mats)


def sample_bases(dims, n: int, seed: int) -> list:
    """Identity triple followed by seeded Haar-random orthonormal triples."""
    rng = np.random.default_rng(seed)
    out = [BasisTriple.standard(*dims)]
    for _ in range(max(n - 1, 0)):
        out.append(BasisTriple(*(random_orthogonal(m, rng) for m in dims)))
    return out


@dataclass
class _Eval:
    bases: BasisTriple
    margins: np.ndarray
    bottleneck: float
    log_floor: float


def _evaluate(Q, bases, cfg) -> _Eval:
    coefs = coefficient_vector(Q.transformed(bases))
    marg = relative_margins(Q, coefs)
    bn = bottleneck_margin(Q, bases, eps_coef=cfg.eps_coef, margins=marg)
    lf, _ = log_ratio_floor(Q, bases, ymax=cfg.ymax, coefs=coefs)
    return _Eval(bases, marg, bn, lf)


def _map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _descend(Q, start: BasisTriple, cfg) -> BasisTriple:
    npar = _nparams(Q.dims)
    if npar == 0:
        return start
    def obj(th):
        return log_ratio_floor(Q, _rotate(start, th), ymax=cfg.ymax)[0]
    res = minimize(obj, np.zeros(npar), method="Powell",
                   options={"maxfev": cfg.descent_evals, "xtol": 1e-10, "ftol": 1e-12})
    return _rotate(start, res.x)


def _polish(Q, start: BasisTriple, margins: np.ndarray, level: float) -> BasisTriple:
    """Drive the coefficients at or below ``level`` to zero by least squares."""
    npar = _nparams(Q.dims)
    target = np.nonzero(margins <= level * (1 + 1e-9))[0]
    if npar == 0 or target.size == 0:
        return start
    lay = layout(*Q.dims)
    scale = max(Q.norm, 1e-300) ** lay.orders[target]
    def resid(th):
        return coefficient_vector(Q.transformed(_rotate(start, th)))[target] / scale
    res = least_squares(resid, np.zeros(npar), xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
    return _rotate(start, res.x)


def _ensemble(Q, ev: _Eval, cfg) -> dict | None:
    d1, k, d = Q.dims
    s = main_order(k, d)
    lay = layout(d1, k, d)
    keep = np.nonzero(ev.margins >= max(ev.bottleneck, cfg.eps_coef))[0]
    P = np.vstack([np.zeros(d1 + k + d), lay.points[keep]])
    res = hull_membership(P, scaling_point(d1, k, d, s), (d1, k, d),
                          query_exact=scaling_point_exact(d1, k, d, s))
    if not isinstance(res, InHull):
        return None
    labels = [_origin(Q.dims)] + [lay.triples[j] for j in keep]
    marg = [math.inf] + [float(ev.margins[j]) for j in keep]
    w = res.exact_weights if res.exact_weights is not None else [Fraction(float(a)) for a in res.weights]
    entries = [(w[i], labels[i], marg[i]) for i in range(len(labels)) if w[i] != 0]
    return {"bases": ev.bases, "bottleneck": ev.bottleneck, "entries": entries}


def _try_witness(Q, ev: _Eval, cfg):
    d1, k, d = Q.dims
    s = main_order(k, d)
    lay = layout(d1, k, d)
    keep = ev.margins > cfg.eps_coef
    P = np.vstack([np.zeros(d1 + k + d), lay.points[keep]])
    res = hull_membership(P, scaling_point(d1, k, d, s), (d1, k, d),
                          query_exact=scaling_point_exact(d1, k, d, s))
    if not isinstance(res, Outside) or res.margin <= 0:
        return None
    w = witness_from_functional(res.x, ev.bases)
    try:
        w.check_traces()
    except TraceViolation:
        return None
    taus = np.linspace(0.0, cfg.tau_max, cfg.n_tau)
    rep = witness_check(Q, w, taus, cfg.slope_floor)
    return (w, rep) if rep.accepted else None


def verdict(Q: TrilinearForm, config: VerdictConfig | None = None) -> Verdict:
    cfg = config or VerdictConfig()
    dims = Q.dims
    stats = {"n_samples": cfg.n_samples, "descent_starts": cfg.descent_starts,
             "descent_evals": cfg.descent_evals, "seed": cfg.seed, "eps_coef": cfg.eps_coef,
             "margin_floor": cfg.margin_floor,
             "semantics": "Degenerate is certified by a checked witness; Nondegenerate holds "
                          "at the confidence of the sampled and optimized basis search"}
    if Q.norm == 0:
        base = BasisTriple.standard(*dims)
        ev = _Eval(base, np.zeros(len(layout(*dims).triples)), 0.0, -math.inf)
        found = _try_witness(Q, ev, cfg)
        stats.update(stage="zero form", min_bottleneck=0.0)
        if found:
            return Verdict("Degenerate", witness=found[0], decay=found[1], search_stats=stats)
        return Verdict("Inconclusive", search_stats=stats)

    evals = _map(lambda b: _evaluate(Q, b, cfg), sample_bases(dims, cfg.n_samples, cfg.seed),
                 cfg.threads)
    boundary_hits = 0
    for ev in evals:
        if ev.bottleneck == 0.0:
            found = _try_witness(Q, ev, cfg)
            if found:
                stats.update(stage="sampling", min_bottleneck=0.0,
                             evaluated=len(evals), boundary_hits=boundary_hits)
                return Verdict("Degenerate", witness=found[0], decay=found[1], search_stats=stats)
        if ev.bottleneck <= cfg.margin_floor:
            boundary_hits += 1

    order = sorted(range(len(evals)), key=lambda i: (evals[i].log_floor, evals[i].bottleneck))
    starts = [evals[i].bases for i in order[:cfg.descent_starts]]
    descended = _map(lambda b: _evaluate(Q, _descend(Q, b, cfg), cfg), starts, cfg.threads)
    for ev in descended:
        if ev.bottleneck == 0.0 or ev.bottleneck <= cfg.margin_floor or ev.log_floor < -10:
            sorted_m = np.sort(ev.margins[ev.margins > 0])
            candidates = [ev.bottleneck] if ev.bottleneck > 0 else list(sorted_m)
            for lvl in candidates:
                pol = _polish(Q, ev.bases, ev.margins, lvl)
                pev = _evaluate(Q, pol, cfg)
                found = _try_witness(Q, pev, cfg) if pev.bottleneck == 0.0 else None
                if found:
                    stats.update(stage="descent+polish", min_bottleneck=0.0,
                                 evaluated=len(evals) + len(descended))
                    return Verdict("Degenerate", witness=found[0], decay=found[1],
                                   search_stats=stats)
    allev = evals + descended
    worst = sorted(allev, key=lambda e: (e.bottleneck, e.log_floor))
    min_bn = worst[0].bottleneck
    min_lf = min(e.log_floor for e in allev)
    stats.update(stage="search", evaluated=len(allev), min_bottleneck=min_bn,
                 min_log_ratio_floor=min_lf, boundary_hits=boundary_hits,
                 normalized_ratio_floor=math.exp(min_lf / 2))
    if min_bn > cfg.margin_floor:
        cert = []
        for ev in worst[:cfg.n_certificates]:
            e = _ensemble(Q, ev, cfg)
            if e is not None:
                cert.append(e)
        return Verdict("Nondegenerate", certificate=cert, search_stats=stats)
    stats["budget_exhausted"] = True
    return Verdict("Inconclusive", search_stats=stats)


def verify_certificate(Q: TrilinearForm, ensemble: dict, eps_coef=1e-9, tol=1e-9) -> bool:
    """Independent re-check: weights, the weighted average, and coefficient support."""
    d1, k, d = Q.dims
    o = scaling_point_exact(d1, k, d, main_order(k, d))
    ws = [w for w, _, _ in ensemble["entries"]]
    if any(w < 0 for w in ws) or abs(float(sum(ws)) - 1) > tol:
        return False
    avg = [sum(Fraction(w) * (a + b + c)[i] for w, (a, b, c), _ in ensemble["entries"])
           for i in range(d1 + k + d)]
    if max(abs(float(x - y)) for x, y in zip(avg, o)) > tol:
        return False
    from .qcalc import derivative_coefficient
    nrm = Q.norm
    for _, tr, _ in ensemble["entries"]:
        if sum(tr[0]) == 0:
            continue
        c = derivative_coefficient(Q, ensemble["bases"], tr)
        if abs(c) <= eps_coef * nrm ** sum(tr[0]):
            return False
    return True


# -- stability -------------------------------------------------------------------------

def ratio_floor(Q: TrilinearForm, n_samples: int = 32, seed: int = 0, descent_starts: int = 2,
                ymax: float = 25.0, descent_evals: int = 300) -> float:
    """Estimated infimum over all bases of the normalized curvature ratio."""
    if Q.norm == 0:
        return 0.0
    cfg = VerdictConfig(n_samples=n_samples, seed=seed, ymax=ymax, descent_evals=descent_evals)
    vals = [log_ratio_floor(Q, b, ymax=ymax) for b in sample_bases(Q.dims, n_samples, seed)]
    order = np.argsort([v[0] for v in vals], kind="stable")[:descent_starts]
    bases = sample_bases(Q.dims, n_samples, seed)
    best = min(v[0] for v in vals)
    for i in order:
        b = _descend(Q, bases[i], cfg)
        best = min(best, log_ratio_floor(Q, b, ymax=ymax)[0])
    return math.exp(best / 2)


@dataclass
class StabilityReport:
    radius: float
    margin: float                # min normalized ratio floor over perturbations
    unperturbed: float
    max_radius: float            # largest tested radius with margin above the floor
    n_perturbations: int


def stability_margin(Q: TrilinearForm, radius: float, n_perturbations: int = 8, seed: int = 0,
                     n_samples: int = 24, floor: float = 1e-6, bisection_steps: int = 6,
                     check_verdict: bool = True) -> StabilityReport:
    if check_verdict:
        v = verdict(Q, VerdictConfig(n_samples=n_samples, seed=seed))
        if v.status != "Nondegenerate":
            raise NotNondegenerate(f"verdict is {v.status}")
    rng = np.random.default_rng(seed)
    dirs = []
    for _ in range(n_perturbations):
        E = rng.standard_normal(Q.dims)
        dirs.append(E / np.linalg.norm(E))
    base = ratio_floor(Q, n_samples, seed)

    def margin_at(r):
        if r == 0:
            return base
        if r >= Q.norm:
            return 0.0                  # the ball contains the zero form
        return min(ratio_floor(TrilinearForm(Q.coeffs + r * E), n_samples, seed) for E in dirs)

    m = margin_at(radius)
    lo, hi = 0.0, Q.norm
    for _ in range(bisection_steps):
        mid = 0.5 * (lo + hi)
        if margin_at(mid) > floor:
            lo = mid
        else:
            hi = mid
    return StabilityReport(radius, m, base, lo, n_perturbations)
