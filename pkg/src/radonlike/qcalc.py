"""Determinant polynomials of a trilinear form and the curvature norm.

For a trilinear form ``Q`` on R^d1 x R^k x R^d and an integer ``s``, the
order-``s`` determinant polynomial is

    Q_s(t, v_1..v_s, w_1..w_s) = det[ Q(t, v_a, w_b) ]_{a,b},

homogeneous of degree ``s`` in ``t``.  Its order-``s`` directional
derivatives along basis vectors of R^d1 are constants; they are the
coefficients whose support defines the Newton-type diagram, and the weighted
sum of their squares (plus one) is the curvature norm.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

from .errors import DimensionMismatch
from .multilinear import as_vectors, dual_basis


@dataclass(frozen=True)
class TrilinearForm:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 3:
            raise DimensionMismatch("trilinear form needs a 3-index tensor")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite tensor entries")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def d1(self):
        return self.coeffs.shape[0]

    @property
    def k(self):
        return self.coeffs.shape[1]

    @property
    def d(self):
        return self.coeffs.shape[2]

    @property
    def dims(self):
        return self.coeffs.shape

    @property
    def smax(self):
        return min(self.k, self.d)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.coeffs ** 2)))

    def __call__(self, u, v, w) -> float:
        return float(np.einsum("abc,a,b,c->", self.coeffs, u, v, w))

    def transformed(self, bases: "BasisTriple") -> np.ndarray:
        """Tensor of values ``Q(u_i, v_j, w_l)`` on the three bases."""
        return transform(self.coeffs, bases.u, bases.v, bases.w)

    @classmethod
    def zeros(cls, d1, k, d):
        return cls(np.zeros((d1, k, d)))


def transform(Q: np.ndarray, U, V, W) -> np.ndarray:
    """``Q(u_i, v_j, w_l)``; ``U, V, W`` may carry a common leading batch axis."""
    return np.einsum("...ia,...jb,...lc,abc->...ijl", U, V, W, Q, optimize=True)


@dataclass(frozen=True)
class BasisTriple:
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    dets: tuple = field(default=(), compare=False)

    def __post_init__(self):
        arrs = []
        for x in (self.u, self.v, self.w):
            a = as_vectors(x).copy()
            if a.shape[0] != a.shape[1]:
                raise DimensionMismatch("each basis must be square")
            a.setflags(write=False)
            arrs.append(a)
        object.__setattr__(self, "u", arrs[0])
        object.__setattr__(self, "v", arrs[1])
        object.__setattr__(self, "w", arrs[2])
        object.__setattr__(self, "dets", tuple(abs(float(np.linalg.det(a))) for a in arrs))

    @classmethod
    def standard(cls, d1, k, d):
        return cls(np.eye(d1), np.eye(k), np.eye(d))

    @property
    def dims(self):
        return (self.u.shape[0], self.v.shape[0], self.w.shape[0])

    def is_orthonormal(self, tol=1e-10) -> bool:
        return all(np.max(np.abs(a @ a.T - np.eye(a.shape[0])), initial=0.0) <= tol
                   for a in (self.u, self.v, self.w))

    def scaled(self, x1, x2, x3) -> "BasisTriple":
        """Rescale vector ``i`` of each basis by ``exp(x[i])``."""
        return BasisTriple(np.exp(np.asarray(x1))[:, None] * self.u,
                           np.exp(np.asarray(x2))[:, None] * self.v,
                           np.exp(np.asarray(x3))[:, None] * self.w)


# -- multi-index bookkeeping -------------------------------------------------

def multiindices(n: int, s: int):
    """All ``alpha`` in Z_{>=0}^n with ``|alpha| = s`` (lexicographically descending)."""
    out = []
    for combo in itertools.combinations_with_replacement(range(n), s):
        a = [0] * n
        for i in combo:
            a[i] += 1
        out.append(tuple(a))
    return out


def subset_indices(n: int, s: int):
    """0/1 multi-indices of size ``s``: the only ones with nonzero determinant."""
    out = []
    for combo in itertools.combinations(range(n), s):
        a = [0] * n
        for i in combo:
            a[i] = 1
        out.append(tuple(a))
    return out


def expand(alpha) -> tuple:
    """Multiset expansion: (2,0,1) -> (0,0,2)."""
    return tuple(i for i, a in enumerate(alpha) for _ in range(a))


def log_weight(alpha, beta, gamma) -> float:
    s = sum(alpha)
    lw = 3 * math.lgamma(s + 1)
    for m in (*alpha, *beta, *gamma):
        lw -= math.lgamma(m + 1)
    return lw


@dataclass(frozen=True)
class TripleLayout:
    """Index arrays for every diagram triple of given dimensions, grouped by order."""
    dims: tuple
    triples: tuple            # tuple of (alpha, beta, gamma)
    orders: np.ndarray        # order s of each triple
    weights: np.ndarray       # (s!)^3 / (alpha! beta! gamma!)
    points: np.ndarray        # concatenated lattice vectors, shape (T, d1+k+d)
    groups: tuple             # per s: (slice, A, B, C) with (n_s, s) index arrays


@lru_cache(maxsize=64)
def layout(d1: int, k: int, d: int) -> TripleLayout:
    triples, orders, weights, groups = [], [], [], []
    for s in range(1, min(k, d) + 1):
        start = len(triples)
        A, B, C = [], [], []
        for al in multiindices(d1, s):
            for be in subset_indices(k, s):
                for ga in subset_indices(d, s):
                    triples.append((al, be, ga))
                    orders.append(s)
                    weights.append(math.exp(log_weight(al, be, ga)))
                    A.append(expand(al))
                    B.append(expand(be))
                    C.append(expand(ga))
        groups.append((slice(start, len(triples)), np.array(A, dtype=int),
                       np.array(B, dtype=int), np.array(C, dtype=int)))
    pts = np.array([a + b + c for a, b, c in triples], dtype=float).reshape(len(triples), d1 + k + d)
    return TripleLayout((d1, k, d), tuple(triples), np.array(orders, dtype=int),
                        np.array(weights), pts, tuple(groups))


# -- derivative coefficients ---------------------------------------------------

def _coeffs_for_group(Qp: np.ndarray, A, B, C, method: str = "auto") -> np.ndarray:
    """Derivative coefficients for one order ``s`` group.

    ``Qp`` has shape (..., d1, k, d) and holds the form evaluated on the bases.
    Row ``r`` of the determinant is linear in ``t``; differentiating once along
    each of the ``s`` directions distributes the directions over the rows, so
    the result is a sum over permutations of ordinary determinants.  For large
    ``s`` the same number is obtained by polarization, which needs only 2^s
    determinants.
    """
    T, s = A.shape
    if T == 0:
        return np.zeros(Qp.shape[:-3] + (0,))
    rows = B[:, :, None]
    cols = C[:, None, :]
    if method == "auto":
        method = "perm" if s <= 3 else "polar"
    out = np.zeros(Qp.shape[:-3] + (T,))
    if method == "perm":
        for perm in itertools.permutations(range(s)):
            Ap = A[:, list(perm)][:, :, None]
            M = Qp[..., Ap, rows, cols]          # (..., T, s, s)
            out += np.linalg.det(M)
        return out
    # polarization over subsets of directions
    for mask in range(1, 1 << s):
        members = [j for j in range(s) if mask >> j & 1]
        sign = -1.0 if (s - len(members)) % 2 else 1.0
        M = 0
        for j in members:
            M = M + Qp[..., A[:, j][:, None, None], rows, cols]
        out += sign * np.linalg.det(M)
    return out


def coefficient_vector(Qp: np.ndarray, method: str = "auto") -> np.ndarray:
    """All derivative coefficients of the transformed tensor, ordered as in ``layout``."""
    d1, k, d = Qp.shape[-3:]
    lay = layout(d1, k, d)
    parts = [_coeffs_for_group(Qp, A, B, C, method) for _, A, B, C in lay.groups]
    if not parts:
        return np.zeros(Qp.shape[:-3] + (0,))
    return np.concatenate(parts, axis=-1)


def _check_triple(Q: TrilinearForm, triple):
    al, be, ga = (tuple(int(x) for x in t) for t in triple)
    if (len(al), len(be), len(ga)) != Q.dims:
        raise DimensionMismatch("multi-index lengths do not match the form")
    s = sum(al)
    if not (sum(be) == s == sum(ga)) or s < 1 or s > Q.smax:
        raise DimensionMismatch("need |alpha| = |beta| = |gamma| = s with 1 <= s <= min(k, d)")
    return al, be, ga, s


def qs_det(Q: TrilinearForm, t, vs, ws) -> float:
    """Determinant of the s x s matrix ``[Q(t, v_a, w_b)]``."""
    vs, ws = as_vectors(vs), as_vectors(ws)
    t = np.asarray(t, dtype=float)
    if t.shape != (Q.d1,) or vs.shape[1] != Q.k or ws.shape[1] != Q.d or len(vs) != len(ws):
        raise DimensionMismatch("qs_det arguments do not match the form")
    s = len(vs)
    if s < 1 or s > Q.smax:
        raise DimensionMismatch("order must satisfy 1 <= s <= min(k, d)")
    M = np.einsum("abc,a,ib,jc->ij", Q.coeffs, t, vs, ws)
    return float(np.linalg.det(M))


def derivative_coefficient(Q: TrilinearForm, bases: BasisTriple, triple, method="auto") -> float:
    """``(u . grad_t)^alpha Q_s(t, v_beta, w_gamma)`` for a multi-index triple."""
    al, be, ga, s = _check_triple(Q, triple)
    if bases.dims != Q.dims:
        raise DimensionMismatch("bases do not match the form")
    if max(be) > 1 or max(ga) > 1:
        return 0.0                            # repeated determinant columns
    Qp = Q.transformed(bases)
    A = np.array([expand(al)])
    B = np.array([expand(be)])
    C = np.array([expand(ga)])
    return float(_coeffs_for_group(Qp, A, B, C, method)[0])


def derivative_table(Q: TrilinearForm, bases: BasisTriple) -> dict:
    """Every coefficient with 0/1 ``beta`` and ``gamma``, keyed by triple."""
    if bases.dims != Q.dims:
        raise DimensionMismatch("bases do not match the form")
    lay = layout(*Q.dims)
    vals = coefficient_vector(Q.transformed(bases))
    return {tr: float(x) for tr, x in zip(lay.triples, vals)}


def weighted_squares(Qp: np.ndarray) -> np.ndarray:
    """Per-triple ``weight * coefficient^2`` for transformed tensors (batched)."""
    lay = layout(*Qp.shape[-3:])
    return lay.weights * coefficient_vector(Qp) ** 2


def script_q(Q: TrilinearForm, bases: BasisTriple) -> float:
    """Curvature norm of ``Q`` on the given (arbitrary) bases."""
    if bases.dims != Q.dims:
        raise DimensionMismatch("bases do not match the form")
    return float(np.sqrt(1.0 + np.sum(weighted_squares(Q.transformed(bases)))))


def script_q_batch(Q: TrilinearForm, U, V, W) -> np.ndarray:
    """Vectorized :func:`script_q` over a leading batch axis of bases."""
    Qp = transform(Q.coeffs, U, V, W)
    return np.sqrt(1.0 + np.sum(weighted_squares(Qp), axis=-1))


# -- sup-norm variant ------------------------------------------------------------

@lru_cache(maxsize=16)
def sphere_design(n: int) -> np.ndarray:
    """Deterministic direction set on S^{n-1}: axes, diagonals and Sobol points."""
    dirs = [np.eye(n), -np.eye(n)]
    signs = np.array(list(itertools.product([1.0, -1.0], repeat=n)))
    dirs.append(signs / np.sqrt(n))
    count = max(2 ** n * n * n, 1)
    if n > 1:
        from scipy.stats import norm as _norm
        pts = qmc.Sobol(n, scramble=True, seed=12345).random(count)
        g = _norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
        dirs.append(g / np.linalg.norm(g, axis=1, keepdims=True))
    D = np.vstack(dirs)
    return D


def _sphere_max(f, n: int, iters: int = 20) -> float:
    """Maximize |f| on the unit sphere: design search plus projected ascent polish."""
    D = sphere_design(n)
    vals = np.array([abs(f(c)) for c in D])
    c = D[int(np.argmax(vals))].copy()
    best = float(vals.max())
    if n == 1:
        return best
    h, step = 1e-6, 0.1
    for _ in range(iters):
        g = np.array([(abs(f(c + h * e)) - abs(f(c - h * e))) / (2 * h) for e in np.eye(n)])
        g -= (g @ c) * c
        if np.linalg.norm(g) < 1e-14:
            break
        while step > 1e-8:
            trial = c + step * g / np.linalg.norm(g)
            trial /= np.linalg.norm(trial)
            ft = abs(f(trial))
            if ft > best:
                c, best = trial, ft
                step *= 1.5
                break
            step *= 0.5
    return best


def script_q_sup(Q: TrilinearForm, bases: BasisTriple) -> float:
    """Curvature norm with derivatives replaced by sup over the ellipsoid ``B_u``."""
    if bases.dims != Q.dims:
        raise DimensionMismatch("bases do not match the form")
    Qv = np.einsum("abc,ib,lc->ail", Q.coeffs, bases.v, bases.w)   # Q(., v_i, w_l)
    U = bases.u
    total = 1.0
    for s in range(1, Q.smax + 1):
        fact2 = math.factorial(s) ** 2               # ordered tuples per pair of sets
        for I in itertools.combinations(range(Q.k), s):
            for L in itertools.combinations(range(Q.d), s):
                sub = Qv[:, list(I)][:, :, list(L)]

                def f(c, sub=sub):
                    return np.linalg.det(np.tensordot(c @ U, sub, axes=(0, 0)))

                m = _sphere_max(f, Q.d1)
                total += fact2 * m * m
    return float(np.sqrt(total))


# -- dual-basis identity ----------------------------------------------------------

def theta_columns_derivative(Theta: np.ndarray, vcols, us, ws) -> float:
    """``(u_1.grad)...(u_s.grad) det(v_cols, Theta(t, w_1), ..., Theta(t, w_s))``.

    ``Theta[i, j, l]`` is the j-th component of ``Theta(e_i, e_l)``.  Each
    ``Theta`` column is linear in ``t`` so the derivative distributes the
    directions over those columns.
    """
    s = len(us)
    total = 0.0
    for perm in itertools.permutations(range(s)):
        cols = list(vcols) + [np.einsum("ijl,i,l->j", Theta, us[perm[a]], ws[a]) for a in range(s)]
        total += np.linalg.det(np.array(cols).T)
    return float(total)


def dual_side_sum(Theta, u, v, w, weighted: bool = True) -> float:
    """Left-hand side of the dual-basis identity, by brute force over index tuples.

    With ``weighted`` the order-``s`` block is multiplied by ``s!/(k-s)!``,
    which turns the tuple sum into the one matching ``|det v|^2 Q[u, v*, w]^2``
    term by term (the raw tuple sums over-count by ``(k-s)!/s!``).
    """
    Theta = np.asarray(Theta, dtype=float)
    d1, k, d = Theta.shape
    u, v, w = as_vectors(u), as_vectors(v), as_vectors(w)
    total = 0.0
    for s in range(0, min(k, d) + 1):
        block = 0.0
        for vi in itertools.product(range(k), repeat=k - s):
            if len(set(vi)) < len(vi):
                continue
            vcols = [v[i] for i in vi]
            for wi in itertools.product(range(d), repeat=s):
                if len(set(wi)) < len(wi):
                    continue
                ws = [w[i] for i in wi]
                for ui in itertools.product(range(d1), repeat=s):
                    us = [u[i] for i in ui]
                    if s == 0:
                        val = np.linalg.det(np.array(vcols).T) if k else 1.0
                    else:
                        val = theta_columns_derivative(Theta, vcols, us, ws)
                    block += val * val
        if weighted:
            block *= math.factorial(s) / math.factorial(k - s)
        total += block
    return total


def dual_identity_rhs(Theta, u, v, w) -> float:
    """``|det v|^2 Q[u, v*, w]^2`` with ``Q(x, y, z) = y . Theta(x, z)``."""
    v = as_vectors(v)
    Q = TrilinearForm(np.asarray(Theta, dtype=float))
    bases = BasisTriple(u, dual_basis(v), w)
    return float(np.linalg.det(v)) ** 2 * script_q(Q, bases) ** 2
