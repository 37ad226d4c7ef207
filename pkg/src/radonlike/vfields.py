"""Vector fields built from Jacobian minors, generation by generation.

Given functions ``f^1..f^m`` of ``d`` variables with a rank-``d`` Jacobian, a
choice of ``d`` components with a dominant Jacobian minor yields ``d``
rational vector fields that act as half the dual basis to those components.
Applying every field to every function produces the next family of
functions, and the construction repeats.  All fields are kept as exact
rational functions; float evaluation is used only for minor selection, the
guard predicate, and sampled bounds.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import EmptyGuard, RankDeficient, ZeroMeasure
from .poly import Poly, RationalFunction, det

MAX_GENERATION = 3
CHECK_TOL = 1e-8


def as_rational(f, nvars: int | None = None) -> list[RationalFunction]:
    out = []
    for g in f:
        if isinstance(g, RationalFunction):
            out.append(g)
        elif isinstance(g, Poly):
            out.append(RationalFunction(g))
        else:
            out.append(RationalFunction.const(nvars, g))
    return out


@dataclass(frozen=True)
class Component:
    """A function ``X^alpha f^j``; ``alpha`` lists ``(generation, field index)`` pairs
    in order of application."""
    j: int
    alpha: tuple
    func: RationalFunction

    @property
    def generation(self) -> int:
        return self.alpha[-1][0] if self.alpha else 0

    def label(self) -> str:
        ops = "".join(f"X{i + 1}^({g})" for g, i in reversed(self.alpha))
        return f"{ops}f{self.j + 1}"


def _gradients(funcs, d):
    return [[g.diff(l) for l in range(d)] for g in funcs]


def _eval_jacobian(grads, points) -> np.ndarray:
    """Numeric Jacobians, shape ``(P, M, d)``."""
    P = len(points)
    J = np.zeros((P, len(grads), len(grads[0]) if grads else 0))
    for a, row in enumerate(grads):
        for l, g in enumerate(row):
            if not g.is_zero():
                J[:, a, l] = g.eval_many(points)
    return J


def _all_minors(J: np.ndarray, d: int):
    subsets = list(itertools.combinations(range(J.shape[1]), d))
    idx = np.array(subsets)
    mats = J[:, idx, :]                     # (P, C, d, d)
    return subsets, np.linalg.det(mats)


@dataclass
class MinorChoice:
    minor: tuple
    mean_abs: float
    guard_mask: np.ndarray            # probes satisfying max |jac_I| < 2 |jac_minor|


def select_minor(funcs, probes, grads=None) -> MinorChoice:
    """Minor with the largest mean absolute Jacobian over the probes.

    Ties (within a relative 1e-12) go to the lexicographically first index tuple.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    d = probes.shape[1]
    funcs = list(funcs)
    if grads is None:
        grads = _gradients(funcs, d)
    J = _eval_jacobian(grads, probes)
    subsets, minors = _all_minors(J, d)
    absm = np.abs(minors)
    top = absm.max(axis=1)
    if not np.any(top > 1e-12):
        raise RankDeficient("Jacobian is rank deficient at every probe")
    means = absm.mean(axis=0)
    best = means.max()
    c = next(i for i, m in enumerate(means) if m >= best * (1 - 1e-12))
    guard = top < 2 * absm[:, c]
    return MinorChoice(subsets[c], float(means[c]), guard)


def guard_predicate(grads, minor, points) -> np.ndarray:
    """``max_I |jac_I| < 2 |jac_minor|`` at each point."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    d = points.shape[1]
    J = _eval_jacobian(grads, points)
    subsets, minors = _all_minors(J, d)
    c = subsets.index(tuple(minor))
    absm = np.abs(minors)
    return absm.max(axis=1) < 2 * absm[:, c]


@dataclass
class VFGeneration:
    N: int
    fields: list                     # d lists of d RationalFunction coordinates
    minor: tuple                     # indices into the input family
    jac: RationalFunction
    inputs: list                     # Component list the fields were built from
    grads: list = field(repr=False, default_factory=list)

    @property
    def d(self) -> int:
        return len(self.fields)

    def targets(self):
        """The components ``X^{alpha_i} f^{j_i}`` on which the fields are dual."""
        return [self.inputs[a] for a in self.minor]

    def apply(self, i: int, g: RationalFunction) -> RationalFunction:
        out = None
        for l, coord in enumerate(self.fields[i]):
            if coord.is_zero():
                continue
            dg = g.diff(l)
            if dg.is_zero():
                continue
            term = coord * dg
            out = term if out is None else out + term
        return out if out is not None else RationalFunction.const(g.nvars, 0)

    def guard(self, points) -> np.ndarray:
        return guard_predicate(self.grads, self.minor, points)

    def matrix_at(self, points) -> np.ndarray:
        """Field coordinates, shape ``(P, d, d)`` with columns the fields."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros((len(points), self.d, self.d))
        for i, X in enumerate(self.fields):
            for l, c in enumerate(X):
                if not c.is_zero():
                    out[:, l, i] = c.eval_many(points)
        return out


def gen1_fields(funcs, minor, N: int = 1, inputs=None, grads=None) -> VFGeneration:
    """Fields ``X_i phi = (-1)^(i-1) det d(phi, f^{j_1}..omit j_i..f^{j_d})/dx / (2 jac)``."""
    funcs = as_rational(funcs)
    d = funcs[0].nvars
    if grads is None:
        grads = _gradients(funcs, d)
    rows = [grads[a] for a in minor]
    jac = det(rows)
    if jac.is_zero():
        raise RankDeficient("selected minor vanishes identically")
    two_jac = jac * 2
    zero = RationalFunction.const(d, 0)
    one = RationalFunction.const(d, 1)
    fields = []
    for i in range(d):
        others = [rows[b] for b in range(d) if b != i]
        sign = 1 if i % 2 == 0 else -1
        coords = []
        for l in range(d):
            e = [one if c == l else zero for c in range(d)]
            cof = det([e] + others)
            if isinstance(cof, (int, Fraction)):
                cof = RationalFunction.const(d, cof)
            coords.append(cof * sign / two_jac if not cof.is_zero() else zero)
        fields.append(coords)
    if inputs is None:
        inputs = [Component(j, (), g) for j, g in enumerate(funcs)]
    return VFGeneration(N, fields, tuple(minor), jac, inputs, grads)


def next_family(prev: list, gen: VFGeneration) -> list:
    """``f^(N)``: the previous family followed by every field applied to every member."""
    out = list(prev)
    for i in range(gen.d):
        for c in prev:
            out.append(Component(c.j, c.alpha + ((gen.N, i),), gen.apply(i, c.func)))
    return out


@dataclass
class VFState:
    generations: list                # VFGeneration list
    families: list                   # families[N] = f^(N) as Component lists
    probes: np.ndarray               # all probes
    mask: np.ndarray                 # probes inside every guard so far

    @property
    def N(self):
        return len(self.generations)


def start(f, probes) -> VFState:
    funcs = as_rational(f)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    fam = [Component(j, (), g) for j, g in enumerate(funcs)]
    return VFState([], [fam], probes, np.ones(len(probes), dtype=bool))


def iterate_generation(state: VFState) -> VFState:
    """Build generation ``N+1`` from the family ``f^(N)`` on the current guard."""
    fam = state.families[-1]
    inside = state.probes[state.mask]
    if len(inside) == 0:
        raise EmptyGuard("no probe lies in every guard")
    d = state.probes.shape[1]
    funcs = [c.func for c in fam]
    grads = _gradients(funcs, d)
    choice = select_minor(funcs, inside, grads)
    gen = gen1_fields(funcs, choice.minor, N=state.N + 1, inputs=fam, grads=grads)
    mask = state.mask.copy()
    mask[state.mask] = choice.guard_mask
    if not mask.any():
        raise EmptyGuard("guards have empty intersection over the probes")
    new_fam = next_family(fam, gen)
    return VFState(state.generations + [gen], state.families + [new_fam], state.probes, mask)


def build(f, probes, N: int = 2) -> VFState:
    if N > MAX_GENERATION:
        raise ValueError(f"generations are capped at {MAX_GENERATION}")
    st = start(f, probes)
    for _ in range(N):
        st = iterate_generation(st)
    return st


def component_count(m: int, d: int, N: int) -> int:
    return m * (d + 1) ** N


# -- identity checks --------------------------------------------------------------

def kronecker_exact(gen: VFGeneration) -> bool:
    """``2 X_i g_{i'} - delta`` is the zero rational function for the dual targets."""
    for i in range(gen.d):
        for ip, tgt in enumerate(gen.targets()):
            r = gen.apply(i, tgt.func) * 2 - (1 if i == ip else 0)
            if not r.is_zero():
                return False
    return True


def determinant_identity_exact(gen: VFGeneration) -> bool:
    """``|jac * det(X_1..X_d)| = 2^-d`` as rational functions."""
    cols = [[gen.fields[i][l] for i in range(gen.d)] for l in range(gen.d)]
    prod = gen.jac * det(cols)
    target = Fraction(1, 2 ** gen.d)
    return prod.equals(target) or prod.equals(-target)


@dataclass
class IdentityReport:
    N: int
    kronecker_exact: bool
    determinant_exact: bool
    kronecker_residual: float
    determinant_residual: float
    sup_abs: float                      # sup |X^alpha f^j| over guard probes
    coef_sup: float                     # sup |c_i^i'| against earlier generations
    decomposition_residual: float
    n_inside: int
    n_excluded: int

    @property
    def passed(self) -> bool:
        return (self.kronecker_exact and self.determinant_exact
                and self.kronecker_residual < CHECK_TOL
                and self.determinant_residual < CHECK_TOL
                and self.sup_abs <= 1 + 1e-9 and self.coef_sup <= 2 + 1e-9
                and self.decomposition_residual < CHECK_TOL)


def verify_identities(state: VFState, N: int | None = None, exact: bool = True) -> IdentityReport:
    N = state.N if N is None else N
    gen = state.generations[N - 1]
    mask = state.mask if N == state.N else _mask_upto(state, N)
    pts = state.probes[mask]
    d = gen.d
    kres = 0.0
    for i in range(d):
        for ip, tgt in enumerate(gen.targets()):
            val = gen.apply(i, tgt.func).eval_many(pts)
            kres = max(kres, float(np.max(np.abs(val - (0.5 if i == ip else 0.0)), initial=0.0)))
    M = gen.matrix_at(pts)
    jv = gen.jac.eval_many(pts)
    dres = float(np.max(np.abs(np.abs(jv * np.linalg.det(M)) - 2.0 ** -d), initial=0.0))
    sup = 0.0
    for c in state.families[N]:
        if c.func.is_zero():
            continue
        sup = max(sup, float(np.max(np.abs(c.func.eval_many(pts)), initial=0.0)))
    csup, decomp = 0.0, 0.0
    for Np in range(1, N):
        old = state.generations[Np - 1]
        C = np.zeros((len(pts), d, d))         # C[:, i, i']
        for i in range(d):
            for ip, tgt in enumerate(old.targets()):
                C[:, i, ip] = 2 * gen.apply(i, tgt.func).eval_many(pts)
        csup = max(csup, float(np.max(np.abs(C), initial=0.0)))
        Mold = old.matrix_at(pts)
        recon = np.einsum("pli,pji->plj", Mold, C)
        decomp = max(decomp, float(np.max(np.abs(recon - M), initial=0.0)))
    kex = kronecker_exact(gen) if exact else True
    dex = determinant_identity_exact(gen) if exact else True
    return IdentityReport(N, kex, dex, kres, dres, sup, csup, decomp,
                          int(mask.sum()), int((~mask).sum()))


def _mask_upto(state: VFState, N: int) -> np.ndarray:
    mask = np.ones(len(state.probes), dtype=bool)
    for gen in state.generations[:N]:
        m = np.zeros_like(mask)
        m[mask] = gen.guard(state.probes[mask])
        mask = m
    return mask


# -- discrete Chebyshev step -----------------------------------------------------------

@dataclass
class ChebyshevSubset:
    mask: np.ndarray
    threshold: float
    ratio: float                 # W(E1) / W(E0 and guard)


def chebyshev_subset(W, jac, region=None, cell: float = 1.0) -> ChebyshevSubset:
    """Cells of ``region`` where ``|jac| / W`` stays below twice its W-average."""
    W = np.asarray(W, dtype=float)
    jac = np.abs(np.asarray(jac, dtype=float))
    region = np.ones(W.shape, dtype=bool) if region is None else np.asarray(region, dtype=bool)
    total_w = float(np.sum(W[region])) * cell
    if total_w <= 0:
        raise ZeroMeasure("weight vanishes on the region")
    thr = 2.0 * float(np.sum(jac[region])) * cell / total_w
    pos = region & (W > 0)
    mask = np.zeros(W.shape, dtype=bool)
    mask[pos] = jac[pos] / W[pos] < thr
    ratio = float(np.sum(W[mask])) * cell / total_w
    return ChebyshevSubset(mask, thr, ratio)


def box_probes(d: int, n: int, lo=0.0, hi=0.5, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return lo + (hi - lo) * rng.random((n, d))
