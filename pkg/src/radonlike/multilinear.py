"""Linear algebra on ordered lists of vectors.

A vector list is a 2-D array whose *rows* are the vectors.  The quantity
these routines care about is the quadratic frame ``sum_i <x, v_i>^2``; two
lists with the same frame give identical sums of squares for every
multilinear functional, which is what makes the curvature norm independent
of the representative basis.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ChainViolation, DependentInput, RankDeficient, SingularBasis

RANK_TOL = 1e-10


def as_vectors(v) -> np.ndarray:
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if v.ndim != 2:
        raise ValueError("vector list must be two-dimensional")
    return v


def is_independent(v, tol=RANK_TOL) -> bool:
    v = as_vectors(v)
    if v.shape[0] > v.shape[1]:
        return False
    s = np.linalg.svd(v, compute_uv=False)
    return s.size > 0 and s[-1] > tol * s[0]


def _require_independent(v):
    if not is_independent(v):
        raise DependentInput("vectors are linearly dependent (relative tolerance %g)" % RANK_TOL)


def frame_matrix(v) -> np.ndarray:
    """Gram operator ``sum_i v_i v_i^T``."""
    v = as_vectors(v)
    return v.T @ v


def orthonormal_span(v, tol=RANK_TOL) -> np.ndarray:
    """Orthonormal rows spanning the row space of ``v``."""
    v = as_vectors(v)
    if v.size == 0:
        return np.zeros((0, v.shape[1]))
    _, s, vt = np.linalg.svd(v, full_matrices=False)
    r = int(np.sum(s > tol * max(s[0], 1e-300)))
    return vt[:r]


def make_chain(spaces, tol=1e-9) -> list[np.ndarray]:
    """Validate a decreasing chain of subspaces, each given by spanning rows."""
    chain = [orthonormal_span(s) for s in spaces]
    for a, b in zip(chain, chain[1:]):
        resid = b - (b @ a.T) @ a
        if resid.size and np.max(np.abs(resid)) > tol:
            raise ChainViolation("chain is not decreasing")
        if b.shape[0] > a.shape[0]:
            raise ChainViolation("chain is not decreasing")
    return chain


def realign_basis(v, chain) -> np.ndarray:
    """New basis of span(v) with the same frame whose tail spans each chain member.

    The output ``u`` satisfies ``sum <x,u_i><u_i,y> = sum <x,v_i><v_i,y>`` and,
    for every space ``V_j`` in the chain, the last ``dim V_j`` vectors of ``u``
    span ``V_j``.  Within each gap the vectors come out in Gram-Schmidt order.
    """
    v = as_vectors(v)
    _require_independent(v)
    top = orthonormal_span(v)
    spaces = make_chain([top] + [as_vectors(c) for c in chain])
    if spaces[0].shape[0] != top.shape[0]:
        raise ChainViolation("first space must equal span(v)")
    resid = spaces[0] - (spaces[0] @ top.T) @ top
    if np.max(np.abs(resid)) > 1e-9:
        raise ChainViolation("chain is not contained in span(v)")

    # orthonormal e_1..e_m with the last dim V_j of them spanning V_j
    tail = np.zeros((0, v.shape[1]))
    for space in reversed(spaces):
        for row in space:
            r = row.copy()
            if tail.size:
                for _ in range(2):
                    r -= (r @ tail.T) @ tail
            nr = np.linalg.norm(r)
            if tail.shape[0] < space.shape[0] and nr > 1e-8:
                tail = np.vstack([r / nr, tail])
    e = tail
    G = frame_matrix(v)
    A = e @ G @ e.T
    L = np.linalg.cholesky(A)
    et = np.linalg.solve(L, e)          # B-orthonormal, lower-triangular in e
    return et @ G


def orthogonalize_preserving(v) -> np.ndarray:
    """Mutually orthogonal vectors with the same span and the same frame."""
    v = as_vectors(v)
    _require_independent(v)
    A = v @ v.T
    off = A - np.diag(np.diag(A))
    if np.max(np.abs(off), initial=0.0) <= 1e-14 * max(np.max(np.abs(A)), 1e-300):
        return v.copy()
    lam, O = np.linalg.eigh(A)
    order = np.argsort(-lam, kind="stable")
    O = O[:, order]
    for j in range(O.shape[1]):
        i = int(np.argmax(np.abs(O[:, j])))
        if O[i, j] < 0:
            O[:, j] = -O[:, j]
    return O.T @ v


@dataclass
class FrameCheck:
    equivalent: bool
    O: np.ndarray | None = None
    probe: np.ndarray | None = None
    gap: float = 0.0


def frame_equivalent(v, w, tol=1e-9) -> FrameCheck:
    """Decide whether ``v_i = sum_j O_ij w_j`` for an orthogonal ``O``.

    On failure a probe ``x`` is returned for which the linear functional
    ``L(y) = <x, y>`` has different frame sums on the two lists.
    """
    v, w = as_vectors(v), as_vectors(w)
    if v.shape != w.shape:
        raise ValueError("lists must have the same shape")
    _require_independent(v)
    _require_independent(w)
    scale = max(np.linalg.norm(v), np.linalg.norm(w), 1.0)
    O = v @ np.linalg.pinv(w)
    ok = (np.linalg.norm(O @ w - v) <= tol * scale
          and np.linalg.norm(O.T @ O - np.eye(O.shape[0])) <= tol)
    if ok:
        return FrameCheck(True, O=O)
    delta = frame_matrix(v) - frame_matrix(w)
    lam, X = np.linalg.eigh(delta)
    j = int(np.argmax(np.abs(lam)))
    probe = X[:, j]
    i = int(np.argmax(np.abs(probe)))
    if probe[i] < 0:
        probe = -probe
    return FrameCheck(False, probe=probe, gap=float(abs(lam[j])))


def dual_basis(v) -> np.ndarray:
    """Rows ``v*_j`` with ``v_i . v*_j = delta_ij``."""
    v = as_vectors(v)
    if v.shape[0] != v.shape[1]:
        raise SingularBasis("dual basis needs a square basis")
    s = np.linalg.svd(v, compute_uv=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise SingularBasis("basis is singular")
    return np.linalg.inv(v).T


def kernel_onb(M, frac=0.5) -> np.ndarray:
    """Deterministic orthonormal basis of ker M.

    The standard basis vectors are projected onto the kernel and run through
    Gram-Schmidt; at each step the lowest-index candidate whose residual is at
    least ``frac`` times the largest residual is taken.  Nearby matrices thus
    give nearby bases, and each output vector has a positive coordinate at its
    pivot index.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    k, n = M.shape
    s = np.linalg.svd(M, compute_uv=False)
    if k >= n or s.size == 0 or s[-1] <= RANK_TOL * max(s[0], 1e-300) or s[0] == 0:
        raise RankDeficient("matrix is not of full row rank")
    P = np.eye(n) - np.linalg.pinv(M) @ M
    P = 0.5 * (P + P.T)
    basis = []
    remaining = list(range(n))
    for _ in range(n - k):
        best = None
        res = {}
        for i in remaining:
            r = P[:, i].copy()
            for z in basis:
                r -= (z @ r) * z
            res[i] = r
        norms = {i: np.linalg.norm(r) for i, r in res.items()}
        top = max(norms.values())
        for i in remaining:
            if norms[i] >= frac * top:
                best = i
                break
        z = res[best] / norms[best]
        for b in basis:                   # one re-orthogonalization pass
            z -= (b @ z) * b
        z /= np.linalg.norm(z)
        basis.append(z)
        remaining.remove(best)
    return np.array(basis)


def multilinear_frame_sum(L: np.ndarray, v) -> float:
    """``sum |L(v_{i_1}, ..., v_{i_k})|^2`` over all index tuples."""
    v = as_vectors(v)
    T = np.asarray(L, dtype=float)
    for _ in range(T.ndim):
        T = np.tensordot(T, v, axes=([0], [1]))
    return float(np.sum(T ** 2))


def random_orthogonal(n: int, rng) -> np.ndarray:
    """Haar-distributed orthogonal matrix."""
    if n == 0:
        return np.zeros((0, 0))
    A = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(A)
    return Q * np.sign(np.diag(R))


def gram_det(v) -> float:
    v = as_vectors(v)
    return float(np.sqrt(max(np.linalg.det(v @ v.T), 0.0)))


def subsets(n: int, r: int):
    return itertools.combinations(range(n), r)
