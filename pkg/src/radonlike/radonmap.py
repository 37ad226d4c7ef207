"""Polynomial incidence maps phi: R^n x R^d1 -> R^k and what is read off them.

Variables are ordered ``x1..xn, t1..t_d1``.  Text format, one component per
line::

    # n=3 d1=1
    x2 + x1*t1
    -3/2*x1^2*t1 + 0.25*x3

Integer and ``a/b`` coefficients are exact; decimal coefficients are kept as
floats and written back with ``repr`` so round trips are bit-exact.
"""
from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BadDimensions, DimensionMismatch, ParseError, RankDeficient
from .multilinear import RANK_TOL, kernel_onb, orthonormal_span
from .poly import Poly
from .qcalc import TrilinearForm

DEGREE_CAP = 20
JSON_FORMAT = "radonlike.polymap/1"


@dataclass(frozen=True)
class PolynomialMap:
    n: int
    d1: int
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        for c in comps:
            if c.nvars != self.n + self.d1:
                raise DimensionMismatch("component has the wrong number of variables")
        object.__setattr__(self, "components", comps)

    @property
    def k(self):
        return len(self.components)

    @property
    def d(self):
        return self.n - self.k

    @property
    def degree(self):
        return max((c.degree() for c in self.components), default=0)

    def _pt(self, x, t):
        x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
        if x.shape != (self.n,) or t.shape != (self.d1,):
            raise DimensionMismatch(f"point must be (x in R^{self.n}, t in R^{self.d1})")
        return np.concatenate([x, t])

    def eval(self, x, t) -> np.ndarray:
        p = self._pt(x, t)
        return np.array([c.eval_many(p)[0] for c in self.components])

    def jacobian_x(self, x, t) -> np.ndarray:
        p = self._pt(x, t)
        return np.array([[c.diff(l).eval_many(p)[0] for l in range(self.n)]
                         for c in self.components]).reshape(self.k, self.n)

    def jacobian_t(self, x, t) -> np.ndarray:
        p = self._pt(x, t)
        return np.array([[c.diff(self.n + i).eval_many(p)[0] for i in range(self.d1)]
                         for c in self.components]).reshape(self.k, self.d1)

    def mixed_hessian(self, x, t) -> np.ndarray:
        """``H[j, i, l] = d^2 phi^j / dt^i dx^l``."""
        p = self._pt(x, t)
        H = np.zeros((self.k, self.d1, self.n))
        for j, c in enumerate(self.components):
            for i in range(self.d1):
                ci = c.diff(self.n + i)
                for l in range(self.n):
                    H[j, i, l] = ci.diff(l).eval_many(p)[0]
        return H

    def __eq__(self, other):
        return (isinstance(other, PolynomialMap) and self.n == other.n
                and self.d1 == other.d1 and self.components == other.components)

    def __hash__(self):
        return hash((self.n, self.d1, self.components))


@dataclass(frozen=True)
class BasePoint:
    x: tuple
    t: tuple

    @classmethod
    def origin(cls, phi: PolynomialMap):
        return cls((0.0,) * phi.n, (0.0,) * phi.d1)

    @classmethod
    def parse(cls, text: str, phi: PolynomialMap | None = None):
        """``"x1,x2,x3;t1"``; an empty string means the origin."""
        if not text.strip():
            if phi is None:
                raise ParseError("empty point without a map")
            return cls.origin(phi)
        parts = text.split(";")
        if len(parts) != 2:
            raise ParseError("point must look like 'x1,...,xn;t1,...,td1'")
        try:
            xs = tuple(float(a) for a in parts[0].split(",") if a.strip())
            ts = tuple(float(a) for a in parts[1].split(",") if a.strip())
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
        if phi is not None and (len(xs) != phi.n or len(ts) != phi.d1):
            raise ParseError("point dimensions do not match the map")
        return cls(xs, ts)


# -- text format -------------------------------------------------------------------

def _parse_coeff(tok: str):
    tok = tok.strip()
    if re.fullmatch(r"\d+", tok):
        return int(tok)
    if re.fullmatch(r"\d+/\d+", tok):
        a, b = tok.split("/")
        return Fraction(int(a), int(b))
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"bad coefficient {tok!r}") from None


def _split_terms(line: str):
    """Split a component at top-level signs (not exponent or float-exponent signs)."""
    pieces = re.split(r"(?<![eE^*/])([+-])", line.strip())
    terms = []
    if pieces[0].strip():
        terms.append((1, pieces[0]))
    for sgn, body in zip(pieces[1::2], pieces[2::2]):
        if not body.strip():
            raise ParseError(f"dangling sign in {line!r}")
        terms.append((-1 if sgn == "-" else 1, body))
    return terms


def parse_monomial(text: str, n: int, d1: int):
    exps = [0] * (n + d1)
    coeff = 1
    seen_coeff = False
    factors = [f.strip() for f in text.split("*") if f.strip()] if "**" not in text else None
    if factors is None:
        raise ParseError("use '^' for exponents")
    for f in factors:
        m = re.fullmatch(r"([xt])(\d+)(?:\^(\d+))?", f)
        if m:
            idx = int(m.group(2)) - 1
            power = int(m.group(3) or 1)
            if m.group(1) == "x":
                if not 0 <= idx < n:
                    raise ParseError(f"variable {f} out of range for n={n}")
                exps[idx] += power
            else:
                if not 0 <= idx < d1:
                    raise ParseError(f"variable {f} out of range for d1={d1}")
                exps[n + idx] += power
        else:
            if seen_coeff:
                raise ParseError(f"two coefficients in monomial {text!r}")
            coeff = _parse_coeff(f)
            seen_coeff = True
    return tuple(exps), coeff


def _infer_dims(lines):
    n = d1 = 0
    for ln in lines:
        for m in re.finditer(r"([xt])(\d+)", ln):
            if m.group(1) == "x":
                n = max(n, int(m.group(2)))
            else:
                d1 = max(d1, int(m.group(2)))
    return n, d1


def parse_text(text: str, n: int | None = None, d1: int | None = None) -> PolynomialMap:
    body = []
    for raw in text.splitlines():
        ln = raw.strip()
        if not ln:
            continue
        if ln.startswith("#"):
            for key, val in re.findall(r"(n|d1)\s*=\s*(\d+)", ln):
                if key == "n" and n is None:
                    n = int(val)
                if key == "d1" and d1 is None:
                    d1 = int(val)
            continue
        body.append(ln)
    if not body:
        raise ParseError("no components")
    gn, gd = _infer_dims(body)
    n = gn if n is None else n
    d1 = gd if d1 is None else d1
    if n < 1:
        raise ParseError("could not determine n")
    comps = []
    for ln in body:
        terms = {}
        if ln == "0":
            comps.append(Poly(n + d1))
            continue
        for sign, tok in _split_terms(ln):
            e, c = parse_monomial(tok, n, d1)
            terms[e] = terms.get(e, 0) + sign * c
        p = Poly(n + d1, terms)
        if p.degree() > DEGREE_CAP:
            raise ParseError(f"degree {p.degree()} exceeds cap {DEGREE_CAP}")
        comps.append(p)
    return PolynomialMap(n, d1, tuple(comps))


def _fmt_coeff(c) -> str:
    if isinstance(c, float):
        return repr(c)
    if isinstance(c, Fraction):
        return f"{c.numerator}/{c.denominator}"
    return str(c)


def _fmt_monomial(e, c, n) -> str:
    names = []
    for i, a in enumerate(e):
        if a:
            v = f"x{i + 1}" if i < n else f"t{i - n + 1}"
            names.append(v if a == 1 else f"{v}^{a}")
    mag = -c if c < 0 else c
    if not names:
        return _fmt_coeff(mag)
    if mag == 1 and not isinstance(mag, float):
        return "*".join(names)
    return _fmt_coeff(mag) + "*" + "*".join(names)


def emit_text(phi: PolynomialMap) -> str:
    lines = [f"# n={phi.n} d1={phi.d1}"]
    for comp in phi.components:
        items = sorted(comp.terms.items(), key=lambda kv: (-sum(kv[0]), tuple(-a for a in kv[0])))
        if not items:
            lines.append("0")
            continue
        out = ""
        for j, (e, c) in enumerate(items):
            mono = _fmt_monomial(e, c, phi.n)
            neg = c < 0
            if j == 0:
                out = ("-" if neg else "") + mono
            else:
                out += (" - " if neg else " + ") + mono
        lines.append(out)
    return "\n".join(lines) + "\n"


def to_json(phi: PolynomialMap) -> str:
    comps = []
    for comp in phi.components:
        terms = [{"coeff": _fmt_coeff(c), "x": list(e[:phi.n]), "t": list(e[phi.n:])}
                 for e, c in sorted(comp.terms.items())]
        comps.append(terms)
    return json.dumps({"format": JSON_FORMAT, "n": phi.n, "d1": phi.d1, "components": comps},
                      sort_keys=True)


def from_json(text: str) -> PolynomialMap:
    try:
        obj = json.loads(text)
        n, d1 = int(obj["n"]), int(obj["d1"])
        comps = []
        for terms in obj["components"]:
            tm = {}
            for t in terms:
                e = tuple(t["x"]) + tuple(t["t"])
                c = t["coeff"]
                c = _parse_coeff(c) if isinstance(c, str) else c
                tm[e] = tm.get(e, 0) + c
            comps.append(Poly(n + d1, tm))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad polynomial map JSON: {exc}") from exc
    return PolynomialMap(n, d1, tuple(comps))


def load(path: str) -> PolynomialMap:
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return from_json(text)
    return parse_text(text)


# -- extraction ------------------------------------------------------------------

def _full_rank(M) -> bool:
    s = np.linalg.svd(M, compute_uv=False)
    return s.size > 0 and s[0] > 0 and s[-1] > RANK_TOL * s[0]


def extract_q(phi: PolynomialMap, p: BasePoint):
    """Curvature form at ``p`` and the kernel basis it was built with."""
    J = phi.jacobian_x(p.x, p.t)
    if phi.k >= phi.n or not _full_rank(J):
        raise RankDeficient("D_x phi is not of rank k at the base point")
    Z = kernel_onb(J)
    H = phi.mixed_hessian(p.x, p.t)                   # (k, d1, n)
    Q = np.einsum("jil,ml->ijm", H, Z)                # (d1, k, d)
    return TrilinearForm(Q), Z


@dataclass(frozen=True)
class ExponentSet:
    p_b: Fraction
    q_b: Fraction
    p_dual: Fraction
    q_dual: Fraction

    def as_floats(self):
        return tuple(float(a) for a in (self.p_b, self.q_b, self.p_dual, self.q_dual))


def best_exponents(n: int, k: int, d1: int) -> ExponentSet:
    if not (n > k >= 1 and d1 >= 1):
        raise BadDimensions("need n > k >= 1 and d1 >= 1")
    d, n1 = n - k, d1 + k
    p_b = Fraction(k * d, n * d1) + 1
    q_b = Fraction(n1 * d, k * d1) + 1
    p_dual = Fraction(n * d1, k * d) + 1
    q_dual = Fraction(k * d1, n1 * d) + 1
    return ExponentSet(p_b, q_b, p_dual, q_dual)


def defining_function(phi: PolynomialMap) -> PolynomialMap:
    """``pi^j(x, y) = -y^{d1+j} + phi^j(x, y^1..y^{d1})`` as a map on R^n x R^{n1}."""
    n, d1, k = phi.n, phi.d1, phi.k
    n1 = d1 + k
    nv = n + n1
    comps = []
    for j, c in enumerate(phi.components):
        terms = {}
        for e, coef in c.terms.items():
            terms[tuple(e) + (0,) * k] = coef
        y = [0] * nv
        y[n + d1 + j] = 1
        terms[tuple(y)] = terms.get(tuple(y), 0) - 1
        comps.append(Poly(nv, terms))
    return PolynomialMap(n, n1, tuple(comps))


def graph_substitution(phi: PolynomialMap) -> list[Poly]:
    """``pi(x, gamma_t(x))`` as polynomials in (x, t); identically zero by construction."""
    pi = defining_function(phi)
    nv = phi.n + phi.d1
    xs = [Poly.var(nv, i) for i in range(phi.n)]
    ts = [Poly.var(nv, phi.n + i) for i in range(phi.d1)]
    subs = xs + ts + list(phi.components)
    return [c.compose(subs) for c in pi.components]


def coarea_residuals(phi: PolynomialMap, points) -> np.ndarray:
    """Relative residuals ``|det(DtG^T DtG) - det(DyPi DyPi^T)|`` at (x, t) samples.

    ``DtG = [I; D_t phi]`` is the differential of the graph parametrization and
    ``DyPi = [D_t phi, -I]`` that of the defining function.
    """
    out = []
    for x, t in points:
        P = phi.jacobian_t(x, t)
        Dg = np.vstack([np.eye(phi.d1), P])
        Dp = np.hstack([P, -np.eye(phi.k)])
        a = np.linalg.det(Dg.T @ Dg)
        b = np.linalg.det(Dp @ Dp.T)
        out.append(abs(a - b) / max(abs(a), abs(b), 1.0))
    return np.array(out)


def coarea_identity_check(phi: PolynomialMap, points) -> float:
    r = coarea_residuals(phi, points)
    return float(r.max()) if r.size else 0.0


@dataclass(frozen=True)
class ModelMap:
    """Bilinear model ``x1 + Theta(t, x0)`` after rotating and normalizing ``M``."""
    M: np.ndarray             # D_{x1} phi in the rotated frame (k x k), before normalization
    theta: np.ndarray         # Theta[i, j, l]: component j of Theta(e_i, e_l), shape (d1, k, d)
    rotation: np.ndarray      # columns: kernel basis then complement, so x = R (x0, x1)
    base: BasePoint

    @property
    def form(self) -> TrilinearForm:
        return TrilinearForm(self.theta)

    def evaluate(self, x0, x1, t):
        return np.asarray(x1) + np.einsum("ijl,i,l->j", self.theta, t, x0)


def model_map(phi: PolynomialMap, p: BasePoint) -> ModelMap:
    J = phi.jacobian_x(p.x, p.t)
    if phi.k >= phi.n or not _full_rank(J):
        raise RankDeficient("D_x phi is not of rank k at the base point")
    Z = kernel_onb(J)
    Y = orthonormal_span(J)
    for j in range(Y.shape[0]):                    # sign convention: positive pivot
        i = int(np.argmax(np.abs(Y[j])))
        if Y[j, i] < 0:
            Y[j] = -Y[j]
    R = np.vstack([Z, Y]).T
    M = J @ Y.T
    H = phi.mixed_hessian(p.x, p.t)
    Theta_raw = np.einsum("jil,ml->ijm", H, Z)      # (d1, k, d)
    # x1 -> M^{-1} x1 turns M into the identity; Theta is re-expressed in the same output frame
    theta = np.einsum("ab,ibl->ial", np.linalg.inv(M), Theta_raw)
    return ModelMap(M, theta, R, p)


def hormander_check(phi: PolynomialMap, p: BasePoint):
    """Dimension of span{X_i, T_j, [T_j, X_i]} at ``p`` (and whether it is n + d1).

    ``X_i`` are the kernel fields of ``D_x phi`` and ``T_j = d/dt^j``.  Only
    the image of a bracket under ``D_x phi`` matters modulo the kernel, and it
    equals ``-(d/dt^j D_x phi) X_i``; the minimal-norm x-vector with that image
    represents the bracket.
    """
    J = phi.jacobian_x(p.x, p.t)
    if phi.k >= phi.n or not _full_rank(J):
        raise RankDeficient("D_x phi is not of rank k at the base point")
    Z = kernel_onb(J)
    H = phi.mixed_hessian(p.x, p.t)                  # d/dt^i of D_x phi = H[:, i, :]
    n, d1 = phi.n, phi.d1
    vecs = []
    for z in Z:
        vecs.append(np.concatenate([z, np.zeros(d1)]))
    for j in range(d1):
        e = np.zeros(n + d1)
        e[n + j] = 1.0
        vecs.append(e)
    Jp = np.linalg.pinv(J)
    for j in range(d1):
        for z in Z:
            b = -Jp @ (H[:, j, :] @ z)
            vecs.append(np.concatenate([b, np.zeros(d1)]))
    V = np.array(vecs)
    s = np.linalg.svd(V, compute_uv=False)
    dim = int(np.sum(s > 1e-10 * s[0]))
    return dim, dim == n + d1


def random_polymap(rng, n: int, k: int, d1: int, degree: int, density: float = 0.5) -> PolynomialMap:
    """Random map with float coefficients whose x-linear part has full rank at the origin."""
    nv = n + d1
    comps = []
    monos = [e for r in range(1, degree + 1)
             for e in itertools.product(range(r + 1), repeat=nv) if sum(e) == r]
    for j in range(k):
        terms = {}
        for e in monos:
            if rng.random() < density:
                terms[e] = float(rng.standard_normal())
        lin = [0] * nv
        lin[j] = 1
        terms[tuple(lin)] = terms.get(tuple(lin), 0.0) + 2.0
        comps.append(Poly(nv, terms))
    return PolynomialMap(n, d1, tuple(comps))
