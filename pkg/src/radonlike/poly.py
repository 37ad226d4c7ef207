"""Sparse multivariate polynomials and rational functions.

Polynomials are dicts mapping exponent tuples to coefficients.  Coefficients
may be ``int``, ``Fraction`` or ``float``; exact inputs stay exact under
arithmetic and differentiation, which is what the vector-field machinery
relies on.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Number

import numpy as np

from .errors import DimensionMismatch, PoleError


def _clean(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c.numerator)
    return c


class Poly:
    """Sparse polynomial in ``nvars`` variables."""

    __slots__ = ("nvars", "terms", "_cache")

    def __init__(self, nvars: int, terms=None):
        self.nvars = int(nvars)
        out = {}
        if terms:
            for e, c in terms.items():
                e = tuple(int(a) for a in e)
                if len(e) != self.nvars:
                    raise DimensionMismatch(f"exponent {e} has wrong length for {nvars} variables")
                if any(a < 0 for a in e):
                    raise ValueError("negative exponent")
                if c == 0:
                    continue
                out[e] = out.get(e, 0) + c
            out = {e: _clean(c) for e, c in out.items() if c != 0}
        self.terms = out
        self._cache = None

    # construction helpers
    @classmethod
    def const(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars, i, coeff=1):
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): coeff})

    @classmethod
    def zero(cls, nvars):
        return cls(nvars)

    # basic queries
    def is_zero(self):
        return not self.terms

    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def is_exact(self):
        return all(not isinstance(c, float) for c in self.terms.values())

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, 0)

    def __eq__(self, other):
        if isinstance(other, Number):
            other = Poly.const(self.nvars, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self):
        return f"Poly({self.nvars}, {self.terms!r})"

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise DimensionMismatch("polynomials in different numbers of variables")
            return other
        if isinstance(other, (Number, np.number)):
            return Poly.const(self.nvars, other.item() if isinstance(other, np.number) else other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0) + c
        return Poly(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0) + c1 * c2
        return Poly(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = Poly.const(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, c):
        return Poly(self.nvars, {e: c * v for e, v in self.terms.items()})

    # calculus
    def diff(self, i: int) -> "Poly":
        terms = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            f = list(e)
            f[i] -= 1
            terms[tuple(f)] = c * e[i]
        return Poly(self.nvars, terms)

    def gradient(self):
        return [self.diff(i) for i in range(self.nvars)]

    # evaluation
    def _arrays(self):
        if self._cache is None:
            if self.terms:
                E = np.array(list(self.terms.keys()), dtype=np.int64)
                C = np.array([float(c) for c in self.terms.values()])
            else:
                E = np.zeros((0, self.nvars), dtype=np.int64)
                C = np.zeros(0)
            self._cache = (E, C)
        return self._cache

    def __call__(self, point):
        """Evaluate at one point.  Exact coefficients and exact point give an exact value."""
        point = list(point)
        if len(point) != self.nvars:
            raise DimensionMismatch(f"expected {self.nvars} coordinates, got {len(point)}")
        exact = self.is_exact() and all(isinstance(p, (int, Fraction)) for p in point)
        if exact:
            total = 0
            for e, c in self.terms.items():
                m = c
                for p, a in zip(point, e):
                    if a:
                        m = m * p ** a
                total += m
            return _clean(total)
        return float(self.eval_many(np.asarray(point, dtype=float)[None, :])[0])

    def eval_many(self, points) -> np.ndarray:
        """Vectorized float evaluation at the rows of ``points``."""
        P = np.asarray(points, dtype=float)
        if P.ndim == 1:
            P = P[None, :]
        if P.shape[1] != self.nvars:
            raise DimensionMismatch(f"expected {self.nvars} columns, got {P.shape[1]}")
        E, C = self._arrays()
        if len(C) == 0:
            return np.zeros(P.shape[0])
        out = np.zeros(P.shape[0])
        for e, c in zip(E, C):
            m = np.full(P.shape[0], c)
            for j in np.nonzero(e)[0]:
                m = m * P[:, j] ** e[j]
            out += m
        return out

    def compose(self, subs: list["Poly"]) -> "Poly":
        """Substitute ``subs[i]`` for variable ``i``."""
        if len(subs) != self.nvars:
            raise DimensionMismatch("need one substitution per variable")
        nv = subs[0].nvars if subs else 0
        out = Poly.zero(nv)
        powers = [dict() for _ in subs]
        for e, c in self.terms.items():
            m = Poly.const(nv, c)
            for i, a in enumerate(e):
                if a:
                    if a not in powers[i]:
                        powers[i][a] = subs[i] ** a
                    m = m * powers[i][a]
            out = out + m
        return out


class RationalFunction:
    """Quotient ``num/den`` of sparse polynomials.

    No gcd cancellation is performed; :meth:`cancel` optionally reduces through
    sympy.
    """

    __slots__ = ("num", "den")
    pole_tol = 1e-12

    def __init__(self, num: Poly, den: Poly | None = None):
        if den is None:
            den = Poly.const(num.nvars, 1)
        if den.is_zero():
            raise ZeroDivisionError("denominator is identically zero")
        if num.nvars != den.nvars:
            raise DimensionMismatch("numerator and denominator variable counts differ")
        # keep a trivially normalized form: constant denominators fold into the numerator
        if num.is_zero():
            den = Poly.const(num.nvars, 1)
        if den.degree() == 0:
            c = den.constant_term()
            inv = Fraction(1) / c if not isinstance(c, float) else 1.0 / c
            num, den = num.scale(inv), Poly.const(num.nvars, 1)
        self.num = num
        self.den = den

    @property
    def nvars(self):
        return self.num.nvars

    @classmethod
    def from_poly(cls, p: Poly):
        return cls(p)

    @classmethod
    def const(cls, nvars, c):
        return cls(Poly.const(nvars, c))

    def is_zero(self):
        return self.num.is_zero()

    def _coerce(self, other):
        if isinstance(other, RationalFunction):
            return other
        if isinstance(other, Poly):
            return RationalFunction(other)
        if isinstance(other, (Number, np.number)):
            return RationalFunction.const(self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def diff(self, i: int) -> "RationalFunction":
        return RationalFunction(
            self.num.diff(i) * self.den - self.num * self.den.diff(i), self.den * self.den
        )

    def equals(self, other) -> bool:
        """Identity as rational functions (cross-multiplication test)."""
        other = self._coerce(other)
        return (self.num * other.den - other.num * self.den).is_zero()

    def __call__(self, point):
        q = self.den(point)
        if isinstance(q, float) and abs(q) < self.pole_tol:
            raise PoleError(f"denominator {q:g} near zero")
        if q == 0:
            raise PoleError("denominator vanishes")
        p = self.num(point)
        if isinstance(p, float) or isinstance(q, float):
            return float(p) / float(q)
        return _clean(Fraction(p) / Fraction(q))

    def eval_many(self, points) -> np.ndarray:
        q = self.den.eval_many(points)
        if np.any(np.abs(q) < self.pole_tol):
            raise PoleError("denominator near zero at some evaluation point")
        return self.num.eval_many(points) / q

    def cancel(self) -> "RationalFunction":
        """Reduce by the polynomial gcd (sympy); exact coefficients only."""
        import sympy

        xs = sympy.symbols(f"z0:{self.nvars}")
        num = _to_sympy(self.num, xs)
        den = _to_sympy(self.den, xs)
        n2, d2 = sympy.cancel(num / den).as_numer_denom()
        return RationalFunction(_from_sympy(n2, xs), _from_sympy(d2, xs))

    def __repr__(self):
        return f"RationalFunction({self.num!r}, {self.den!r})"


def _to_sympy(p: Poly, xs):
    import sympy

    out = sympy.Integer(0)
    for e, c in p.terms.items():
        if isinstance(c, float):
            raise TypeError("cancel() needs exact coefficients")
        m = sympy.Rational(c.numerator, c.denominator)
        for x, a in zip(xs, e):
            m = m * x ** a
        out += m
    return out


def _from_sympy(expr, xs) -> Poly:
    import sympy

    P = sympy.Poly(sympy.expand(expr), *xs)
    terms = {}
    for mon, c in P.terms():
        c = sympy.Rational(c)
        terms[tuple(mon)] = Fraction(int(c.p), int(c.q))
    return Poly(len(xs), terms)


def det(matrix):
    """Determinant of a small square matrix of ring elements by cofactor expansion.

    Works for ``Poly``, ``RationalFunction`` and plain numbers; used where
    exactness matters more than speed (d <= 4).
    """
    n = len(matrix)
    if n == 0:
        return 1
    if n == 1:
        return matrix[0][0]
    if n == 2:
        return matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]
    total = None
    for j in range(n):
        a = matrix[0][j]
        if isinstance(a, (Poly, RationalFunction)) and a.is_zero():
            continue
        if not isinstance(a, (Poly, RationalFunction)) and a == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in matrix[1:]]
        term = a * det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    if total is None:
        return matrix[0][0] * 0
    return total
