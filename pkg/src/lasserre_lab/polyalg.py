"""Exact sparse multivariate polynomials over the rationals.

A polynomial in ``n`` variables is a mapping from exponent tuples to
:class:`fractions.Fraction` coefficients.  Zero coefficients are never stored,
so ``Polynomial(n, {})`` is the zero polynomial whose degree is ``NEG_INF``.

Products and compositions run through an integer kernel (common denominator,
then one normalisation per output term).  Large products are handed to FLINT's
``fmpz_mpoly``, which keeps the expansions needed for the modified constraints
``g*h(g)`` tractable.

    >>> x, y = Polynomial.variables(2)
    >>> p = -(1 - x**2 - y**2) * (4 - (x - 4)**2 - y**2)
    >>> p.degree
    4
    >>> p.gradient()[1].eval_exact((0, 1))
    Fraction(-26, 1)
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import flint
import numpy as np

#: Degree of the zero polynomial; compares below every integer.
NEG_INF = float("-inf")

Exponent = tuple[int, ...]


def to_fraction(value) -> Fraction:
    """Exact conversion; floats are converted to their exact binary value."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, (Real, np.floating)):
        return Fraction(float(value))
    raise TypeError(f"cannot convert {value!r} to an exact rational")


def grlex_key(alpha: Exponent) -> tuple:
    """Sort key for graded lexicographic order (x_1 > x_2 > ... within a degree)."""
    return (sum(alpha), tuple(-a for a in alpha))


def floor_degree(r) -> int | float:
    """Floor a (possibly fractional or -inf) degree bound."""
    if r == NEG_INF:
        return NEG_INF
    return math.floor(r)


def monomial_basis(n: int, r) -> list[Exponent]:
    """All exponents of total degree at most ``floor(r)`` in graded-lex order.

    Negative bounds (including ``NEG_INF``) give the empty basis.
    """
    top = floor_degree(r)
    if top == NEG_INF or top < 0:
        return []
    out: list[Exponent] = []
    for deg in range(top + 1):
        out.extend(_exponents_of_degree(n, deg))
    return out


def _exponents_of_degree(n: int, deg: int) -> list[Exponent]:
    if n == 0:
        return [()] if deg == 0 else []
    out = []
    for first in range(deg, -1, -1):
        for rest in _exponents_of_degree(n - 1, deg - first):
            out.append((first,) + rest)
    return out


def _lcm_denominator(values: Iterable[Fraction]) -> int:
    den = 1
    for v in values:
        d = v.denominator
        if d != 1:
            den = den * d // math.gcd(den, d)
    return den


class Polynomial:
    """Immutable sparse polynomial with exact rational coefficients."""

    __slots__ = ("n", "_terms", "_hash")

    def __init__(self, n: int, terms: Mapping[Sequence[int], object] | None = None):
        if n < 0:
            raise ValueError("variable count must be nonnegative")
        self.n = n
        clean: dict[Exponent, Fraction] = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n:
                raise ValueError(f"exponent {alpha} does not have length {n}")
            if any(a < 0 for a in alpha):
                raise ValueError(f"negative exponent in {alpha}")
            c = to_fraction(c)
            if c:
                clean[alpha] = clean.get(alpha, Fraction(0)) + c
                if not clean[alpha]:
                    del clean[alpha]
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, n: int, terms: dict[Exponent, Fraction]) -> "Polynomial":
        # trusted constructor: terms already pruned and typed
        obj = cls.__new__(cls)
        obj.n = n
        obj._terms = terms
        obj._hash = None
        return obj

    # construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "Polynomial":
        return cls._raw(n, {})

    @classmethod
    def constant(cls, n: int, c) -> "Polynomial":
        c = to_fraction(c)
        return cls._raw(n, {(0,) * n: c} if c else {})

    @classmethod
    def variable(cls, n: int, i: int) -> "Polynomial":
        alpha = [0] * n
        alpha[i] = 1
        return cls._raw(n, {tuple(alpha): Fraction(1)})

    @classmethod
    def variables(cls, n: int) -> tuple["Polynomial", ...]:
        return tuple(cls.variable(n, i) for i in range(n))

    @classmethod
    def monomial(cls, alpha: Sequence[int], c=1) -> "Polynomial":
        return cls(len(alpha), {tuple(alpha): c})

    # basic properties -----------------------------------------------------

    @property
    def terms(self) -> Mapping[Exponent, Fraction]:
        return MappingProxyType(self._terms)

    @property
    def degree(self) -> int | float:
        if not self._terms:
            return NEG_INF
        return max(sum(a) for a in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, alpha: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(alpha), Fraction(0))

    def sorted_terms(self) -> list[tuple[Exponent, Fraction]]:
        return sorted(self._terms.items(), key=lambda t: grlex_key(t[0]), reverse=True)

    def max_abs_coeff(self) -> Fraction:
        return max((abs(c) for c in self._terms.values()), default=Fraction(0))

    def l1_norm(self) -> Fraction:
        return sum((abs(c) for c in self._terms.values()), Fraction(0))

    def homogeneous_part(self, deg: int) -> "Polynomial":
        return Polynomial._raw(self.n, {a: c for a, c in self._terms.items() if sum(a) == deg})

    # arithmetic -----------------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.n != self.n:
                raise ValueError(f"variable count mismatch: {self.n} vs {other.n}")
            return other
        return Polynomial.constant(self.n, other)

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for a, c in other._terms.items():
            s = out.get(a, 0) + c
            if s:
                out[a] = s
            else:
                out.pop(a, None)
        return Polynomial._raw(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.n, {a: -c for a, c in self._terms.items()})

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            try:
                c = to_fraction(other)
            except TypeError:
                return NotImplemented
            if not c:
                return Polynomial.zero(self.n)
            return Polynomial._raw(self.n, {a: v * c for a, v in self._terms.items()})
        other = self._coerce(other)
        if not self._terms or not other._terms:
            return Polynomial.zero(self.n)
        na, da = self._int_form()
        nb, db = other._int_form()
        return Polynomial._from_int_form(self.n, _int_mul(na, nb), da * db)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = Polynomial.constant(self.n, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def _int_form(self) -> tuple[dict[Exponent, int], int]:
        den = _lcm_denominator(self._terms.values())
        return {a: c.numerator * (den // c.denominator) for a, c in self._terms.items()}, den

    @classmethod
    def _from_int_form(cls, n: int, num: dict[Exponent, int], den: int) -> "Polynomial":
        return cls._raw(n, {a: Fraction(v, den) for a, v in num.items() if v})

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.n == other.n and self._terms == other._terms
        try:
            return self == Polynomial.constant(self.n, other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self._terms.items())))
        return self._hash

    # calculus -------------------------------------------------------------

    def derivative(self, i: int) -> "Polynomial":
        out = {}
        for a, c in self._terms.items():
            if a[i]:
                b = a[:i] + (a[i] - 1,) + a[i + 1:]
                out[b] = c * a[i]
        return Polynomial._raw(self.n, out)

    def gradient(self) -> tuple["Polynomial", ...]:
        return tuple(self.derivative(i) for i in range(self.n))

    def hessian(self) -> "PolyMatrix":
        grad = self.gradient()
        rows = [[None] * self.n for _ in range(self.n)]
        for i in range(self.n):
            for j in range(i, self.n):
                # one representative per unordered pair keeps the result exactly symmetric
                rows[i][j] = rows[j][i] = grad[i].derivative(j)
        return PolyMatrix(rows)

    # evaluation -----------------------------------------------------------

    def eval(self, x: Sequence[float]) -> float:
        """Floating-point value at ``x`` using compensated (fsum) summation."""
        x = [float(v) for v in x]
        if len(x) != self.n:
            raise ValueError(f"point has length {len(x)}, expected {self.n}")
        return math.fsum(float(c) * math.prod(xi**ai for xi, ai in zip(x, a) if ai)
                         for a, c in self._terms.items())

    __call__ = eval

    def eval_exact(self, x: Sequence) -> Fraction:
        x = [to_fraction(v) for v in x]
        if len(x) != self.n:
            raise ValueError(f"point has length {len(x)}, expected {self.n}")
        total = Fraction(0)
        for a, c in self._terms.items():
            term = c
            for xi, ai in zip(x, a):
                if ai:
                    term *= xi**ai
            total += term
        return total

    def eval_many(self, points) -> np.ndarray:
        """Vectorised float evaluation at the rows of an ``(N, n)`` array."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if not self._terms:
            return np.zeros(pts.shape[0])
        exps = np.array(list(self._terms.keys()), dtype=float).reshape(len(self._terms), self.n)
        coeffs = np.array([float(c) for c in self._terms.values()])
        monos = np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)
        return monos @ coeffs

    # composition ----------------------------------------------------------

    def substitute(self, images: Sequence["Polynomial"]) -> "Polynomial":
        """Replace variable ``i`` by ``images[i]`` (all images share a ring)."""
        if len(images) != self.n:
            raise ValueError("need one image per variable")
        if not images:
            return self
        m = images[0].n
        powers: list[dict[int, Polynomial]] = [{0: Polynomial.constant(m, 1)} for _ in images]

        def power(i, k):
            cache = powers[i]
            if k not in cache:
                cache[k] = power(i, k - 1) * images[i]
            return cache[k]

        out = Polynomial.zero(m)
        for a, c in self.sorted_terms():
            term = Polynomial.constant(m, c)
            for i, ai in enumerate(a):
                if ai:
                    term = term * power(i, ai)
            out = out + term
        return out

    # printing -------------------------------------------------------------

    def to_string(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = [f"x{i + 1}" for i in range(self.n)]
        if not self._terms:
            return "0"
        pieces = []
        for a, c in self.sorted_terms():
            mono = "*".join(name if e == 1 else f"{name}^{e}" for name, e in zip(names, a) if e)
            mag = abs(c)
            if mono and mag == 1:
                body = mono
            elif mono:
                body = f"{_fmt_rational(mag)}*{mono}"
            else:
                body = _fmt_rational(mag)
            sign = "-" if c < 0 else "+"
            pieces.append((sign, body))
        first_sign, first = pieces[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in pieces[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"Polynomial({self.n}, {self.to_string()!r})"


def _fmt_rational(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


# below this many coefficient products the dict loop beats the conversion cost
_FLINT_THRESHOLD = 2000


def _flint_ctx(n: int):
    return flint.fmpz_mpoly_ctx.get(tuple(f"x{i}" for i in range(n)), "lex")


def _int_mul(a: dict[Exponent, int], b: dict[Exponent, int]) -> dict[Exponent, int]:
    if not a or not b:
        return {}
    n = len(next(iter(a)))
    if n and len(a) * len(b) > _FLINT_THRESHOLD:
        ctx = _flint_ctx(n)
        prod = ctx.from_dict(a) * ctx.from_dict(b)
        return {tuple(map(int, e)): int(c) for e, c in prod.to_dict().items()}
    out: dict[Exponent, int] = defaultdict(int)
    for ea, ca in a.items():
        for eb, cb in b.items():
            out[tuple(x + y for x, y in zip(ea, eb))] += ca * cb
    return out


def degree(p: Polynomial):
    return p.degree


def arith(p: Polynomial, q, op: str) -> Polynomial:
    """Functional form of the ring operations: ``add``, ``sub``, ``mul`` or ``scale``."""
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        if not isinstance(q, Polynomial):
            raise TypeError("mul expects a polynomial; use 'scale' for scalars")
        return p * q
    if op == "scale":
        return p * to_fraction(q)
    raise ValueError(f"unknown operation {op!r}")


def gradient(p: Polynomial) -> tuple[Polynomial, ...]:
    return p.gradient()


def hessian(p: Polynomial) -> "PolyMatrix":
    return p.hessian()


def univariate_coeffs(h) -> list[Fraction]:
    """Ascending coefficients of a univariate polynomial given as an object or sequence."""
    coeffs = getattr(h, "coeffs", h)
    return [to_fraction(c) for c in coeffs]


def compose_univariate(g: Polynomial, h) -> Polynomial:
    """``h(g)`` by Horner's rule, done in integer arithmetic over a common denominator."""
    coeffs = univariate_coeffs(h)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if not coeffs:
        return Polynomial.zero(g.n)
    d = len(coeffs) - 1
    dh = _lcm_denominator(coeffs)
    a = [c.numerator * (dh // c.denominator) for c in coeffs]
    gnum, dg = g._int_form()
    one = (0,) * g.n
    if not gnum:
        return Polynomial.constant(g.n, coeffs[0])
    if g.n:
        ctx = _flint_ctx(g.n)
        gf = ctx.from_dict(gnum)
        acc = ctx.from_dict({one: a[d]})
        for k in range(d - 1, -1, -1):
            acc = acc * gf + a[k] * dg ** (d - k)
        num = {tuple(map(int, e)): int(c) for e, c in acc.to_dict().items()}
    else:
        acc_c = a[d]
        for k in range(d - 1, -1, -1):
            acc_c = acc_c * gnum[one] + a[k] * dg ** (d - k)
        num = {one: acc_c}
    return Polynomial._from_int_form(g.n, num, dh * dg**d)


def eval_matrix(P: "PolyMatrix", x) -> np.ndarray:
    return P.eval(x)


class PolyMatrix:
    """Rectangular matrix of polynomials sharing one variable count."""

    __slots__ = ("rows", "n")

    def __init__(self, rows: Sequence[Sequence[Polynomial]]):
        self.rows = tuple(tuple(r) for r in rows)
        if not self.rows or not self.rows[0]:
            raise ValueError("empty matrix")
        width = len(self.rows[0])
        if any(len(r) != width for r in self.rows):
            raise ValueError("ragged matrix")
        ns = {p.n for r in self.rows for p in r}
        if len(ns) != 1:
            raise ValueError("entries must share the variable count")
        self.n = ns.pop()

    @classmethod
    def constant(cls, n: int, values) -> "PolyMatrix":
        return cls([[Polynomial.constant(n, to_fraction(v)) for v in row] for row in values])

    @classmethod
    def zeros(cls, n: int, k: int) -> "PolyMatrix":
        return cls([[Polynomial.zero(n)] * k for _ in range(k)])

    @classmethod
    def outer(cls, u: Sequence[Polynomial], v: Sequence[Polynomial]) -> "PolyMatrix":
        return cls([[a * b for b in v] for a in u])

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.rows[0])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    @property
    def is_symmetric(self) -> bool:
        k, w = self.shape
        return k == w and all(self.rows[i][j] == self.rows[j][i] for i in range(k) for j in range(i))

    @property
    def degree(self):
        return max(p.degree for r in self.rows for p in r)

    def is_zero(self) -> bool:
        return all(p.is_zero() for r in self.rows for p in r)

    def map(self, fn) -> "PolyMatrix":
        return PolyMatrix([[fn(p) for p in r] for r in self.rows])

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix(list(zip(*self.rows)))

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return PolyMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return self + (-other)

    def __neg__(self) -> "PolyMatrix":
        return self.map(lambda p: -p)

    def __mul__(self, c) -> "PolyMatrix":
        if isinstance(c, PolyMatrix):
            return NotImplemented
        return self.map(lambda p: p * c)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, PolyMatrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def eval(self, x) -> np.ndarray:
        return np.array([[p.eval(x) for p in r] for r in self.rows])

    def eval_exact(self, x) -> list[list[Fraction]]:
        return [[p.eval_exact(x) for p in r] for r in self.rows]

    def __repr__(self):
        return f"PolyMatrix({[[p.to_string() for p in r] for r in self.rows]})"


def vector_eval(v: Sequence[Polynomial], x) -> np.ndarray:
    return np.array([p.eval(x) for p in v])


@dataclass(frozen=True)
class PolySystem:
    """Constraint tuple ``g = (g_1, ..., g_m)`` defining ``S(g) = {g_i >= 0}``.

    ``generators`` prepends the implicit ``g_0 = 1``.
    """

    names: tuple[str, ...]
    constraints: tuple[Polynomial, ...] = ()
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate variable names in {self.names}")
        for g in self.constraints:
            if g.n != len(self.names):
                raise ValueError("constraint variable count does not match the declared variables")
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(f"g{i + 1}" for i in range(len(self.constraints))))
        else:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != len(self.constraints):
                raise ValueError("one label per constraint")

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def generators(self) -> tuple[Polynomial, ...]:
        return (Polynomial.constant(self.n, 1),) + self.constraints

    def values(self, x) -> np.ndarray:
        return np.array([g.eval(x) for g in self.constraints])

    def contains(self, x, tol: float = 0.0) -> bool:
        return all(g.eval(x) >= -tol for g in self.constraints)

    def contains_many(self, points, tol: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ok = np.ones(pts.shape[0], dtype=bool)
        for g in self.constraints:
            ok &= g.eval_many(pts) >= -tol
        return ok

    def with_constraints(self, constraints, labels=None) -> "PolySystem":
        return PolySystem(self.names, tuple(constraints), labels)
