"""Univariate tools: Taylor gadgets, exact Sturm counting, and SOS pairing.

Everything here works with exact rationals.  Root counting uses Sturm
sequences built as a primitive integer pseudo-remainder sequence with the
signs corrected, which keeps the coefficient growth manageable for the
degree-64-and-beyond polynomials produced by :func:`select_guess_params`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .polyalg import to_fraction

INF = float("inf")


class UnivariatePoly:
    """Dense univariate polynomial, ascending exact coefficients, trailing zeros trimmed."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence = ()):
        cs = [to_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs)

    @classmethod
    def T(cls) -> "UnivariatePoly":
        return cls([0, 1])

    @classmethod
    def constant(cls, c) -> "UnivariatePoly":
        return cls([c])

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else float("-inf")

    @property
    def leading(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def _coerce(self, other) -> "UnivariatePoly":
        return other if isinstance(other, UnivariatePoly) else UnivariatePoly([other])

    def __add__(self, other):
        other = self._coerce(other)
        k = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (k - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (k - len(other.coeffs))
        return UnivariatePoly([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return UnivariatePoly([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, UnivariatePoly):
            c = to_fraction(other)
            return UnivariatePoly([v * c for v in self.coeffs])
        if not self.coeffs or not other.coeffs:
            return UnivariatePoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return UnivariatePoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = UnivariatePoly([1])
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, UnivariatePoly):
            return self.coeffs == other.coeffs
        return self == UnivariatePoly([other])

    def __hash__(self):
        return hash(self.coeffs)

    def derivative(self) -> "UnivariatePoly":
        return UnivariatePoly([k * c for k, c in enumerate(self.coeffs)][1:])

    def reflect(self) -> "UnivariatePoly":
        """``p(-T)``."""
        return UnivariatePoly([c if k % 2 == 0 else -c for k, c in enumerate(self.coeffs)])

    def scale_argument(self, s) -> "UnivariatePoly":
        """``p(s*T)``."""
        s = to_fraction(s)
        return UnivariatePoly([c * s**k for k, c in enumerate(self.coeffs)])

    def shift_degree(self, k: int) -> "UnivariatePoly":
        """``T**k * p``."""
        return UnivariatePoly((Fraction(0),) * k + self.coeffs)

    def eval_exact(self, t) -> Fraction:
        t = to_fraction(t)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def __call__(self, t):
        if isinstance(t, np.ndarray):
            cs = [float(c) for c in self.coeffs]
            return np.polynomial.polynomial.polyval(t, cs) if cs else np.zeros_like(t, dtype=float)
        if isinstance(t, (int, Fraction)):
            return self.eval_exact(t)
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * t + float(c)
        return acc

    def divmod(self, other: "UnivariatePoly") -> tuple["UnivariatePoly", "UnivariatePoly"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        db = len(other.coeffs) - 1
        lc = other.coeffs[-1]
        quot = [Fraction(0)] * max(len(rem) - db, 1)
        while len(rem) - 1 >= db and rem:
            k = len(rem) - 1 - db
            q = rem[-1] / lc
            quot[k] = q
            for i, b in enumerate(other.coeffs):
                rem[k + i] -= q * b
            rem.pop()
            while rem and rem[-1] == 0:
                rem.pop()
        return UnivariatePoly(quot), UnivariatePoly(rem)

    def monic(self) -> "UnivariatePoly":
        return self * (1 / self.leading)

    def max_abs_coeff(self) -> Fraction:
        return max((abs(c) for c in self.coeffs), default=Fraction(0))

    def __repr__(self):
        return f"UnivariatePoly({[str(c) for c in self.coeffs]})"


def poly_gcd(a: UnivariatePoly, b: UnivariatePoly) -> UnivariatePoly:
    while not b.is_zero():
        a, b = b, a.divmod(b)[1]
    return a.monic() if not a.is_zero() else a


def square_free_decomposition(p: UnivariatePoly) -> tuple[Fraction, list[UnivariatePoly]]:
    """Yun's algorithm: ``p = lc * prod(q_j ** j)`` with monic, pairwise coprime ``q_j``.

    Returns ``(lc, [q_1, q_2, ...])``.
    """
    if p.is_zero():
        raise ValueError("zero polynomial has no square-free decomposition")
    lc = p.leading
    f = p.monic()
    factors = []
    df = f.derivative()
    a = poly_gcd(f, df) if not df.is_zero() else UnivariatePoly([1])
    b = f.divmod(a)[0]
    c = df.divmod(a)[0]
    d = c - b.derivative()
    while b.degree > 0:
        a = poly_gcd(b, d)
        factors.append(a)
        b = b.divmod(a)[0]
        c = d.divmod(a)[0]
        d = c - b.derivative()
    return lc, factors


# ---------------------------------------------------------------------------
# Sturm sequences over the integers

def _integer_coeffs(p: UnivariatePoly) -> list[int]:
    den = 1
    for c in p.coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [c.numerator * (den // c.denominator) for c in p.coeffs]
    return _primitive(ints)


def _primitive(a: list[int]) -> list[int]:
    g = math.gcd(*a)
    return [x // g for x in a] if g > 1 else a


def _sturm_chain(ints: list[int]) -> list[list[int]]:
    deriv = [k * c for k, c in enumerate(ints)][1:]
    if not deriv:
        return [ints]
    chain = [ints, _primitive(deriv)]
    while True:
        prev, cur = chain[-2], chain[-1]
        if len(cur) == 1:
            break
        rem = _signed_prem(prev, cur)
        if not rem:
            break
        chain.append(_primitive([-x for x in rem]))
    return chain


def _signed_prem(a: list[int], b: list[int]) -> list[int]:
    """Pseudo-remainder of ``a`` by ``b`` carrying the sign of the true remainder."""
    a = a[:]
    db = len(b) - 1
    lc = b[-1]
    mult_sign = 1
    while a and len(a) - 1 >= db:
        q = a[-1]
        shift = len(a) - 1 - db
        a = [x * lc for x in a]
        if lc < 0:
            mult_sign = -mult_sign
        for i, bi in enumerate(b):
            a[shift + i] -= q * bi
        a.pop()
        while a and a[-1] == 0:
            a.pop()
    if mult_sign < 0:
        a = [-x for x in a]
    return a


def _sign_at(ints: list[int], t) -> int:
    """Sign of the integer polynomial at rational ``t`` or at +/- infinity."""
    if t == INF:
        return (ints[-1] > 0) - (ints[-1] < 0)
    if t == -INF:
        s = (ints[-1] > 0) - (ints[-1] < 0)
        return s if (len(ints) - 1) % 2 == 0 else -s
    t = to_fraction(t)
    num, den = t.numerator, t.denominator
    deg = len(ints) - 1
    # homogenised evaluation: den**deg * p(num/den), den > 0 keeps the sign
    acc = 0
    for k in range(deg, -1, -1):
        acc = acc * num + ints[k] * den ** (deg - k)
    return (acc > 0) - (acc < 0)


def _variations(chain: list[list[int]], t) -> int:
    signs = [s for s in (_sign_at(q, t) for q in chain) if s]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


class SturmSequence:
    """Sturm chain of the square-free part of ``p``; counts distinct real roots."""

    def __init__(self, p: UnivariatePoly):
        if p.is_zero():
            raise ValueError("Sturm sequence of the zero polynomial")
        ints = _integer_coeffs(p)
        chain = _sturm_chain(ints)
        if len(chain[-1]) > 1:
            g = UnivariatePoly(chain[-1])
            sqf = p.divmod(g)[0]
            ints = _integer_coeffs(sqf)
            chain = _sturm_chain(ints)
        self.poly = p
        self.chain = chain

    def count(self, a=-INF, b=INF) -> int:
        """Distinct real roots in ``(a, b]``."""
        if not a < b:
            return 0
        return _variations(self.chain, a) - _variations(self.chain, b)


def count_real_roots(p: UnivariatePoly, interval: tuple | None = None) -> int:
    """Number of distinct real roots of ``p`` in ``(a, b]`` (whole line by default)."""
    if p.is_zero():
        raise ValueError("the zero polynomial has infinitely many roots")
    if p.degree == 0:
        return 0
    a, b = interval if interval is not None else (-INF, INF)
    return SturmSequence(p).count(a, b)


def positive_on_interval(p: UnivariatePoly, a, b) -> bool:
    """Exact test of ``p > 0`` on the closed interval ``[a, b]``."""
    a, b = to_fraction(a), to_fraction(b)
    if a > b:
        raise ValueError("empty interval")
    if p.is_zero():
        return False
    if p.eval_exact(a) <= 0 or p.eval_exact(b) <= 0:
        return False
    if a == b or p.degree == 0:
        return True
    return SturmSequence(p).count(a, b) == 0


def cauchy_root_bound(p: UnivariatePoly) -> Fraction:
    lc = abs(p.leading)
    return 1 + max((abs(c) / lc for c in p.coeffs[:-1]), default=Fraction(0))


def fujiwara_root_bound(p: UnivariatePoly) -> Fraction:
    """Rational upper bound ``2 max |a_{n-k}/a_n|^(1/k)`` on the moduli of all roots.

    Much tighter than the Cauchy bound for Taylor-type coefficients that
    decay factorially.
    """
    n = p.degree
    lc = abs(p.leading)
    best = Fraction(0)
    for k in range(1, n + 1):
        q = abs(p.coeffs[n - k]) / lc
        if not q:
            continue
        logq = math.log(q.numerator) - math.log(q.denominator)
        r = to_fraction(math.exp(logq / k) * (1 + 1e-9))
        while r**k < q:
            r *= Fraction(101, 100)
        best = max(best, r)
    return 2 * best


def isolate_real_roots(p: UnivariatePoly, a=None, b=None, sturm: SturmSequence | None = None
                       ) -> list[tuple[Fraction, Fraction]]:
    """Disjoint intervals ``(lo, hi]``, each holding exactly one distinct root in ``(a, b]``."""
    if p.degree <= 0:
        return []
    bound = fujiwara_root_bound(p)
    a = -bound if a is None else to_fraction(a)
    b = bound if b is None else to_fraction(b)
    sturm = sturm or SturmSequence(p)
    out = []
    stack = [(a, b, sturm.count(a, b))]
    while stack:
        lo, hi, k = stack.pop()
        if k == 0:
            continue
        if k == 1:
            out.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        stack.append((mid, hi, sturm.count(mid, hi)))
        stack.append((lo, mid, sturm.count(lo, mid)))
    return sorted(out)


def taylor_shift(p: UnivariatePoly, a) -> UnivariatePoly:
    """Coefficients of ``p(a + t)`` in ``t``.

    Horner's rule in integers: with ``a = u/v`` and ``p = sum C_k x^k / D``,
    ``A_k = A_{k+1} (u + v t) + C_k v^(n-k)`` gives ``p(a + t) = A_0 / (D v^n)``.
    """
    a = to_fraction(a)
    if p.is_zero():
        return UnivariatePoly()
    D = 1
    for c in p.coeffs:
        D = D * c.denominator // math.gcd(D, c.denominator)
    ints = [c.numerator * (D // c.denominator) for c in p.coeffs]
    u, v = a.numerator, a.denominator
    n = len(ints) - 1
    acc = [ints[n]]
    vp = 1
    for k in range(n - 1, -1, -1):
        vp *= v
        nxt = [0] * (len(acc) + 1)
        for j, c in enumerate(acc):
            nxt[j] += c * u
            nxt[j + 1] += c * v
        nxt[0] += ints[k] * vp
        acc = nxt
    den = D * v**n
    return UnivariatePoly([Fraction(c, den) for c in acc])


def _enclose(p: UnivariatePoly, lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
    """Rigorous range enclosure of ``p`` on ``[lo, hi]`` from its expansion at the midpoint."""
    mid = (lo + hi) / 2
    r = (hi - lo) / 2
    q = taylor_shift(p, mid)
    if q.is_zero():
        return Fraction(0), Fraction(0)
    spread = sum((abs(c) * r**k for k, c in enumerate(q.coeffs) if k), Fraction(0))
    return q.coeffs[0] - spread, q.coeffs[0] + spread


def interval_extrema(p: UnivariatePoly, a, b, rel_tol=Fraction(1, 10**12), max_refine=200
                     ) -> tuple[Fraction, Fraction]:
    """Rigorous ``(lower bound of min, upper bound of max)`` of ``p`` over ``[a, b]``.

    Critical points are isolated exactly from the derivative; on each isolating
    interval the value is enclosed through the Taylor expansion at the
    interval midpoint, and the interval is bisected until the enclosure is
    narrower than ``rel_tol`` times its magnitude.
    """
    a, b = to_fraction(a), to_fraction(b)
    rel_tol = to_fraction(rel_tol)
    if a > b:
        raise ValueError("empty interval")
    lo_vals = [p.eval_exact(a), p.eval_exact(b)]
    hi_vals = list(lo_vals)
    dp = p.derivative()
    if a < b and not dp.is_zero() and dp.degree >= 1:
        sturm = SturmSequence(dp)
        for lo, hi in isolate_real_roots(dp, a, b, sturm):
            lo = max(lo, a)
            for _ in range(max_refine):
                low, high = _enclose(p, lo, hi)
                if high - low <= rel_tol * max(abs(low), abs(high), Fraction(1, 10**30)):
                    break
                mid = (lo + hi) / 2
                if sturm.count(lo, mid) == 1:
                    hi = mid
                else:
                    lo = mid
            low, high = _enclose(p, lo, hi)
            lo_vals.append(low)
            hi_vals.append(high)
    return min(lo_vals), max(hi_vals)


def global_min_lower_bound(p: UnivariatePoly, rel_tol=Fraction(1, 10**6)) -> Fraction:
    """Rigorous lower bound on ``min p`` over the real line (even degree, ``lc > 0``)."""
    if p.degree == 0:
        return p.coeffs[0]
    if p.degree % 2 or p.leading < 0:
        raise ValueError("polynomial is unbounded below")
    bound = fujiwara_root_bound(p.derivative()) if p.degree > 1 else Fraction(0)
    low, _ = interval_extrema(p, -bound, bound, rel_tol)
    return low


# ---------------------------------------------------------------------------
# Taylor gadgets

def e_taylor(c, d: int) -> UnivariatePoly:
    """Degree-``d`` Taylor polynomial of ``exp(c*t)`` at the origin."""
    c = to_fraction(c)
    if c <= 0:
        raise ValueError("c must be positive")
    if d < 0:
        return UnivariatePoly()
    return UnivariatePoly([c**k / math.factorial(k) for k in range(d + 1)])


def f_taylor(c, d: int) -> UnivariatePoly:
    """``(1 - e_{c,d+1}(-T)) / (c*T)``, i.e. ``sum_k c**k (-T)**k / (k+1)!``."""
    c = to_fraction(c)
    if c <= 0:
        raise ValueError("c must be positive")
    return UnivariatePoly([(-c) ** k / math.factorial(k + 1) for k in range(d + 1)])


# ---------------------------------------------------------------------------
# sums of squares in one variable

class NotNonnegativeError(ValueError):
    """Raised when a univariate polynomial takes negative values."""


@dataclass(frozen=True)
class SosPair:
    """``scale * (p**2 + q**2)`` reproduces the decomposed polynomial."""

    p: UnivariatePoly
    q: UnivariatePoly
    scale: Fraction
    exact: bool = False

    def reconstruct(self) -> UnivariatePoly:
        return (self.p * self.p + self.q * self.q) * self.scale

    def residual(self, target: UnivariatePoly) -> float:
        """Max coefficient defect relative to the max coefficient of ``target``."""
        diff = self.reconstruct() - target
        return float(diff.max_abs_coeff() / max(target.max_abs_coeff(), Fraction(1, 10**300)))


def _rational_sqrt(x: Fraction) -> Fraction | None:
    if x < 0:
        return None
    rn, rd = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if rn * rn == x.numerator and rd * rd == x.denominator:
        return Fraction(rn, rd)
    return None


def sos_decompose(p: UnivariatePoly, dps: int = 60) -> SosPair:
    """Write a nonnegative univariate polynomial as ``scale*(p1**2 + q1**2)``.

    Real roots come in even multiplicity and stay exact in a square factor.
    The remaining square-free part has only conjugate pairs of complex roots;
    taking one root per pair, ``P + iQ = prod(T - z)`` gives the two squares.
    Roots are found from companion-matrix eigenvalues and Newton-polished at
    ``dps`` digits before the product is formed.  When the complex part is a
    single quadratic with rational offset, the decomposition is exact.
    """
    if p.is_zero():
        return SosPair(UnivariatePoly(), UnivariatePoly(), Fraction(1), exact=True)
    if p.degree % 2 or p.leading < 0:
        raise NotNonnegativeError("odd degree or negative leading coefficient")
    lc, factors = square_free_decomposition(p)
    square = UnivariatePoly([1])
    rest = UnivariatePoly([1])
    for j, q in enumerate(factors, start=1):
        if q.degree <= 0:
            continue
        if j % 2 and count_real_roots(q) > 0:
            raise NotNonnegativeError("a real root of odd multiplicity changes the sign")
        square = square * q ** (j // 2)
        if j % 2:
            rest = rest * q
    if rest.degree == 0:
        return SosPair(square, UnivariatePoly(), lc, exact=True)
    if rest.degree == 2:
        b, c0 = rest.coeffs[1], rest.coeffs[0]
        k = c0 - b * b / 4
        r = _rational_sqrt(k)
        if r is not None:
            return SosPair(square * UnivariatePoly([b / 2, 1]), square * r, lc, exact=True)
    re_part, im_part = _complex_half_product(rest, dps)
    return SosPair(square * re_part, square * im_part, lc, exact=False)


def _complex_half_product(q: UnivariatePoly, dps: int) -> tuple[UnivariatePoly, UnivariatePoly]:
    """For monic real ``q`` without real roots: ``q = P**2 + Q**2`` numerically."""
    import mpmath

    deg = q.degree
    fl = [float(c) for c in q.coeffs]
    guesses = np.roots(fl[::-1]) if all(np.isfinite(fl)) else np.array([])
    with mpmath.workdps(dps):
        mq = [mpmath.mpf(c.numerator) / c.denominator for c in q.coeffs]
        if len(guesses) != deg:
            roots = mpmath.polyroots(mq[::-1], maxsteps=200, extraprec=4 * dps)
        else:
            roots = [_newton_polish(mq, mpmath.mpc(z), dps) for z in guesses]
            if not _roots_consistent(roots, deg):
                roots = mpmath.polyroots(mq[::-1], maxsteps=200, extraprec=4 * dps)
        upper = sorted((z for z in roots if mpmath.im(z) > 0), key=lambda z: (float(mpmath.re(z)), float(mpmath.im(z))))
        if len(upper) * 2 != deg:
            raise NotNonnegativeError("could not pair complex roots; real roots suspected")
        acc = [mpmath.mpc(1)]
        for z in upper:
            nxt = [mpmath.mpc(0)] * (len(acc) + 1)
            for i, a in enumerate(acc):
                nxt[i + 1] += a
                nxt[i] -= z * a
            acc = nxt
        re_c = [Fraction(float(mpmath.re(a))) for a in acc]
        im_c = [Fraction(float(mpmath.im(a))) for a in acc]
    return UnivariatePoly(re_c), UnivariatePoly(im_c)


def _newton_polish(coeffs, z, dps, iters=80):
    import mpmath

    tol = mpmath.mpf(10) ** (-(dps - 5))
    for _ in range(iters):
        val = mpmath.mpc(0)
        der = mpmath.mpc(0)
        for c in reversed(coeffs):
            der = der * z + val
            val = val * z + c
        if der == 0:
            break
        step = val / der
        z -= step
        if abs(step) <= tol * max(1, abs(z)):
            break
    return z


def _roots_consistent(roots, deg) -> bool:
    import mpmath

    for i in range(deg):
        for j in range(i):
            if abs(roots[i] - roots[j]) < mpmath.mpf(10) ** -20 * max(1, abs(roots[i])):
                return False
    return True


# ---------------------------------------------------------------------------
# constructive parameter selection for the exponential-like gadget

class GuessSelectionError(RuntimeError):
    """Degree cap reached without all three conditions verifying."""

    def __init__(self, message, failing: str, last_d: int):
        super().__init__(message)
        self.failing = failing
        self.last_d = last_d


@dataclass(frozen=True)
class GuessParams:
    H: Fraction
    delta: Fraction
    eps: Fraction
    R: Fraction
    c: Fraction
    d: int
    gamma: Fraction = Fraction(1)
    checks: dict = field(default_factory=dict)
    sos: SosPair | None = None


def smallest_integer_above(value: float) -> int:
    c = math.floor(value) + 1
    if c - value < 1e-9:
        c += 1
    return c


def check_guess_conditions(c, d: int, H, delta, eps, R) -> dict:
    """Exact verification of the three conditions for ``h = f_{c,d}``.

    With ``phi = h + T h' = e_{c,d}(-T)`` and ``2h' + T h'' = -c e_{c,d-1}(-T)``:
      (a) ``phi`` has no real roots and positive leading coefficient;
      (b) ``c e_{c,d-1}(-T) - H phi > 0`` on ``[-R, R]``;
      (c) ``H * max phi[eps, R] < min phi[-R, delta]``.
    """
    c, H, delta, eps, R = map(to_fraction, (c, H, delta, eps, R))
    phi = e_taylor(c, d).reflect()
    out = {}
    out["a"] = phi.leading > 0 and count_real_roots(phi) == 0
    psi_neg = e_taylor(c, d - 1).reflect() * c
    out["b"] = positive_on_interval(psi_neg - phi * H, -R, R)
    _, upper = interval_extrema(phi, eps, R)
    lower, _ = interval_extrema(phi, -R, delta)
    out["c"] = H * upper < lower
    out["c_margin"] = float(lower - H * upper)
    return out


def select_guess_params(H, delta, eps, R, d_cap: int = 256, gamma_margin=Fraction(11, 10),
                        decompose_up_to: int = 64) -> tuple[GuessParams, UnivariatePoly]:
    """Find ``h = gamma * f_{c,d}`` with ``h - 1`` sos and conditions (a)-(c) verified.

    ``c`` is the smallest integer above ``max(H, log(H)/(eps - delta))`` and
    ``d`` runs through 2, 4, 8, ... up to ``d_cap``.  Positivity of ``h - 1``
    is always certified exactly by a Sturm count; the explicit two-square
    decomposition is only computed when ``d <= decompose_up_to``, since the
    roots of high-degree Taylor truncations need very high working precision.
    """
    H, delta, eps, R = map(to_fraction, (H, delta, eps, R))
    if not H > 0:
        raise ValueError("H must be positive")
    if not 0 < delta < eps < R:
        raise ValueError("need 0 < delta < eps < R")
    bound = max(float(H), math.log(float(H)) / float(eps - delta))
    c = Fraction(smallest_integer_above(bound))
    limit = {"b''": c > H, "c''": float(H) * math.exp(-float(c * eps)) < math.exp(-float(c * delta))}
    d = 2
    failing = None
    while d <= d_cap:
        checks = check_guess_conditions(c, d, H, delta, eps, R)
        failing = next((k for k in ("a", "b", "c") if not checks[k]), None)
        if failing is None:
            break
        d *= 2
    else:
        raise GuessSelectionError(f"conditions not met for d <= {d_cap} (c={c}); last failure: ({failing})",
                                  failing, d // 2)
    f = f_taylor(c, d)
    m = global_min_lower_bound(f)
    if m <= 0:
        raise GuessSelectionError("could not bound f_{c,d} away from zero", "positivity", d)
    gamma = gamma_margin / m
    # round up to a short rational; h >= 1 is preserved
    gamma = Fraction(math.ceil(gamma * 10**6), 10**6)
    h = f * gamma
    if not ((h - 1).leading > 0 and count_real_roots(h - 1) == 0):
        raise GuessSelectionError("h - 1 is not positive", "sos", d)
    checks["h_minus_1_positive"] = True
    sos = sos_decompose(h - 1) if d <= decompose_up_to else None
    checks.update(limit)
    checks["min_f_lower_bound"] = float(m)
    params = GuessParams(H=H, delta=delta, eps=eps, R=R, c=c, d=d, gamma=gamma, checks=checks, sos=sos)
    return params, h
