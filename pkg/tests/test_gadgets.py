import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lasserre_lab.gadgets import (GuessSelectionError, NotNonnegativeError, UnivariatePoly, check_guess_conditions,
                                  count_real_roots, e_taylor, f_taylor, fujiwara_root_bound,
                                  global_min_lower_bound, interval_extrema, isolate_real_roots,
                                  positive_on_interval, select_guess_params, sos_decompose,
                                  square_free_decomposition, taylor_shift)

T = UnivariatePoly.T()


def test_e_taylor_examples():
    assert e_taylor(7, 0) == UnivariatePoly([1])
    assert e_taylor(1, 2).eval_exact(1) == Fraction(5, 2)
    assert e_taylor(3, 5).derivative() == e_taylor(3, 4) * 3


def test_f_taylor_examples():
    assert f_taylor(Fraction(9, 4), 0) == UnivariatePoly([1])
    f = f_taylor(1, 2)
    assert f == UnivariatePoly([1, Fraction(-1, 2), Fraction(1, 6)])
    assert f + T * f.derivative() == UnivariatePoly([1, -1, Fraction(1, 2)])
    assert f + T * f.derivative() == e_taylor(1, 2).reflect()
    f = f_taylor(2, 4)
    assert f.derivative() * 2 + T * f.derivative().derivative() == -(e_taylor(2, 3).reflect() * 2)


@pytest.mark.parametrize("c", [1, 2, 5])
def test_identities_up_to_20(c):
    for d in range(1, 21):
        e, f = e_taylor(c, d), f_taylor(c, d)
        assert e.derivative() == e_taylor(c, d - 1) * c
        assert T * f * c == 1 - e_taylor(c, d + 1).reflect()
        assert f + T * f.derivative() == e.reflect()
        assert f.derivative() * 2 + T * f.derivative().derivative() == -(e_taylor(c, d - 1).reflect() * c)


@pytest.mark.parametrize("c", [1, 2, 5])
def test_positivity_even_degrees(c):
    for d in range(0, 21, 2):
        e, f = e_taylor(c, d), f_taylor(c, d)
        assert count_real_roots(e) == 0 and e.leading > 0
        assert count_real_roots(f) == 0 and f.eval_exact(0) == 1


@pytest.mark.parametrize("c", [1, 2, 5])
def test_odd_taylor_polynomials_increase(c):
    for d in range(1, 20, 2):
        assert count_real_roots(e_taylor(c, d).derivative()) == 0


def test_count_real_roots_examples():
    assert count_real_roots(T * T + 1) == 0
    assert count_real_roots(e_taylor(1, 2)) == 0
    assert count_real_roots(f_taylor(4, 6)) == 0
    p = (T - 1) * (T - 2) * (T + 3)
    assert count_real_roots(p) == 3
    assert count_real_roots(p, (0, 2)) == 2          # half-open (0, 2]
    assert count_real_roots(p * p) == 3              # distinct roots
    with pytest.raises(ValueError):
        count_real_roots(UnivariatePoly())


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-6, 6), min_size=1, max_size=5, unique=True), st.integers(1, 3))
def test_count_real_roots_matches_constructed_roots(roots, extra):
    p = UnivariatePoly([1])
    for r in roots:
        p = p * (T - Fraction(r, 2))
    q = p * (T * T + extra)
    assert count_real_roots(q) == len(roots)
    found = isolate_real_roots(q)
    assert len(found) == len(roots)


def test_positive_on_interval_examples():
    assert positive_on_interval(UnivariatePoly([1]), -3, 5)
    assert not positive_on_interval(T, -1, 1)
    assert not positive_on_interval(T, 0, 1)          # zero at the endpoint
    assert positive_on_interval(T * T + Fraction(1, 100), -1, 1)


def test_fujiwara_bound_covers_roots():
    p = f_taylor(2, 32)
    B = fujiwara_root_bound(p)
    roots = np.roots([float(c) for c in reversed(p.coeffs)])
    assert np.abs(roots).max() <= float(B)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.fractions(-4, 4, max_denominator=5), min_size=1, max_size=7), st.fractions(-3, 3, max_denominator=9))
def test_taylor_shift_matches_substitution(coeffs, a):
    p = UnivariatePoly(coeffs)
    q = taylor_shift(p, a)
    for t in (Fraction(0), Fraction(1, 3), Fraction(-2)):
        assert q.eval_exact(t) == p.eval_exact(t + a)


def test_interval_extrema_encloses_true_values():
    p = e_taylor(4, 16).reflect()
    lo, hi = interval_extrema(p, Fraction(-1), Fraction(1, 10))
    ts = np.linspace(-1, 0.1, 20001)
    vals = np.polyval([float(c) for c in reversed(p.coeffs)], ts)
    assert lo <= vals.min() * (1 + 1e-12) and vals.max() <= hi * (1 + 1e-12)
    assert float(lo) == pytest.approx(vals.min(), rel=1e-6)
    assert float(hi) == pytest.approx(vals.max(), rel=1e-6)


def test_global_min_lower_bound():
    p = (T - 1) ** 2 + Fraction(1, 4)
    m = global_min_lower_bound(p)
    assert m <= Fraction(1, 4)
    assert float(m) == pytest.approx(0.25, rel=1e-5)


def test_square_free_decomposition():
    p = (T - 1) ** 3 * (T * T + 1)
    lc, parts = square_free_decomposition(p)
    prod = UnivariatePoly([lc])
    for k, q in enumerate(parts, start=1):
        prod = prod * q**k
    assert prod == p


# ---------------------------------------------------------------------------
# sos decomposition

def test_sos_examples():
    s = sos_decompose(T * T + 1)
    assert s.reconstruct() == T * T + 1
    assert {s.p, s.q} in ({T, UnivariatePoly([1])}, {-T, UnivariatePoly([1])}, {T, UnivariatePoly([-1])},
                          {-T, UnivariatePoly([-1])})
    p = (T * T + 2) ** 2
    s = sos_decompose(p)
    assert s.reconstruct() == p
    assert s.q.is_zero() or s.p.is_zero()


def test_sos_rejects_negative():
    with pytest.raises(NotNonnegativeError):
        sos_decompose(T * T - 1)
    with pytest.raises(NotNonnegativeError):
        sos_decompose(-(T * T) - 1)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.fractions(-3, 3, max_denominator=4), st.fractions(1, 3, max_denominator=4)),
                min_size=1, max_size=4),
       st.lists(st.integers(-3, 3), max_size=2))
def test_sos_decompose_random_nonnegative(pairs, real_roots):
    p = UnivariatePoly([Fraction(3, 2)])
    for a, b in pairs:
        p = p * ((T - a) ** 2 + b)
    for r in real_roots:
        p = p * (T - r) ** 2
    s = sos_decompose(p)
    assert s.scale > 0
    assert s.residual(p) <= 1e-8


# ---------------------------------------------------------------------------
# guess parameters

def test_guess_instance_and_post_hoc_sampling():
    params, h = select_guess_params(2, Fraction(1, 10), Fraction(3, 10), 1)
    assert params.c == 4
    assert params.d % 2 == 0 and params.d <= 64
    assert all(params.checks[k] for k in "abc")
    assert params.sos is not None and params.sos.residual(h - 1) <= 1e-8
    phi = h + T * h.derivative()
    assert phi == e_taylor(4, params.d).reflect() * params.gamma
    # literal inequalities at 10,000 points of [-R, R]
    H, eps, delta, R = 2.0, 0.3, 0.1, 1.0
    c = [float(v) for v in reversed(h.coeffs)]
    dh = np.polyder(c)
    ddh = np.polyder(dh)
    ts = np.linspace(-R, R, 10000)
    val = np.polyval(c, ts) + ts * np.polyval(dh, ts)
    assert np.all(val > 0)
    lhs = 2 * np.polyval(dh, ts) + ts * np.polyval(ddh, ts)
    assert np.all(lhs < -H * val)
    assert H * val[ts >= eps].max() < val[ts <= delta].min()


def test_guess_degree_regression():
    params, _ = select_guess_params(2, Fraction(1, 10), Fraction(3, 10), 1)
    assert params.d == 16
    assert params.gamma == Fraction(1706483, 250000)


def test_guess_preconditions():
    with pytest.raises(ValueError):
        select_guess_params(2, Fraction(3, 10), Fraction(3, 10), 1)
    with pytest.raises(ValueError):
        select_guess_params(0, Fraction(1, 10), Fraction(3, 10), 1)


def test_guess_cap_reports_failing_condition():
    with pytest.raises(GuessSelectionError) as info:
        select_guess_params(2, Fraction(1, 10), Fraction(3, 10), 1, d_cap=4)
    assert info.value.failing in ("a", "b", "c")


def test_guess_conditions_c_bound():
    # c must exceed max(H, log H / (eps - delta))
    params, _ = select_guess_params(2, Fraction(1, 10), Fraction(3, 10), 1)
    assert params.c > max(2, math.log(2) / 0.2)
    assert check_guess_conditions(params.c, params.d, 2, Fraction(1, 10), Fraction(3, 10), 1)["c_margin"] > 0
