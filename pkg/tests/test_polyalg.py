import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lasserre_lab.gadgets import UnivariatePoly, f_taylor
from lasserre_lab.polyalg import (NEG_INF, PolyMatrix, PolySystem, Polynomial, arith, compose_univariate,
                                  degree, eval_matrix, grlex_key, monomial_basis)

X, Y = Polynomial.variables(2)
G1 = -(1 - X**2 - Y**2) * (4 - (X - 4)**2 - Y**2)
G2 = 1 - Y


# ---------------------------------------------------------------------------
# strategies

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@st.composite
def polys(draw, n=None, max_deg=4, max_terms=6):
    n = draw(st.integers(1, 3)) if n is None else n
    k = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(k):
        a = tuple(draw(st.lists(st.integers(0, max_deg), min_size=n, max_size=n)))
        if sum(a) <= max_deg:
            terms[a] = draw(rationals)
    return Polynomial(n, terms)


@st.composite
def poly_pair_and_point(draw):
    n = draw(st.integers(1, 3))
    return draw(polys(n)), draw(polys(n)), tuple(draw(rationals) for _ in range(n))


# ---------------------------------------------------------------------------
# degree and arithmetic

def test_degree_examples():
    assert degree(Polynomial.zero(2)) == NEG_INF
    assert NEG_INF < -10**9
    assert degree(G2) == 1
    assert degree(G1) == 4


def test_arith_examples():
    assert arith(1 - Y, Y, "add") == Polynomial.constant(2, 1)
    assert arith(arith(1 - X**2 - Y**2, 4 - (X - 4)**2 - Y**2, "mul"), -1, "scale") == G1
    assert arith(G1, Polynomial.zero(2), "mul").is_zero()
    with pytest.raises(ValueError):
        _ = X + Polynomial.variables(3)[0]


def test_zero_coefficients_pruned():
    p = Polynomial(2, {(1, 0): 1, (0, 1): 0})
    assert dict(p.terms) == {(1, 0): Fraction(1)}
    assert (X - X).terms == {}


@settings(max_examples=60, deadline=None)
@given(poly_pair_and_point())
def test_product_evaluates_exactly(data):
    p, q, x = data
    assert (p * q).eval_exact(x) == p.eval_exact(x) * q.eval_exact(x)
    assert (p + q).eval_exact(x) == p.eval_exact(x) + q.eval_exact(x)


@settings(max_examples=60, deadline=None)
@given(poly_pair_and_point())
def test_degree_is_additive(data):
    p, q, _ = data
    if p.is_zero() or q.is_zero():
        assert (p * q).is_zero()
        return
    lead = p.homogeneous_part(p.degree) * q.homogeneous_part(q.degree)
    if not lead.is_zero():
        assert (p * q).degree == p.degree + q.degree


def test_large_products_match_dict_kernel():
    # the FLINT path kicks in for large products; compare with a slow expansion
    p = (1 + X + 2 * Y - Fraction(1, 3) * X * Y) ** 6
    q = (X - Fraction(5, 7) * Y**2 + 3) ** 5
    slow = {}
    for a, c in p.terms.items():
        for b, e in q.terms.items():
            k = (a[0] + b[0], a[1] + b[1])
            slow[k] = slow.get(k, 0) + c * e
    assert p * q == Polynomial(2, slow)


# ---------------------------------------------------------------------------
# calculus

def test_gradient_examples():
    assert G2.gradient() == (Polynomial.zero(2), Polynomial.constant(2, -1))
    assert [p.eval_exact((0, 1)) for p in G1.gradient()] == [0, -26]
    H = G1.hessian().eval_exact((1, 0))
    assert H == [[14, 0], [0, -10]]
    v = np.array([0.0, 1.0])
    assert v @ G1.hessian().eval((1, 0)) @ v == -10


def _fd_grad(p, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    out = []
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        out.append((p.eval(x + e) - p.eval(x - e)) / (2 * h))
    return np.array(out)


def test_gradient_of_g1_matches_finite_differences():
    assert np.allclose(_fd_grad(G1, (0, 1)), [0, -26], atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(polys(max_deg=4), st.randoms(use_true_random=False))
def test_derivatives_match_finite_differences(p, rnd):
    n = p.n
    grad = p.gradient()
    H = p.hessian()
    for _ in range(20):
        x = np.array([rnd.uniform(-1, 1) for _ in range(n)])
        g_fd = _fd_grad(p, x)
        g = np.array([q.eval(x) for q in grad])
        scale = 1 + np.abs(g).max()
        assert np.abs(g - g_fd).max() <= 1e-6 * scale * 10
        H_fd = np.array([_fd_grad(q, x) for q in grad])
        Hx = H.eval(x)
        assert np.abs(Hx - H_fd).max() <= 1e-6 * (1 + np.abs(Hx).max()) * 10


@settings(max_examples=40, deadline=None)
@given(polys())
def test_hessian_exactly_symmetric(p):
    H = p.hessian()
    assert H.is_symmetric
    for i in range(p.n):
        for j in range(p.n):
            assert p.derivative(i).derivative(j) == p.derivative(j).derivative(i)


# ---------------------------------------------------------------------------
# composition and evaluation

def test_compose_examples():
    T = UnivariatePoly.T()
    assert compose_univariate(G1, T) == G1
    (x,) = Polynomial.variables(1)
    assert compose_univariate(x, 1 + T * T) == 1 + x**2
    g = 1 - x**2
    h = f_taylor(4, 2)
    got = g * compose_univariate(g, h)
    naive = Polynomial.zero(1)
    for k, c in enumerate(h.coeffs):
        naive = naive + g**k * c
    assert got == g * naive
    assert got.degree == 6


def test_compose_matches_powers_for_bivariate():
    h = UnivariatePoly([Fraction(1, 3), -2, 0, Fraction(5, 2), 1])
    naive = sum((G1**k * c for k, c in enumerate(h.coeffs)), Polynomial.zero(2))
    assert compose_univariate(G1, h) == naive


def test_eval_examples():
    assert G1.eval_exact((0, 1)) == 0
    assert G2.eval_exact((0, 1)) == 0
    v = G1.eval_exact((Fraction(-1, 20), 1))
    assert v == Fraction(-5361, 160000)
    assert v < 0
    assert G1.eval((-0.05, 1.0)) == pytest.approx(float(v), rel=1e-14)
    one = Polynomial.constant(3, 1)
    assert one.eval((0.3, -1.0, 7.0)) == 1.0


def test_eval_many_agrees_with_eval():
    pts = np.random.default_rng(1).uniform(-2, 2, size=(30, 2))
    assert np.allclose(G1.eval_many(pts), [G1.eval(p) for p in pts], rtol=1e-12, atol=1e-12)


def test_eval_matrix():
    M = eval_matrix(G1.hessian(), (1, 0))
    assert np.array_equal(M, np.array([[14.0, 0.0], [0.0, -10.0]]))


def test_eval_checks_length():
    with pytest.raises(ValueError):
        G1.eval((1.0,))


# ---------------------------------------------------------------------------
# monomial bases

def test_monomial_basis_examples():
    assert monomial_basis(2, 1) == [(0, 0), (1, 0), (0, 1)]
    assert len(monomial_basis(2, 2)) == 6
    assert monomial_basis(2, -1) == []
    assert monomial_basis(2, NEG_INF) == []
    assert monomial_basis(2, Fraction(3, 2)) == monomial_basis(2, 1)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("r", range(7))
def test_monomial_basis_size_and_order(n, r):
    B = monomial_basis(n, r)
    assert len(B) == math.comb(n + r, n)
    assert len(set(B)) == len(B)
    keys = [grlex_key(a) for a in B]
    assert all(a < b for a, b in zip(keys, keys[1:]))


# ---------------------------------------------------------------------------
# matrices and systems

def test_polymatrix_symmetry_and_shape():
    M = PolyMatrix([[X, Y], [Y, 1 - X]])
    assert M.shape == (2, 2) and M.is_symmetric
    assert not PolyMatrix([[X, Y], [X, 1 - X]]).is_symmetric


def test_polysystem_contains():
    S = PolySystem(("x", "y"), (G1, G2))
    assert S.labels == ("g1", "g2")
    assert S.contains((0, 0)) and S.contains((0, 1))
    assert not S.contains((-0.05, 1))
    assert S.generators[0] == Polynomial.constant(2, 1)
    with pytest.raises(ValueError):
        PolySystem(("x", "x"), ())
