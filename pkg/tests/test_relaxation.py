from fractions import Fraction

import numpy as np
import pytest

from lasserre_lab.polyalg import PolyMatrix, PolySystem, Polynomial
from lasserre_lab.relaxation import (build_relaxation, module_membership, optimize_linear, path_double_integral,
                                     path_integral, point_membership, search_degree)

X, Y = Polynomial.variables(2)
G1 = -(1 - X**2 - Y**2) * (4 - (X - 4)**2 - Y**2)
TWO_DISKS = PolySystem(("x", "y"), (G1, 1 - Y))
DISK = PolySystem(("x", "y"), (1 - X**2 - Y**2,))


@pytest.mark.parametrize("d, sizes", [(4, (6, 1, 3)), (6, (10, 3, 6))])
def test_two_disks_block_sizes(d, sizes):
    spec, lmi = build_relaxation(TWO_DISKS, d)
    assert lmi.block_sizes == sizes
    assert lmi.block_index == (0, 1, 2)
    assert spec.n_vars == 2 + len(spec.y_index)


def test_disk_relaxation_shapes():
    spec, lmi = build_relaxation(DISK, 2)
    assert lmi.block_sizes == (3, 1)
    # y indexes every monomial of degree 2..d except the constant and x itself
    assert set(spec.y_index) == {(2, 0), (1, 1), (0, 2)}


def test_exact_lift_is_feasible():
    _, lmi = build_relaxation(TWO_DISKS, 4)
    for p in [(0, 0), (0, 1), (Fraction(1, 2), Fraction(-1, 2)), (3, 0)]:
        y = lmi.lift_exact(p)
        blocks = lmi.evaluate_exact(p, y)
        # the constant block is a rank-one moment matrix v v^T with v_0 = 1
        assert blocks[0][0][0] == 1
        num = lmi.evaluate(p, lmi.lift(p))
        for blk in num:
            assert np.linalg.eigvalsh(blk).min() >= -1e-9 * (1 + np.abs(blk).max())


def test_point_membership_examples():
    _, lmi = build_relaxation(TWO_DISKS, 4)
    r = point_membership(lmi, (0, 0))
    assert r.feasible and r.message.startswith("exact lift")
    r = point_membership(lmi, (0, 5))
    assert r.status == "infeasible" and r.margin < 0
    _, lmi = build_relaxation(DISK, 2)
    r = point_membership(lmi, (1.5, 0))
    assert r.status == "infeasible"
    with pytest.raises(ValueError):
        point_membership(lmi, (0, 0, 0))


def test_optimize_linear_on_disk():
    _, lmi = build_relaxation(DISK, 2)
    for w in [(1.0, 0.0), (0.6, 0.8), (-1.0, 0.0)]:
        opt = optimize_linear(lmi, w)
        assert opt.value == pytest.approx(-1.0, abs=1e-6)
        assert opt.x == pytest.approx(-np.array(w), abs=1e-4)
    with pytest.raises(ValueError):
        optimize_linear(lmi, (1.0, 1.0))


def test_disk_certificate_identity_exactly():
    w1, w2 = Fraction(3, 5), Fraction(4, 5)
    lin = w1 * X + w2 * Y
    lhs = 2 * (1 - lin)
    rhs = (lin - 1)**2 + (w2 * X - w1 * Y)**2 + (1 - X**2 - Y**2)
    assert lhs == rhs


def test_module_membership_disk():
    f = 1 - Fraction(3, 5) * X - Fraction(4, 5) * Y
    res = module_membership(DISK, f, 2)
    assert res.feasible
    cert = res.certificate
    assert cert.valid and cert.residual <= cert.tolerance
    assert all(v >= -1e-8 * max(1, np.abs(cert.G[i]).max()) for i, v in cert.min_eigs.items())
    # reassemble sum g_i * sigma_i numerically and compare at random points
    gens = DISK.generators
    total = sum((gens[i] * cert.gram_polynomial(i).rows[0][0] for i in cert.G), Polynomial.zero(2))
    pts = np.random.default_rng(3).uniform(-1, 1, size=(20, 2))
    assert np.allclose(total.eval_many(pts), f.eval_many(pts), atol=1e-7)


def test_module_membership_negative_target_is_infeasible():
    res = module_membership(DISK, Polynomial.constant(2, -1), 2)
    assert res.status == "infeasible"
    res = module_membership(DISK, X, 2)
    assert not res.feasible


def test_module_membership_rejects_high_degree():
    with pytest.raises(ValueError):
        module_membership(DISK, X**3, 2)


def test_search_degree_stops_at_first_success():
    f = 1 - Y
    res, log = search_degree(lambda d: module_membership(DISK, f, d), 2, 6)
    assert res.feasible and log == [(2, "feasible")]


def test_matrix_membership_identity():
    from lasserre_lab.relaxation import matrix_module_membership
    P = PolyMatrix([[1 - X**2 - Y**2 + 1, Polynomial.zero(2)], [Polynomial.zero(2), Polynomial.constant(2, 1)]])
    res = matrix_module_membership(DISK, P, 2)
    assert res.feasible and res.certificate.k == 2


# ---------------------------------------------------------------------------
# path integrals against Gauss-Legendre quadrature

def _quad_double(fn, x, u, k=32):
    nodes, weights = np.polynomial.legendre.leggauss(k)
    t = (nodes + 1) / 2
    wt = weights / 2
    total = 0.0
    for ti, wi in zip(t, wt):
        s = ti * t           # s in [0, t]
        for si, vi in zip(s, ti * wt):
            total = total + wi * vi * fn(u + si * (x - u))
    return total


def _random_quadratic(rng):
    def q():
        c = rng.integers(-5, 6, size=6)
        terms = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        return Polynomial(2, {a: Fraction(int(v), 3) for a, v in zip(terms, c)})
    a, b, d = q(), q(), q()
    return PolyMatrix([[a, b], [b, d]])


@pytest.mark.parametrize("seed", range(5))
def test_path_double_integral_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    P = _random_quadratic(rng)
    u = [Fraction(int(v), 4) for v in rng.integers(-4, 5, size=2)]
    Q = path_double_integral(P, u)
    uf = np.array([float(v) for v in u])
    for x in rng.uniform(-2, 2, size=(4, 2)):
        got = Q.eval(x)
        want = _quad_double(lambda z: P.eval(z), x, uf)
        assert np.abs(got - want).max() <= 1e-10 * max(1.0, np.abs(want).max())


def test_path_integral_of_constant_and_linear():
    u = [Fraction(1), Fraction(0)]
    P = PolyMatrix([[X]])
    # int_0^1 (1 + s(x - 1)) ds = (1 + x) / 2
    assert path_integral(P, u).rows[0][0] == (1 + X) * Fraction(1, 2)
    # int_0^1 int_0^t 1 ds dt = 1/2
    assert path_double_integral(PolyMatrix([[Polynomial.constant(2, 1)]]), u).rows[0][0] == \
        Polynomial.constant(2, Fraction(1, 2))
