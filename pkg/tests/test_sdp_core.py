import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lasserre_lab.polyalg import PolySystem, Polynomial
from lasserre_lab.relaxation import build_relaxation, lmi_program
from lasserre_lab.sdp_core import (SdpaFormatError, SdpDimensionError, SdpProblem, parse_sdpa, psd_check, read_sdpa,
                                   sdpa_text, solve, write_sdpa)

from sdp_fixtures import E, FIXTURES, one

GOLDEN = Path(__file__).parent / "golden"


def test_fixture_count():
    assert len(FIXTURES) == 12


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_fixture_optimum(name):
    prob, value = FIXTURES[name]
    sol = solve(prob)
    assert sol.status == "optimal", sol.message
    assert abs(sol.primal_objective - value) <= 1e-6 * (1 + abs(value))
    assert abs(sol.dual_objective - value) <= 1e-6 * (1 + abs(value))
    assert max(sol.residuals["primal"], sol.residuals["dual"], sol.residuals["gap"]) <= 1e-7


def test_primal_infeasible_certificate():
    prob = SdpProblem((1,), [one(0)], [[one(1)]], [-1])
    sol = solve(prob)
    assert sol.status == "primal-infeasible"
    y = sol.certificate["y"]
    # Farkas: A^T y is nsd while b'y > 0
    aty = sum(yj * prob.A[j][0] for j, yj in enumerate(y))
    assert np.linalg.eigvalsh(aty).max() <= 1e-9
    assert float(prob.b @ y) > 0


def test_dual_infeasible_certificate():
    prob = SdpProblem((2,), [-E(2, 0, 0)], [[E(2, 1, 1)]], [1])
    sol = solve(prob)
    assert sol.status == "dual-infeasible"
    ray = sol.certificate["X"]
    assert np.linalg.eigvalsh(ray[0]).min() >= -1e-9
    assert abs(np.vdot(prob.A[0][0], ray[0])) <= 1e-8 * np.abs(ray[0]).max()
    assert np.vdot(prob.C[0], ray[0]) < 0


def test_empty_constraint_with_nonzero_rhs_is_infeasible():
    prob = SdpProblem((2,), [np.eye(2)], [[np.zeros((2, 2))], [np.eye(2)]], [1, 1])
    assert solve(prob).status == "primal-infeasible"


def test_dimension_errors():
    with pytest.raises(SdpDimensionError):
        SdpProblem((2,), [np.eye(3)], [[np.eye(2)]], [1])
    with pytest.raises(SdpDimensionError):
        SdpProblem((2,), [np.eye(2)], [[np.eye(2)]], [1, 2])
    with pytest.raises(SdpDimensionError):
        SdpProblem((2,), [np.array([[0.0, 1], [0, 0]])], [[np.eye(2)]], [1])
    with pytest.raises(SdpDimensionError):
        solve(SdpProblem((2,), [np.eye(2)], [], []))


# ---------------------------------------------------------------------------
# weak duality on random problems that are feasible on both sides

def _random_sym(rng, n):
    a = rng.standard_normal((n, n))
    return (a + a.T) / 2


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 4))
def test_weak_duality(seed, k, m):
    rng = np.random.default_rng(seed)
    sizes = tuple(int(s) for s in rng.integers(1, 4, size=k))
    A = [[_random_sym(rng, s) for s in sizes] for _ in range(m)]
    X0 = []
    for s in sizes:
        g = rng.standard_normal((s, s))
        X0.append(g @ g.T + np.eye(s))
    b = np.array([sum(np.vdot(a, x) for a, x in zip(row, X0)) for row in A])
    y0 = rng.standard_normal(m)
    C = []
    for blk, s in enumerate(sizes):
        g = rng.standard_normal((s, s))
        C.append(g @ g.T + np.eye(s) + sum(y0[j] * A[j][blk] for j in range(m)))
    prob = SdpProblem(sizes, C, A, b)
    sol = solve(prob)
    assert sol.status == "optimal"
    upper = sum(np.vdot(c, x) for c, x in zip(C, X0))
    lower = float(b @ y0)
    assert lower <= upper
    tol = 1e-7 * (1 + abs(upper) + abs(lower))
    assert lower - tol <= sol.dual_objective <= sol.primal_objective + tol
    assert sol.primal_objective <= upper + tol


# ---------------------------------------------------------------------------
# determinism

def test_bitwise_determinism():
    prob, _ = FIXTURES["lovasz-c5"]
    a, b = solve(prob), solve(prob)
    assert a.iterations == b.iterations
    assert all(x.tobytes() == z.tobytes() for x, z in zip(a.X, b.X))
    assert a.y.tobytes() == b.y.tobytes()
    assert a.primal_objective == b.primal_objective


# ---------------------------------------------------------------------------
# psd classification

def test_psd_examples():
    assert psd_check(np.eye(3)).status == "pd"
    r = psd_check(np.diag([14.0, -10.0]))
    assert r.status == "not-psd" and r.min_eig == -10.0
    assert psd_check(np.zeros((4, 4))).status == "psd"
    with pytest.raises(ValueError):
        psd_check(np.array([[1.0, 2.0], [0.0, 1.0]]))


def pivoted_cholesky_class(A, tol=1e-9):
    """Oracle: classify by full-pivoting Cholesky of the Schur complements."""
    A = np.array(A, dtype=float)
    n = len(A)
    scale = max(1.0, np.abs(A).max())
    for k in range(n):
        rest = A[k:, k:]
        p = k + int(np.argmax(np.diag(rest)))
        piv = A[p, p]
        if piv <= tol * scale:
            # nothing positive left: psd exactly when the remainder vanishes
            return "psd" if np.abs(rest).max() <= 1e3 * tol * scale else "not-psd"
        A[[k, p]] = A[[p, k]]
        A[:, [k, p]] = A[:, [p, k]]
        col = A[k + 1:, k] / math.sqrt(piv)
        A[k + 1:, k + 1:] -= np.outer(col, col)
    return "pd"


def _random_spectrum(rng, kind, n):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = rng.uniform(0.1, 10, size=n)
    if kind == "psd":
        lam[: rng.integers(1, n + 1)] = 0.0
    elif kind == "not-psd":
        lam[: rng.integers(1, n + 1)] *= -1
    return (Q * lam) @ Q.T


def test_psd_check_agrees_with_pivoted_cholesky():
    rng = np.random.default_rng(20)
    kinds = ["pd", "psd", "not-psd"]
    seen = {k: 0 for k in kinds}
    for t in range(200):
        kind = kinds[t % 3]
        n = int(rng.integers(1, 21))
        A = _random_spectrum(rng, kind, n)
        A = (A + A.T) / 2
        got = psd_check(A, tol=1e-9).status
        assert got == pivoted_cholesky_class(A) == kind
        seen[kind] += 1
    assert min(seen.values()) >= 66


# ---------------------------------------------------------------------------
# SDPA files

TOY = SdpProblem((2,), [np.eye(2)], [[E(2, 0, 1)]], [1])


def test_sdpa_golden_file(tmp_path):
    golden = (GOLDEN / "toy.dat-s").read_text()
    assert sdpa_text(TOY) == golden
    assert read_sdpa(GOLDEN / "toy.dat-s") == TOY
    out = tmp_path / "toy.dat-s"
    write_sdpa(TOY, out)
    assert out.read_bytes() == golden.encode()


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_sdpa_round_trip(name):
    prob, _ = FIXTURES[name]
    back = parse_sdpa(sdpa_text(prob))
    assert back == prob
    assert sdpa_text(back) == sdpa_text(prob)


def test_sdpa_round_trip_preserves_solution():
    prob, value = FIXTURES["mixed-blocks"]
    sol = solve(parse_sdpa(sdpa_text(prob)))
    assert sol.primal_objective == pytest.approx(value, abs=1e-6)


def test_sdpa_corrupted_header_names_token():
    bad = (GOLDEN / "toy.dat-s").read_text().replace("1\n1\n2", "1\nx1\n2", 1)
    with pytest.raises(SdpaFormatError) as info:
        parse_sdpa(bad)
    err = info.value
    assert (err.line, err.column, err.token) == (2, 1, "x1")
    assert "x1" in str(err)


def test_sdpa_bad_entries():
    text = (GOLDEN / "toy.dat-s").read_text()
    with pytest.raises(SdpaFormatError) as info:
        parse_sdpa(text + "2 1 1 1 1\n")
    assert info.value.line == 8 and info.value.token == "2"
    with pytest.raises(SdpaFormatError) as info:
        parse_sdpa(text + "1 1 3 1 1\n")
    assert info.value.token == "3"
    with pytest.raises(SdpaFormatError):
        parse_sdpa(text.replace("-0.5", "abc"))


def test_two_disks_header():
    x, y = Polynomial.variables(2)
    g1 = -(1 - x**2 - y**2) * (4 - (x - 4)**2 - y**2)
    system = PolySystem(("x", "y"), (g1, 1 - y))
    _, lmi = build_relaxation(system, 4)
    lines = sdpa_text(lmi_program(lmi)).splitlines()
    assert lines[1] == "3"
    assert lines[2] == "6 1 3"
