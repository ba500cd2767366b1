"""Lasserre relaxations and truncated quadratic modules.

For a system ``g = (g_1, ..., g_m)`` and degree ``d`` the relaxation is the
projection onto ``x`` of ``{(x, y) : M(x, y) psd}``, where ``M`` is block
diagonal with blocks ``g_i v_i v_i^T`` after every monomial ``x^a`` with
``2 <= |a| <= d`` has been replaced by a fresh variable ``y_a``.  Here ``v_i``
lists the monomials of degree at most ``(d - deg g_i) / 2`` and ``g_0 = 1``.

The dual object is the truncated quadratic module: ``f`` belongs to it at
degree ``d`` when ``f = sum_i (v_i^T G_i v_i) g_i`` with every Gram matrix
``G_i`` psd.  The matricial version uses Gram matrices of size ``k * l_i`` on
the Kronecker basis ``v_i (x) I_k``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .polyalg import (NEG_INF, Exponent, PolyMatrix, PolySystem, Polynomial, floor_degree,
                      monomial_basis, to_fraction)
from .sdp_core import (AMBIGUOUS, DEFAULT_CONFIG, DUAL_INFEASIBLE, OPTIMAL, PRIMAL_INFEASIBLE,
                       SdpConfig, SdpProblem, SdpSolution, solve)


class RelaxationError(RuntimeError):
    """Raised when an SDP solve fails in a way that leaves no usable answer."""

    def __init__(self, message: str, solution: SdpSolution | None = None):
        super().__init__(message)
        self.solution = solution


class EmptyRelaxationError(RelaxationError):
    pass


class UnboundedRelaxationError(RelaxationError):
    pass


def half_degree(g: Polynomial, d: int):
    if g.is_zero():
        return NEG_INF
    return Fraction(d - g.degree, 2)


@dataclass(frozen=True)
class RelaxationSpec:
    system: PolySystem
    d: int
    r: tuple
    bases: tuple[tuple[Exponent, ...], ...]
    ell: tuple[int, ...]
    y_index: tuple[Exponent, ...]
    omitted: tuple[tuple[int, str], ...] = ()

    @property
    def n_vars(self) -> int:
        return self.system.n + len(self.y_index)

    def variable_names(self) -> list[str]:
        names = list(self.system.names)
        for a in self.y_index:
            names.append("y_" + "".join(str(e) for e in a))
        return names


@dataclass(frozen=True)
class BlockLMI:
    """Affine pencils ``F_i(z) = F_i0 + sum_j z_j F_ij`` in ``z = (x, y)``.

    ``coeffs[k]`` has shape ``(1 + n_vars, size, size)``; slot 0 is the
    constant part.  ``exact[k]`` holds the same data as sparse Fractions,
    keyed by ``(row, col)`` then variable slot.  ``block_index[k]`` is the
    constraint index ``i`` the block belongs to.
    """

    spec: RelaxationSpec
    block_index: tuple[int, ...]
    coeffs: tuple[np.ndarray, ...]
    exact: tuple[dict, ...]

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.coeffs)

    @property
    def n(self) -> int:
        return self.spec.system.n

    def lift(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([math.prod(float(xi) ** a for xi, a in zip(x, alpha)) for alpha in self.spec.y_index])

    def lift_exact(self, x) -> list[Fraction]:
        x = [to_fraction(v) for v in x]
        return [math.prod((xi**a for xi, a in zip(x, alpha)), start=Fraction(1)) for alpha in self.spec.y_index]

    def evaluate(self, x, y) -> list[np.ndarray]:
        z = np.concatenate([[1.0], np.asarray(x, dtype=float), np.asarray(y, dtype=float)])
        return [np.tensordot(z, c, axes=(0, 0)) for c in self.coeffs]

    def evaluate_exact(self, x, y) -> list[list[list[Fraction]]]:
        z = [Fraction(1)] + [to_fraction(v) for v in x] + [to_fraction(v) for v in y]
        out = []
        for size, entries in zip(self.block_sizes, self.exact):
            mat = [[Fraction(0)] * size for _ in range(size)]
            for (a, b), form in entries.items():
                mat[a][b] = sum((c * z[j] for j, c in form.items()), Fraction(0))
            out.append(mat)
        return out

    def block_diagonal(self, x, y) -> np.ndarray:
        """Canonical single-matrix form ``M(x, y)``."""
        blocks = self.evaluate(x, y)
        size = sum(self.block_sizes)
        out = np.zeros((size, size))
        at = 0
        for blk in blocks:
            s = blk.shape[0]
            out[at:at + s, at:at + s] = blk
            at += s
        return out

    def min_eigenvalues(self, x, y) -> list[float]:
        return [float(np.linalg.eigvalsh(b)[0]) for b in self.evaluate(x, y)]


def build_relaxation(system: PolySystem, d: int) -> tuple[RelaxationSpec, BlockLMI]:
    if d < 0:
        raise ValueError("degree must be nonnegative")
    n = system.n
    gens = system.generators
    r = tuple(half_degree(g, d) for g in gens)
    bases = tuple(tuple(monomial_basis(n, ri)) for ri in r)
    ell = tuple(len(v) for v in bases)
    y_index = tuple(a for a in monomial_basis(n, d) if sum(a) >= 2)
    slot: dict[Exponent, int] = {(0,) * n: 0}
    for i in range(n):
        e = [0] * n
        e[i] = 1
        slot[tuple(e)] = 1 + i
    for k, a in enumerate(y_index):
        slot[a] = 1 + n + k
    omitted = []
    for i, (g, ri, li) in enumerate(zip(gens, r, ell)):
        if li == 0:
            omitted.append((i, "zero constraint" if ri == NEG_INF else f"degree {g.degree} exceeds {d}"))
    spec = RelaxationSpec(system, d, r, bases, ell, y_index, tuple(omitted))

    nv = 1 + spec.n_vars
    block_index, coeffs, exact = [], [], []
    for i, (g, v) in enumerate(zip(gens, bases)):
        if not v:
            continue
        size = len(v)
        entries: dict[tuple[int, int], dict[int, Fraction]] = {}
        arr = np.zeros((nv, size, size))
        for a in range(size):
            for b in range(a, size):
                form: dict[int, Fraction] = defaultdict(Fraction)
                shift = tuple(p + q for p, q in zip(v[a], v[b]))
                for beta, c in g.terms.items():
                    gamma = tuple(p + q for p, q in zip(beta, shift))
                    form[slot[gamma]] += c
                form = {j: c for j, c in form.items() if c}
                if form:
                    entries[(a, b)] = form
                    entries[(b, a)] = form
                    for j, c in form.items():
                        arr[j, a, b] = arr[j, b, a] = float(c)
        block_index.append(i)
        coeffs.append(arr)
        exact.append(entries)
    return spec, BlockLMI(spec, tuple(block_index), tuple(coeffs), tuple(exact))


# ---------------------------------------------------------------------------
# point membership and linear optimisation over the relaxation

@dataclass
class PointMembership:
    status: str                      # "feasible", "infeasible" or "ambiguous"
    x: tuple
    y: np.ndarray | None = None
    min_eigs: list[float] | None = None
    margin: float | None = None
    certificate: list[np.ndarray] | None = None
    solution: SdpSolution | None = None
    message: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def _margin_problem(lmi: BlockLMI, x) -> SdpProblem:
    """``max t  s.t.  F_i(x, y) - t I psd`` as a standard-form dual program."""
    n = lmi.n
    x = np.asarray(x, dtype=float)
    ny = len(lmi.spec.y_index)
    C, A = [], [[] for _ in range(ny + 1)]
    for arr in lmi.coeffs:
        const = arr[0] + np.tensordot(x, arr[1:1 + n], axes=(0, 0))
        C.append(const)
        for k in range(ny):
            A[k].append(-arr[1 + n + k])
        A[ny].append(np.eye(arr.shape[1]))
    b = np.zeros(ny + 1)
    b[ny] = 1.0
    return SdpProblem(lmi.block_sizes, C, A, b, sense="min",
                      labels={"kind": "point-margin", "x": tuple(float(v) for v in x)})


def point_membership(lmi: BlockLMI, x, config: SdpConfig = DEFAULT_CONFIG) -> PointMembership:
    """Decide whether ``x`` lies in the projection of the lifted LMI set.

    Points of the basic closed set itself are answered with the exact lift.
    Otherwise the largest ``t`` with ``M(x, y) - t I psd`` is computed; a
    witness ``y`` is accepted when every block's smallest eigenvalue is at
    least ``-config.witness_eig_tol``, and a strictly negative optimal ``t``
    comes with the primal matrices separating ``x`` from the relaxation.
    """
    x = tuple(float(v) for v in x)
    if len(x) != lmi.n:
        raise ValueError(f"point has length {len(x)}, expected {lmi.n}")
    system = lmi.spec.system
    if all(g.eval_exact(x) >= 0 for g in system.constraints):
        y = lmi.lift(x)
        return PointMembership("feasible", x, y, lmi.min_eigenvalues(x, y), None,
                               message="exact lift of a point of the set")
    if not lmi.spec.y_index:
        eigs = lmi.min_eigenvalues(x, [])
        ok = min(eigs) >= -config.witness_eig_tol
        return PointMembership("feasible" if ok else "infeasible", x, np.zeros(0), eigs,
                               min(eigs), message="no lifted variables")
    prob = _margin_problem(lmi, x)
    sol = solve(prob, config)
    ny = len(lmi.spec.y_index)
    if sol.status in (OPTIMAL, AMBIGUOUS):
        y = sol.y[:ny]
        eigs = lmi.min_eigenvalues(x, y)
        t = float(sol.dual_objective)
        if min(eigs) >= -config.witness_eig_tol:
            return PointMembership("feasible", x, y, eigs, t, solution=sol, message="solver witness")
        if sol.status == OPTIMAL and sol.primal_objective < -config.witness_eig_tol:
            # <F_0(x), X> < 0 with <F_j, X> = 0 for every lifted coordinate: no y works
            return PointMembership("infeasible", x, y, eigs, float(sol.primal_objective),
                                   certificate=sol.X, solution=sol, message="separating primal matrices")
        return PointMembership("ambiguous", x, y, eigs, t, solution=sol,
                               message=f"margin {t:.3e} within tolerance: {sol.message}")
    return PointMembership("ambiguous", x, None, None, None, solution=sol,
                           message=f"unexpected solver status {sol.status}: {sol.message}")


def lmi_program(lmi: BlockLMI, w=None) -> SdpProblem:
    """``min w'x`` over the lifted set in standard dual form (``w=None``: feasibility)."""
    n = lmi.n
    nz = lmi.spec.n_vars
    b = np.zeros(nz)
    if w is not None:
        b[:n] = -np.asarray(w, dtype=float)
    C = [arr[0] for arr in lmi.coeffs]
    A = [[-arr[1 + j] for arr in lmi.coeffs] for j in range(nz)]
    return SdpProblem(lmi.block_sizes, C, A, b, sense="min",
                      labels={"kind": "relaxation", "d": lmi.spec.d,
                              "variables": lmi.spec.variable_names()})


@dataclass
class LinearOptimum:
    value: float
    x: np.ndarray
    y: np.ndarray
    residuals: dict
    solution: SdpSolution


def optimize_linear(lmi: BlockLMI, w, config: SdpConfig = DEFAULT_CONFIG) -> LinearOptimum:
    w = np.asarray(w, dtype=float)
    if w.shape != (lmi.n,):
        raise ValueError(f"direction must have length {lmi.n}")
    if abs(float(np.linalg.norm(w)) - 1.0) > 1e-12:
        raise ValueError("direction must have unit Euclidean norm")
    sol = solve(lmi_program(lmi, w), config)
    if sol.status == PRIMAL_INFEASIBLE:
        raise UnboundedRelaxationError("linear function is unbounded below on the relaxation", sol)
    if sol.status == DUAL_INFEASIBLE:
        raise EmptyRelaxationError("the lifted LMI set is empty", sol)
    if sol.status != OPTIMAL:
        raise RelaxationError(f"solver returned {sol.status}: {sol.message}", sol)
    n = lmi.n
    return LinearOptimum(-sol.dual_objective, sol.y[:n].copy(), sol.y[n:].copy(), sol.residuals, sol)


# ---------------------------------------------------------------------------
# Gram certificates

@dataclass
class GramCertificate:
    system: PolySystem
    d: int
    k: int
    target: PolyMatrix
    bases: tuple[tuple[Exponent, ...], ...]
    G: dict[int, np.ndarray]
    residual: float = math.nan
    tolerance: float = math.nan
    min_eigs: dict[int, float] = field(default_factory=dict)
    valid: bool = False

    def gram_polynomial(self, i: int) -> PolyMatrix:
        """``(v_i (x) I_k)^T G_i (v_i (x) I_k)`` as an exact polynomial matrix."""
        return _gram_form(self.G[i], self.bases[i], self.k, self.system.n)


@dataclass
class MembershipResult:
    status: str                       # "feasible", "infeasible" or "ambiguous"
    d: int
    certificate: GramCertificate | None = None
    margin: float | None = None
    dual_functional: np.ndarray | None = None
    solution: SdpSolution | None = None
    message: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def _gram_form(G: np.ndarray, basis, k: int, n: int) -> PolyMatrix:
    out = [[defaultdict(Fraction) for _ in range(k)] for _ in range(k)]
    L = len(basis)
    for a in range(L):
        for b in range(L):
            mono = tuple(p + q for p, q in zip(basis[a], basis[b]))
            for p in range(k):
                for q in range(k):
                    c = G[a * k + p, b * k + q]
                    if c:
                        out[p][q][mono] += Fraction(float(c))
    return PolyMatrix([[Polynomial(n, dict(e)) for e in row] for row in out])


def _as_matrix(P, n: int) -> PolyMatrix:
    if isinstance(P, PolyMatrix):
        return P
    return PolyMatrix([[P]])


def _l1(P: PolyMatrix) -> Fraction:
    return sum((p.l1_norm() for r in P.rows for p in r), Fraction(0))


def verify_certificate(cert: GramCertificate, config: SdpConfig = DEFAULT_CONFIG) -> GramCertificate:
    """Recheck a certificate from scratch, independent of how it was produced.

    psd-ness by symmetric eigendecomposition (``min eig >= -psd_rel_tol * ||G||``)
    and the polynomial identity in exact rational arithmetic on the binary
    values of the Gram entries.
    """
    system, k = cert.system, cert.k
    total = PolyMatrix.zeros(system.n, k)
    min_eigs = {}
    psd_ok = True
    for i, G in cert.G.items():
        if np.max(np.abs(G - G.T)) > 0:
            psd_ok = False
        lam = np.linalg.eigvalsh(0.5 * (G + G.T))
        min_eigs[i] = float(lam[0])
        scale = float(np.max(np.abs(lam))) if lam.size else 0.0
        if lam.size and lam[0] < -config.psd_rel_tol * scale:
            psd_ok = False
        g = system.generators[i]
        total = total + cert.gram_polynomial(i).map(lambda p: p * g)
    defect = total - cert.target
    residual = float(max((p.max_abs_coeff() for r in defect.rows for p in r), default=Fraction(0)))
    tol = config.residual_tol * (1 + float(_l1(cert.target)))
    cert.residual = residual
    cert.tolerance = tol
    cert.min_eigs = min_eigs
    cert.valid = psd_ok and residual <= tol
    return cert


def _gram_program(system: PolySystem, P: PolyMatrix, d: int):
    n, k = system.n, P.shape[0]
    monos = monomial_basis(n, d)
    row_of = {}
    for gamma in monos:
        for p in range(k):
            for q in range(p, k):
                row_of[(gamma, p, q)] = len(row_of)
    gens = system.generators
    bases, blocks = [], []
    for i, g in enumerate(gens):
        v = tuple(monomial_basis(n, half_degree(g, d)))
        bases.append(v)
        if v:
            blocks.append(i)
    sizes = tuple(k * len(bases[i]) for i in blocks)
    A = [[np.zeros((s, s)) for s in sizes] for _ in range(len(row_of))]
    for blk, i in enumerate(blocks):
        v = bases[i]
        g = gens[i]
        for a in range(len(v)):
            for b in range(len(v)):
                shift = tuple(x + y for x, y in zip(v[a], v[b]))
                for beta, c in g.terms.items():
                    gamma = tuple(x + y for x, y in zip(beta, shift))
                    cf = float(c)
                    for p in range(k):
                        for q in range(p, k):
                            A[row_of[(gamma, p, q)]][blk][a * k + p, b * k + q] += cf
    for row in A:
        for j, mat in enumerate(row):
            row[j] = 0.5 * (mat + mat.T)
    rhs = np.zeros(len(row_of))
    for (gamma, p, q), j in row_of.items():
        rhs[j] = float(P[p, q].coefficient(gamma))
    C = [np.zeros((s, s)) for s in sizes]
    prob = SdpProblem(sizes, C, A, rhs, sense="min",
                      labels={"kind": "gram", "d": d, "k": k, "blocks": tuple(blocks)})
    return prob, tuple(bases), blocks


def _project_affine(prob: SdpProblem, X: list[np.ndarray]) -> list[np.ndarray]:
    """Least-norm correction of ``X`` onto ``{A(X) = b}``; keeps symmetry."""
    mats = np.array([np.concatenate([a.ravel() for a in row]) for row in prob.A])
    flat = np.concatenate([x.ravel() for x in X])
    res = prob.b - mats @ flat
    delta = np.linalg.lstsq(mats, res, rcond=None)[0]
    flat = flat + delta
    out, at = [], 0
    for s in prob.block_sizes:
        blk = flat[at:at + s * s].reshape(s, s)
        out.append(0.5 * (blk + blk.T))
        at += s * s
    return out


def _clip_psd(X: list[np.ndarray]) -> list[np.ndarray]:
    out = []
    for blk in X:
        lam, V = np.linalg.eigh(blk)
        if lam.size and lam[0] < 0:
            blk = (V * np.maximum(lam, 0.0)) @ V.T
            blk = 0.5 * (blk + blk.T)
        out.append(blk)
    return out


def _polish(prob: SdpProblem, X: list[np.ndarray], config: SdpConfig, rounds: int = 20) -> list[np.ndarray]:
    """Alternate affine and psd projections; the result is psd by construction.

    Interior-point output satisfies the linear constraints only to solver
    precision and can carry eigenvalues of order ``-1e-10`` in blocks that are
    essentially zero, which a relative psd test rejects.  Clipping last makes
    every block exactly psd up to rounding, and the exact residual check
    afterwards decides whether the clipped matrices still certify the identity.
    """
    mats = np.array([np.concatenate([a.ravel() for a in row]) for row in prob.A])
    tol = 0.1 * config.residual_tol * (1 + float(np.sum(np.abs(prob.b))))
    X = _project_affine(prob, X)
    for _ in range(rounds):
        X = _clip_psd(X)
        flat = np.concatenate([x.ravel() for x in X])
        if float(np.max(np.abs(mats @ flat - prob.b), initial=0.0)) <= tol:
            break
        X = _project_affine(prob, X)
    return X


def matrix_module_membership(system: PolySystem, P, d: int,
                             config: SdpConfig = DEFAULT_CONFIG) -> MembershipResult:
    """Search psd Gram matrices with ``P = sum_i g_i (v_i (x) I)^T G_i (v_i (x) I)``."""
    P = _as_matrix(P, system.n)
    if not P.is_symmetric:
        raise ValueError("target matrix must be symmetric")
    if P.n != system.n:
        raise ValueError("target and system use different variable counts")
    if P.degree > d:
        raise ValueError(f"target has degree {P.degree} > d = {d}")
    k = P.shape[0]
    prob, bases, blocks = _gram_program(system, P, d)
    # coefficients of the target that no Gram block can reach
    reach = np.array([any(np.any(blk) for blk in row) for row in prob.A])
    if np.any(~reach & (prob.b != 0)):
        return MembershipResult("infeasible", d, margin=math.inf,
                                message="target has a monomial outside the module's support")
    if not blocks:
        return MembershipResult("infeasible", d, message="no Gram blocks at this degree")
    sol = solve(prob, config)
    if sol.status == PRIMAL_INFEASIBLE:
        return MembershipResult("infeasible", d, margin=float(sol.certificate["margin"]),
                                dual_functional=sol.certificate["y"], solution=sol,
                                message="separating linear functional found")
    if sol.status not in (OPTIMAL, AMBIGUOUS):
        return MembershipResult("ambiguous", d, solution=sol, message=sol.message)
    X = _polish(prob, sol.X, config)
    cert = GramCertificate(system, d, k, P, bases, {i: x for i, x in zip(blocks, X)})
    verify_certificate(cert, config)
    if cert.valid:
        return MembershipResult("feasible", d, cert, solution=sol, message="certificate verified")
    return MembershipResult("ambiguous", d, cert, solution=sol,
                            message=f"certificate failed verification (residual {cert.residual:.2e}); {sol.message}")


def module_membership(system: PolySystem, f: Polynomial, d: int,
                      config: SdpConfig = DEFAULT_CONFIG) -> MembershipResult:
    return matrix_module_membership(system, PolyMatrix([[f]]), d, config)


def search_degree(check: Callable[[int], MembershipResult], d_min: int, d_cap: int = 12,
                  step: int = 2) -> tuple[MembershipResult, list[tuple[int, str]]]:
    """Run ``check`` at ``d_min, d_min + step, ...`` until one is feasible."""
    log = []
    result = None
    for d in range(d_min, d_cap + 1, step):
        result = check(d)
        log.append((d, result.status))
        if result.feasible:
            break
    if result is None:
        raise ValueError("empty degree range")
    return result, log


# ---------------------------------------------------------------------------
# path integrals

def _path_average(p: Polynomial, u: Sequence[Fraction], weight: Callable[[int], Fraction]) -> Polynomial:
    n = p.n
    xs = Polynomial.variables(n)
    shifted = p.substitute([xs[i] + u[i] for i in range(n)])
    back = [xs[i] - u[i] for i in range(n)]
    out = Polynomial.zero(n)
    if shifted.is_zero():
        return out
    for q in range(int(shifted.degree) + 1):
        part = shifted.homogeneous_part(q)
        if not part.is_zero():
            out = out + part * weight(q)
    return out.substitute(back)


def path_double_integral(P, u) -> PolyMatrix:
    """``int_0^1 int_0^t P(u + s(x - u)) ds dt``, exactly."""
    P = _as_matrix(P, len(u))
    u = [to_fraction(v) for v in u]
    if len(u) != P.n:
        raise ValueError("base point has the wrong length")
    return P.map(lambda p: _path_average(p, u, lambda q: Fraction(1, (q + 1) * (q + 2))))


def path_integral(P, u) -> PolyMatrix:
    """``int_0^1 P(u + s(x - u)) ds``, exactly."""
    P = _as_matrix(P, len(u))
    u = [to_fraction(v) for v in u]
    if len(u) != P.n:
        raise ValueError("base point has the wrong length")
    return P.map(lambda p: _path_average(p, u, lambda q: Fraction(1, q + 1)))


# ---------------------------------------------------------------------------
# reports

def certificate_report(cert: GramCertificate) -> str:
    lines = [f"gram certificate  d={cert.d}  k={cert.k}",
             f"residual {format(cert.residual, '.17g')}  tolerance {format(cert.tolerance, '.17g')}",
             f"valid {str(cert.valid).lower()}"]
    for i, G in sorted(cert.G.items()):
        label = "1" if i == 0 else cert.system.labels[i - 1]
        lines.append(f"G_{i} ({label}) size {G.shape[0]}  min_eig {format(cert.min_eigs.get(i, math.nan), '.17g')}")
        for a in range(G.shape[0]):
            lines.append(" ".join(format(float(G[a, b]), ".17g") for b in range(a + 1)))
    return "\n".join(lines) + "\n"
