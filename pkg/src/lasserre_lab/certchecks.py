"""Hypothesis checks and certificate pipelines on top of the relaxation layer.

Everything here works on sampled evidence: zero sets are sampled by grid
seeding and Newton projection, compactness constants are sampled extrema
with a 10% safety margin, and convex-hull questions are answered on lines or
through separating directions.  Symbolic steps (modified constraints, their
Hessians, KKT multipliers, the telescoping identity) are exact.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import flint
import numpy as np
import scipy.optimize
import scipy.spatial

from .gadgets import GuessParams, UnivariatePoly, select_guess_params
from .polyalg import PolyMatrix, PolySystem, Polynomial, compose_univariate, to_fraction
from .relaxation import (GramCertificate, build_relaxation, matrix_module_membership,
                         module_membership, optimize_linear, path_double_integral,
                         point_membership, search_degree, EmptyRelaxationError,
                         RelaxationError, UnboundedRelaxationError)
from .sdp_core import DEFAULT_CONFIG, SdpConfig


def thread_count() -> int:
    raw = os.environ.get("LASSERRE_LAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Order-preserving map, fanned out over ``LASSERRE_LAB_THREADS`` workers."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


class SamplingError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# sampling

def _grid(lo, hi, per_axis: int) -> np.ndarray:
    axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def default_per_axis(n: int, budget: int = 40000) -> int:
    return max(5, int(round(budget ** (1.0 / max(n, 1)))))


def estimate_box(system: PolySystem, levels: int = 7, per_axis: int | None = None):
    """Bounding box of the sampled set, grown through boxes ``[-2^k, 2^k]^n``.

    Raises :class:`SamplingError` when feasible samples keep reaching the
    outer box (the set looks unbounded) or when no feasible sample exists.
    """
    n = system.n
    per_axis = per_axis or default_per_axis(n, 20000)
    last = None
    for k in range(levels):
        B = 2.0 ** k
        pts = _grid([-B] * n, [B] * n, per_axis)
        feas = pts[system.contains_many(pts)]
        if len(feas) == 0:
            continue
        reach = float(np.max(np.abs(feas)))
        step = 2 * B / (per_axis - 1)
        last = feas
        if reach < B - 1.5 * step:
            lo = feas.min(axis=0) - 2 * step
            hi = feas.max(axis=0) + 2 * step
            return lo, hi
    if last is None:
        raise SamplingError("no feasible sample found")
    raise SamplingError("feasible samples reach the outer box; the set looks unbounded")


def sample_set(system: PolySystem, box=None, per_axis: int | None = None,
               region: Callable | None = None, strict: bool = False) -> np.ndarray:
    """Grid points of ``S(g)`` (optionally intersected with ``region``)."""
    lo, hi = box if box is not None else estimate_box(system)
    per_axis = per_axis or default_per_axis(system.n)
    pts = _grid(lo, hi, per_axis)
    mask = np.ones(len(pts), dtype=bool)
    for g in system.constraints:
        vals = g.eval_many(pts)
        mask &= vals > 0 if strict else vals >= 0
    pts = pts[mask]
    if region is not None and len(pts):
        pts = pts[np.array([bool(region(p)) for p in pts])]
    return pts


def _dedup(points: np.ndarray, radius: float) -> np.ndarray:
    if len(points) == 0:
        return points
    order = np.lexsort(points.T[::-1])
    points = points[order]
    tree = scipy.spatial.cKDTree(points)
    keep = np.ones(len(points), dtype=bool)
    for idx in range(len(points)):
        if not keep[idx]:
            continue
        for j in tree.query_ball_point(points[idx], radius):
            if j > idx:
                keep[j] = False
    return points[keep]


def sample_zero_set(system: PolySystem, i: int, box=None, per_axis: int | None = None,
                    region: Callable | None = None, dedup_radius: float = 1e-3,
                    residual_tol: float = 1e-10, member_tol: float = 1e-9) -> np.ndarray:
    """Points of ``S(g) ∩ Z(g_i)``: grid seeds pushed onto ``g_i = 0`` by Newton steps."""
    g = system.constraints[i - 1]
    lo, hi = box if box is not None else estimate_box(system)
    per_axis = per_axis or default_per_axis(system.n, 6400)
    seeds = _grid(lo, hi, per_axis)
    grad = g.gradient()
    # start from seeds where g_i changes sign within a cell or is already small
    vals = g.eval_many(seeds)
    scale = max(1.0, float(np.max(np.abs(vals))))
    x = seeds[np.abs(vals) <= 0.25 * scale]
    for _ in range(60):
        gv = g.eval_many(x)
        G = np.stack([p.eval_many(x) for p in grad], axis=1)
        nrm = np.sum(G * G, axis=1)
        ok = nrm > 1e-24
        step = np.zeros_like(x)
        step[ok] = (gv[ok] / nrm[ok])[:, None] * G[ok]
        x = x - step
        if np.all(np.abs(gv) <= residual_tol * 1e-2):
            break
    gv = g.eval_many(x)
    good = np.abs(gv) <= residual_tol
    good &= np.all(np.isfinite(x), axis=1)
    x = x[good]
    mask = np.ones(len(x), dtype=bool)
    for j, gj in enumerate(system.constraints, start=1):
        if j != i:
            mask &= gj.eval_many(x) >= -member_tol
    x = x[mask]
    if region is not None and len(x):
        x = x[np.array([bool(region(p)) for p in x])]
    return _dedup(x, dedup_radius)


# ---------------------------------------------------------------------------
# strict quasiconcavity

@dataclass
class QcReport:
    index: int
    points: np.ndarray
    residuals: np.ndarray
    max_eigs: np.ndarray
    verdict: bool
    margin: float
    message: str = ""


def qc_values(g: Polynomial, points) -> tuple[np.ndarray, np.ndarray]:
    """Tangent-restricted max eigenvalue of ``Hess g`` at each point.

    Where the gradient vanishes the full Hessian is used instead.
    """
    grad = g.gradient()
    hess = g.hessian()
    n = g.n
    out, res = [], []
    for x in np.atleast_2d(points):
        gr = np.array([p.eval(x) for p in grad])
        Hm = hess.eval(x)
        res.append(g.eval(x))
        if np.linalg.norm(gr) <= 1e-12 * max(1.0, np.linalg.norm(Hm)):
            out.append(float(np.linalg.eigvalsh(Hm)[-1]))
            continue
        if n == 1:
            out.append(-math.inf)
            continue
        # orthonormal basis of the tangent space gr^perp
        _, _, Vt = np.linalg.svd(gr.reshape(1, -1))
        Q = Vt[1:].T
        out.append(float(np.linalg.eigvalsh(Q.T @ Hm @ Q)[-1]))
    return np.array(out), np.array(res)


def strict_qc_check(system: PolySystem, i: int, box=None, per_axis: int | None = None,
                    region: Callable | None = None, points=None) -> QcReport:
    g = system.constraints[i - 1]
    if g.is_zero():
        raise ValueError("constraint is the zero polynomial")
    if points is None:
        points = sample_zero_set(system, i, box, per_axis, region)
    points = np.atleast_2d(np.asarray(points, dtype=float)).reshape(-1, system.n)
    if len(points) == 0:
        return QcReport(i, points, np.zeros(0), np.zeros(0), False, math.nan,
                        "no sample points of the zero set found")
    eigs, res = qc_values(g, points)
    margin = float(-np.max(eigs))
    verdict = margin > 0
    msg = "strictly quasiconcave on the samples" if verdict else "tangent-restricted Hessian not negative definite"
    return QcReport(i, points, res, eigs, verdict, margin, msg)


# ---------------------------------------------------------------------------
# modified Hessian multiplier

class LambdaSearchError(RuntimeError):
    pass


@dataclass
class LambdaResult:
    lam: int
    margin: float
    samples: int


def _mdf_min_eigs(g: Polynomial, lam: float, points: np.ndarray) -> np.ndarray:
    grad = g.gradient()
    hess = g.hessian()
    G = np.stack([p.eval_many(points) for p in grad], axis=1)
    Hs = np.empty((len(points), g.n, g.n))
    for a in range(g.n):
        for b in range(g.n):
            Hs[:, a, b] = hess[a, b].eval_many(points)
    F = lam * G[:, :, None] * G[:, None, :] - Hs
    return np.linalg.eigvalsh(F)[:, 0]


def mdf_lambda_search(system: PolySystem, i: int, samples, cap: int = 2**20,
                      margin: float = 1e-6) -> LambdaResult:
    """Smallest power of two ``lam`` with ``lam ∇g∇g^T - Hess g`` pd on the samples."""
    g = system.constraints[i - 1]
    pts = np.atleast_2d(np.asarray(samples, dtype=float)).reshape(-1, system.n)
    if len(pts) == 0:
        raise LambdaSearchError("no samples")
    lam = 1
    while lam <= cap:
        worst = float(np.min(_mdf_min_eigs(g, lam, pts)))
        if worst > margin:
            return LambdaResult(lam, worst, len(pts))
        lam *= 2
    raise LambdaSearchError(f"no lambda <= {cap} makes lam*grad*grad^T - Hess positive definite "
                            f"on the samples (needs strict quasiconcavity; last margin {worst:.3e})")


# ---------------------------------------------------------------------------
# archimedean and sos-concavity probes

@dataclass
class ArchimedeanResult:
    found: bool
    N: int | None = None
    d: int | None = None
    certificate: GramCertificate | None = None
    log: list = field(default_factory=list)


def archimedean_probe(system: PolySystem, N_cap: int = 128, d_cap: int = 8,
                      config: SdpConfig = DEFAULT_CONFIG) -> ArchimedeanResult:
    """Search ``N - |x|^2`` in the truncated module; success proves the Archimedean property."""
    xs = Polynomial.variables(system.n)
    sq = sum((v * v for v in xs), Polynomial.zero(system.n))
    log = []
    for d in range(2, d_cap + 1, 2):
        N = 1
        while N <= N_cap:
            res = module_membership(system, Polynomial.constant(system.n, N) - sq, d, config)
            log.append((N, d, res.status))
            if res.feasible:
                return ArchimedeanResult(True, N, d, res.certificate, log)
            N *= 2
    return ArchimedeanResult(False, log=log)


@dataclass
class SosConcavityResult:
    found: bool
    d: int | None
    certificate: GramCertificate | None
    log: list


def sos_concavity_check(system: PolySystem, f: Polynomial, d_cap: int = 12,
                        config: SdpConfig = DEFAULT_CONFIG) -> SosConcavityResult:
    """Search a certificate for ``-Hess f`` in the matricial module."""
    P = -f.hessian()
    deg = P.degree
    d_min = 0 if deg == -math.inf else int(deg) + (int(deg) % 2)
    if d_min > d_cap:
        return SosConcavityResult(False, None, None, [])
    if not any(not g.is_zero() for g in system.constraints):
        # plain sos matrices: the Gram problem does not change with d above deg P
        d_cap = d_min
    res, log = search_degree(lambda d: matrix_module_membership(system, P, d, config), d_min, d_cap)
    return SosConcavityResult(res.feasible, res.d if res.feasible else None, res.certificate, log)


# ---------------------------------------------------------------------------
# constants and modified constraints

@dataclass
class PainConstants:
    lam: float
    R: float
    eps: float
    xi: float
    delta: float
    diam: float
    sigma: float
    tau: float
    H: float
    H_effective: float
    all_pd: bool
    densities: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("lam", "R", "eps", "xi", "delta", "diam", "sigma",
                                               "tau", "H", "H_effective", "all_pd")}


def select_pain_constants(system: PolySystem, C_samples, qc_indices: Sequence[int],
                          zero_samples: dict | None = None, safety: float = 0.1) -> PainConstants:
    """Sampled constants for the modified-constraint construction.

    Enlarged by ``1 + safety``: R, diam, tau.  Shrunk by ``1 - safety``: eps,
    xi, sigma.  ``sigma`` is the sampled threshold itself, i.e. the smallest
    distance from a zero-set sample of ``g_i`` to a sample with
    ``g_i >= delta``; a bisection over sampled pairs converges to this value.

    When every ``F_i`` is positive definite on all of ``C``, the ``J_3``
    part of the integral estimate is vacuous and ``H = lam`` already
    suffices; that value is reported as ``H_effective``.
    """
    pts = np.atleast_2d(np.asarray(C_samples, dtype=float)).reshape(-1, system.n)
    if len(pts) == 0:
        raise SamplingError("empty sample of C")
    up, down = 1 + safety, 1 - safety
    zero_samples = zero_samples or {}
    lam = 1
    for i in qc_indices:
        zs = zero_samples.get(i, np.zeros((0, system.n)))
        both = np.vstack([pts, zs]) if len(zs) else pts
        lam = max(lam, mdf_lambda_search(system, i, both).lam)
    R_raw, eps_raw, xi_raw, tau_raw = 0.0, math.inf, math.inf, 0.0
    all_pd = True
    gvals, Fmins = {}, {}
    for i in qc_indices:
        g = system.constraints[i - 1]
        gv = g.eval_many(pts)
        fm = _mdf_min_eigs(g, lam, pts)
        gvals[i], Fmins[i] = gv, fm
        R_raw = max(R_raw, float(np.max(gv)))
        bad = fm <= 0
        if np.any(bad):
            all_pd = False
            eps_raw = min(eps_raw, float(np.min(gv[bad])))
        grad = g.gradient()
        hess = g.hessian()
        G = np.stack([p.eval_many(pts) for p in grad], axis=1)
        Hs = np.stack([np.stack([hess[a, b].eval_many(pts) for b in range(system.n)], axis=1)
                       for a in range(system.n)], axis=1)
        F = lam * G[:, :, None] * G[:, None, :] - Hs
        tau_raw = max(tau_raw, float(np.max(np.linalg.norm(F, ord=2, axis=(1, 2)))))
    R = up * R_raw if R_raw > 0 else 1.0
    if eps_raw == math.inf:
        eps_raw = R_raw
    eps = down * eps_raw
    if not 0 < eps < R:
        raise SamplingError(f"could not place eps in (0, R): eps={eps}, R={R}")
    for i in qc_indices:
        sel = gvals[i] <= eps
        if np.any(sel):
            xi_raw = min(xi_raw, float(np.min(Fmins[i][sel])))
    if not xi_raw > 0 or xi_raw == math.inf:
        raise SamplingError("xi could not be bounded away from zero on the samples")
    xi = down * xi_raw
    delta = eps / 3
    hull = pts
    if len(pts) > 4 and system.n >= 2:
        try:
            hull = pts[scipy.spatial.ConvexHull(pts).vertices]
        except scipy.spatial.QhullError:
            hull = pts
    diam_raw = float(np.max(scipy.spatial.distance.pdist(hull))) if len(hull) > 1 else 0.0
    diam = up * diam_raw if diam_raw > 0 else 1.0
    sigma_raw = math.inf
    for i in qc_indices:
        zs = zero_samples.get(i)
        if zs is None or len(zs) == 0:
            raise SamplingError(f"no zero-set samples for constraint {i}")
        far = pts[gvals[i] >= delta]
        if len(far):
            tree = scipy.spatial.cKDTree(far)
            dist, _ = tree.query(zs)
            sigma_raw = min(sigma_raw, float(np.min(dist)))
    if sigma_raw == math.inf:
        sigma_raw = diam
    sigma = min(down * sigma_raw, diam)
    if not sigma > 0:
        raise SamplingError("sampled sigma collapsed to zero: sampling too coarse")
    tau = up * tau_raw
    H = max(diam * tau / (sigma * xi), lam)
    densities = {"C_samples": len(pts),
                 "zero_samples": {i: len(zero_samples.get(i, ())) for i in qc_indices}}
    return PainConstants(lam=float(lam), R=R, eps=eps, xi=xi, delta=delta, diam=diam, sigma=sigma,
                         tau=tau, H=H, H_effective=float(lam) if all_pd else H, all_pd=all_pd,
                         densities=densities)


@dataclass
class ModifiedConstraint:
    """``h_i = g_i h(g_i)`` with both Hessian derivations."""

    index: int
    g: Polynomial
    h: UnivariatePoly
    h_i: Polynomial
    hessian: PolyMatrix
    hessian_formula_equal: bool
    phi1: UnivariatePoly            # h + T h'
    phi2: UnivariatePoly            # 2h' + T h''
    params: GuessParams | None = None
    provenance: str = ""

    def hessian_at(self, x) -> np.ndarray:
        """Float Hessian via ``phi1(g) Hess g + phi2(g) ∇g ∇g^T``.

        The Taylor-type ``phi1, phi2`` cancel catastrophically in floating
        point once ``|g|`` is moderate, so they are evaluated exactly at the
        rational value of ``g(x)``.
        """
        gx = to_fraction(self.g.eval(x))
        gr = np.array([p.eval(x) for p in self.g.gradient()])
        a = float(self.phi1.eval_exact(gx))
        b = float(self.phi2.eval_exact(gx))
        return a * self.g.hessian().eval(x) + b * np.outer(gr, gr)


def _phi(h: UnivariatePoly) -> tuple[UnivariatePoly, UnivariatePoly]:
    T = UnivariatePoly.T()
    dh = h.derivative()
    return h + T * dh, dh * 2 + T * dh.derivative()


def modified_hessian_closed_form(g: Polynomial, h: UnivariatePoly) -> PolyMatrix:
    phi1, phi2 = _phi(h)
    a = compose_univariate(g, phi1)
    b = compose_univariate(g, phi2)
    grad = g.gradient()
    Hg = g.hessian()
    n = g.n
    rows = [[None] * n for _ in range(n)]
    for p in range(n):
        for q in range(p, n):
            rows[p][q] = rows[q][p] = a * Hg[p, q] + b * (grad[p] * grad[q])
    return PolyMatrix(rows)


def modify_constraint(system: PolySystem, i: int, h: UnivariatePoly,
                      params: GuessParams | None = None) -> ModifiedConstraint:
    g = system.constraints[i - 1]
    h_i = g * compose_univariate(g, h)
    direct = h_i.hessian()
    closed = modified_hessian_closed_form(g, h)
    equal = direct == closed
    if not equal:
        raise ArithmeticError("closed-form Hessian of the modified constraint disagrees with direct differentiation")
    phi1, phi2 = _phi(h)
    prov = ("h = 1: h_i = g_i" if h == UnivariatePoly.constant(1) else
            "h - 1 is a sum of two squares, so h is sos and g_i h(g_i) lies in the quadratic module")
    return ModifiedConstraint(i, g, h, h_i, direct, equal, phi1, phi2, params, prov)


def build_modified_constraints(system: PolySystem, constants: PainConstants | None,
                               qc_indices: Sequence[int], h: UnivariatePoly | None = None,
                               use_effective: bool = True, d_cap: int = 256
                               ) -> list[ModifiedConstraint]:
    """``h_i := g_i h(g_i)`` for each index; ``h`` from the guess lemma unless given."""
    params = None
    if h is None:
        if constants is None:
            raise ValueError("need constants or an explicit h")
        H = constants.H_effective if use_effective else constants.H
        H, delta, eps, R = (_short_rational(v, up) for v, up in
                            ((H, True), (constants.delta, False), (constants.eps, False), (constants.R, True)))
        if not delta < eps:
            delta = eps / 3
        params, h = select_guess_params(H, delta, eps, R, d_cap=d_cap)
    return [modify_constraint(system, i, h, params) for i in qc_indices]


def _short_rational(v: float, up: bool, digits: int = 6) -> Fraction:
    """Round to ``digits`` significant figures, conservatively up or down."""
    if v == 0:
        return Fraction(0)
    e = math.floor(math.log10(abs(v))) - digits + 1
    q = Fraction(10) ** e
    k = to_fraction(v) / q
    k = math.ceil(k) if up else math.floor(k)
    return k * q


# ---------------------------------------------------------------------------
# segment integrals of the modified Hessian

class SegmentError(ValueError):
    pass


def _fq(c) -> flint.fmpq:
    c = to_fraction(c)
    return flint.fmpq(c.numerator, c.denominator)


def _fq_poly(coeffs) -> flint.fmpq_poly:
    return flint.fmpq_poly([_fq(c) for c in coeffs])


def _restrict(p: Polynomial, u: Sequence[Fraction], w: Sequence[Fraction]) -> flint.fmpq_poly:
    """``p(u + s w)`` as a univariate polynomial in ``s``, exactly."""
    lin = [_fq_poly((ui, wi)) for ui, wi in zip(u, w)]
    out = flint.fmpq_poly([])
    for a, c in p.terms.items():
        term = _fq_poly((c,))
        for i, ai in enumerate(a):
            if ai:
                term = term * lin[i] ** ai
        out = out + term
    return out


def _weighted_integral(q: flint.fmpq_poly, weight: Callable[[int], Fraction]) -> Fraction:
    total = flint.fmpq(0)
    for k, c in enumerate(q.coeffs()):
        total += c * _fq(weight(k))
    return Fraction(int(total.p), int(total.q))


def _segment_hessian_integral(mod: ModifiedConstraint, u, x, weight) -> list[list[Fraction]]:
    u = [to_fraction(v) for v in u]
    x = [to_fraction(v) for v in x]
    w = [b - a for a, b in zip(u, x)]
    g = mod.g
    gam = _restrict(g, u, w)
    a = _fq_poly(mod.phi1.coeffs)(gam)
    b = _fq_poly(mod.phi2.coeffs)(gam)
    grad = [_restrict(p, u, w) for p in g.gradient()]
    Hg = g.hessian()
    n = g.n
    out = [[Fraction(0)] * n for _ in range(n)]
    for p in range(n):
        for q in range(p, n):
            entry = a * _restrict(Hg[p, q], u, w) + b * (grad[p] * grad[q])
            out[p][q] = out[q][p] = _weighted_integral(entry, weight)
    return out


def _segment_in_set(system: PolySystem, u, x, n_points: int = 64, tol: float = 1e-9) -> bool:
    s = np.linspace(0.0, 1.0, n_points)
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    pts = u[None, :] + s[:, None] * (x - u)[None, :]
    return bool(np.all(system.contains_many(pts, tol)))


@dataclass
class IntegralCheck:
    u: tuple
    x: tuple
    matrix: np.ndarray
    max_eig: float

    @property
    def negative(self) -> bool:
        return self.max_eig < 0


def integral_negativity_check(mod: ModifiedConstraint, u, x, system: PolySystem | None = None,
                              region: Callable | None = None) -> IntegralCheck:
    """Max eigenvalue of ``int_0^1 Hess h_i(u + s(x-u)) ds``, integrated exactly.

    ``u`` must lie on the zero set of ``g_i`` (checked to ``1e-9``).
    """
    gu = mod.g.eval(np.asarray(u, dtype=float))
    if abs(gu) > 1e-9 * max(1.0, float(mod.g.max_abs_coeff())):
        raise SegmentError(f"u is not on the zero set of g_{mod.index} (g = {gu:.3g})")
    if system is not None and not _segment_in_set(system, u, x):
        raise SegmentError("segment leaves S(g)")
    if region is not None:
        s = np.linspace(0.0, 1.0, 64)
        ua, xa = np.asarray(u, float), np.asarray(x, float)
        if not all(region(ua + t * (xa - ua)) for t in s):
            raise SegmentError("segment leaves the region C")
    M = _segment_hessian_integral(mod, u, x, lambda k: Fraction(1, k + 1))
    mat = np.array([[float(v) for v in row] for row in M])
    return IntegralCheck(tuple(map(float, u)), tuple(map(float, x)), mat, float(np.linalg.eigvalsh(mat)[-1]))


def H_iu_at(mod: ModifiedConstraint, u, x) -> np.ndarray:
    """``H_{i,u}(x)`` evaluated exactly along the segment, returned as floats."""
    M = _segment_hessian_integral(mod, u, x, lambda k: Fraction(1, (k + 1) * (k + 2)))
    return -np.array([[float(v) for v in row] for row in M])


def build_H_iu(h_i, u) -> PolyMatrix:
    """``-int_0^1 int_0^t Hess h_i(u + s(x-u)) ds dt`` as a polynomial matrix."""
    hess = h_i.hessian if isinstance(h_i, ModifiedConstraint) else h_i.hessian()
    return -path_double_integral(hess, u)


@dataclass
class PainReport:
    constants: PainConstants
    modified: list[ModifiedConstraint]
    checks: list[IntegralCheck]
    skipped: int
    worst: float
    verdict: bool
    message: str = ""


def _dyadic(v: float, bits: int = 6) -> Fraction:
    return Fraction(round(v * 2**bits), 2**bits)


def pain_pipeline(system: PolySystem, region: Callable | None = None, qc_indices: Sequence[int] | None = None,
                  pairs: int = 100, seed: int = 0, u_points: dict | None = None, box=None,
                  per_axis: int | None = None, h: UnivariatePoly | None = None,
                  max_tries: int | None = None) -> PainReport:
    """Constants, modified constraints and integral checks on sampled pairs ``(u, x)``.

    ``u`` runs over zero-set samples of ``g_i`` (or the supplied ``u_points[i]``,
    which should be exact rational points of ``Z(g_i)``); ``x`` over samples of
    ``C`` rounded to a dyadic grid.  Pairs whose segment leaves ``S(g)`` or the
    region are skipped and counted.
    """
    if box is None:
        box = estimate_box(system)
    if qc_indices is None:
        qc_indices = [i for i in range(1, system.m + 1)
                      if not system.constraints[i - 1].is_zero()
                      and strict_qc_check(system, i, box, per_axis, region).verdict]
    if not qc_indices:
        raise SamplingError("no constraint passed the strict quasiconcavity check")
    C = sample_set(system, box, per_axis, region=region)
    zeros = {i: sample_zero_set(system, i, box, per_axis, region=region) for i in qc_indices}
    constants = select_pain_constants(system, C, qc_indices, zeros)
    mods = build_modified_constraints(system, constants, qc_indices, h=h)
    rng = np.random.default_rng(seed)
    checks, skipped = [], 0
    max_tries = max_tries or 20 * pairs
    per = -(-pairs // len(mods))
    for mod in mods:
        us = list((u_points or {}).get(mod.index, ())) or list(zeros[mod.index])
        if not us:
            raise SamplingError(f"no zero-set samples for g_{mod.index}")
        got = 0
        for _ in range(max_tries):
            if got >= per:
                break
            u = us[int(rng.integers(len(us)))]
            x = [_dyadic(v) for v in C[int(rng.integers(len(C)))]]
            try:
                checks.append(integral_negativity_check(mod, u, x, system, region))
                got += 1
            except SegmentError:
                skipped += 1
    worst = max((c.max_eig for c in checks), default=math.nan)
    ok = bool(checks) and all(c.negative for c in checks)
    msg = (f"{len(checks)} pairs, max eigenvalue {worst:.3g}" if checks else "no admissible pairs")
    return PainReport(constants, mods, checks, skipped, worst, ok, msg)


# ---------------------------------------------------------------------------
# KKT multipliers

@dataclass
class KktResult:
    active: tuple[int, ...]
    multipliers: dict[int, Fraction]
    residual: float
    success: bool
    message: str = ""


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Some solution of a consistent linear system (free variables set to 0)."""
    rows, cols = len(A), len(A[0]) if A else 0
    M = [list(A[r]) + [b[r]] for r in range(rows)]
    piv_cols = []
    r = 0
    for c in range(cols):
        p = next((k for k in range(r, rows) if M[k][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        inv = 1 / M[r][c]
        M[r] = [v * inv for v in M[r]]
        for k in range(rows):
            if k != r and M[k][c] != 0:
                f = M[k][c]
                M[k] = [a - f * bb for a, bb in zip(M[k], M[r])]
        piv_cols.append(c)
        r += 1
        if r == rows:
            break
    if any(all(v == 0 for v in M[k][:cols]) and M[k][cols] != 0 for k in range(rows)):
        return None
    x = [Fraction(0)] * cols
    for k, c in enumerate(piv_cols):
        x[c] = M[k][cols]
    return x


def _min_norm_lstsq(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Exact minimum-norm least-squares solution of ``A lam = b``."""
    m = len(A[0])
    N = [[sum(A[k][i] * A[k][j] for k in range(len(A))) for j in range(m)] for i in range(m)]
    r = [sum(A[k][i] * b[k] for k in range(len(A))) for i in range(m)]
    N2 = [[sum(N[i][k] * N[k][j] for k in range(m)) for j in range(m)] for i in range(m)]
    w = _solve_exact(N2, r)
    return [sum(N[i][j] * w[j] for j in range(m)) for i in range(m)]


def kkt_recover(system: PolySystem, f: Polynomial, u, active_tol: float = 1e-9,
                residual_tol: float = 1e-9) -> KktResult:
    """Nonnegative multipliers with ``∇f(u) = Σ λ_i ∇g_i(u)``; minimum-norm among the best fits.

    All supports of the active set are enumerated; on each the exact
    minimum-norm least-squares solution is kept when nonnegative.  The best
    residual wins, ties go to the smallest Euclidean norm.
    """
    if not system.contains(u, active_tol):
        raise ValueError("u is not in S(g)")
    uq = [to_fraction(v) for v in u]
    active = tuple(i for i, g in enumerate(system.constraints, start=1)
                   if not g.is_zero() and abs(float(g.eval_exact(uq))) <= active_tol)
    target = [p.eval_exact(uq) for p in f.gradient()]
    grads = {i: [p.eval_exact(uq) for p in system.constraints[i - 1].gradient()] for i in active}
    best = (sum(t * t for t in target), Fraction(0), {})
    if len(active) > 16:
        raise ValueError("active set too large for support enumeration")
    for size in range(1, len(active) + 1):
        for support in itertools.combinations(active, size):
            A = [[grads[i][k] for i in support] for k in range(system.n)]
            lam = _min_norm_lstsq(A, target)
            if any(v < 0 for v in lam):
                continue
            fit = [sum(A[k][j] * lam[j] for j in range(size)) for k in range(system.n)]
            res = sum((t - v) ** 2 for t, v in zip(target, fit))
            norm = sum(v * v for v in lam)
            if (res, norm) < best[:2]:
                best = (res, norm, dict(zip(support, lam)))
    res2, _, lam = best
    mult = {i: lam.get(i, Fraction(0)) for i in active}
    residual = math.sqrt(float(res2))
    ok = residual <= residual_tol
    msg = "stationarity holds" if ok else f"stationarity residual {residual:.3e}"
    return KktResult(active, mult, residual, ok, msg)


def telescoping_residual(f: Polynomial, u, lambdas: dict, h: dict, H: dict) -> Polynomial:
    """``f - f(u) - Σ λ_k h_k - Σ λ_k (x-u)^T H_k (x-u)``, exactly."""
    n = f.n
    xs = Polynomial.variables(n)
    uq = [to_fraction(v) for v in u]
    w = [xs[i] - uq[i] for i in range(n)]
    out = f - f.eval_exact(uq)
    for k, lam in lambdas.items():
        quad = Polynomial.zero(n)
        Hk = H[k]
        for a in range(n):
            for b in range(n):
                quad = quad + w[a] * Hk[a, b] * w[b]
        out = out - (h[k] + quad) * lam
    return out


# ---------------------------------------------------------------------------
# Gouveia-Netzer obstruction

@dataclass
class ObstructionReport:
    u: tuple
    direction: tuple
    active: tuple[int, ...]
    dots: dict[int, float]
    orthogonal: bool
    interior_interval: tuple[float, float] | None
    hull: tuple[float, float] | None
    boundary_distance: float | None
    verdict: str                     # "obstructed", "not-obstructed" or "inconclusive"
    message: str = ""


def gn_obstruction(system: PolySystem, u, direction, T0: float = 16.0, samples: int = 8001,
                   tol: float = 1e-9, boundary_tol: float = 1e-6) -> ObstructionReport:
    u = np.asarray(u, dtype=float)
    v = np.asarray(direction, dtype=float)
    if not abs(float(np.linalg.norm(v)) - 1.0) <= 1e-12:      # also rejects nan
        raise ValueError("direction must have unit norm")
    base = dict(u=tuple(u), direction=tuple(v))
    if not system.contains(u, tol):
        return ObstructionReport(**base, active=(), dots={}, orthogonal=False, interior_interval=None,
                                 hull=None, boundary_distance=None, verdict="inconclusive",
                                 message="u is not in S(g)")
    active = tuple(i for i, g in enumerate(system.constraints, start=1) if abs(g.eval(u)) <= tol)
    dots = {}
    orthogonal = True
    for i in active:
        gr = np.array([p.eval(u) for p in system.constraints[i - 1].gradient()])
        dots[i] = float(gr @ v)
        if abs(dots[i]) > 1e-9 * max(np.linalg.norm(gr), 0.0) and np.linalg.norm(gr) > 0:
            orthogonal = False
    if samples % 2 == 0:
        samples += 1
    t = np.linspace(-T0, T0, samples)
    pts = u[None, :] + t[:, None] * v[None, :]
    feas = system.contains_many(pts, tol)
    # interior relative to L: a run of at least three consecutive feasible samples
    interval = None
    run = np.flatnonzero(feas[:-2] & feas[1:-1] & feas[2:])
    if len(run):
        k = run[0]
        j = k
        while j + 1 < len(t) and feas[j + 1]:
            j += 1
        interval = (float(t[k]), float(t[j]))
    ft = t[feas]
    hull = (float(ft.min()), float(ft.max())) if len(ft) else None
    step = t[1] - t[0]
    bdist = None
    if hull is not None:
        ends = []
        for side, end in ((-1.0, hull[0]), (1.0, hull[1])):
            dist = abs(end)
            if dist <= step / 2:
                # u looks like an endpoint on this side; look closer than the grid
                probe = side * step * 2.0 ** -np.arange(1, 31)
                near = system.contains_many(u[None, :] + probe[:, None] * v[None, :], 0.0)
                if np.any(near):
                    dist = float(np.max(np.abs(probe[near])))
            ends.append(dist)
        bdist = min(ends)
    base.update(active=active, dots=dots, orthogonal=orthogonal, interior_interval=interval,
                hull=hull, boundary_distance=bdist)
    if not orthogonal:
        return ObstructionReport(**base, verdict="not-obstructed",
                                 message="some active gradient is not orthogonal to L")
    if interval is None:
        return ObstructionReport(**base, verdict="not-obstructed",
                                 message="S(g) ∩ L has empty interior in L on the samples")
    if bdist is None or bdist > boundary_tol:
        return ObstructionReport(**base, verdict="inconclusive",
                                 message="u is not confirmed as an endpoint of the sampled hull on L")
    return ObstructionReport(**base, verdict="obstructed",
                             message="relaxations strictly contain the closed convex hull for every d")


# ---------------------------------------------------------------------------
# exactness probe

def unit_directions(n: int, K: int) -> np.ndarray:
    """Deterministic, roughly uniform unit vectors (circle, Fibonacci sphere, or seeded normals)."""
    if K <= 0:
        return np.zeros((0, n))
    if n == 1:
        return np.array([[1.0], [-1.0]] * ((K + 1) // 2))[:K]
    if n == 2:
        a = 2 * np.pi * np.arange(K) / K
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    if n == 3:
        k = np.arange(K) + 0.5
        z = 1 - 2 * k / K
        r = np.sqrt(1 - z * z)
        phi = np.pi * (3 - math.sqrt(5)) * k
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    rng = np.random.default_rng(12345)
    w = rng.standard_normal((K, n))
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def minimize_linear_on_set(system: PolySystem, w, samples: np.ndarray) -> tuple[float, np.ndarray]:
    """Grid minimiser of ``w'x`` over the samples, refined by SLSQP."""
    w = np.asarray(w, dtype=float)
    vals = samples @ w
    x0 = samples[int(np.argmin(vals))]
    best_val, best_x = float(vals.min()), x0
    grads = [g.gradient() for g in system.constraints]
    cons = [{"type": "ineq", "fun": (lambda x, g=g: g.eval(x)),
             "jac": (lambda x, gr=gr: np.array([p.eval(x) for p in gr]))}
            for g, gr in zip(system.constraints, grads)]
    res = scipy.optimize.minimize(lambda x: float(w @ x), x0, jac=lambda x: w, constraints=cons,
                                  method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
    # SLSQP often stops a hair outside S(g); pull back towards the feasible grid point
    xr = np.asarray(res.x, dtype=float)
    if np.all(np.isfinite(xr)) and not system.contains(xr, 0.0):
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = (lo + hi) / 2
            if system.contains(x0 + mid * (xr - x0), 0.0):
                lo = mid
            else:
                hi = mid
        xr = x0 + lo * (xr - x0)
    if np.all(np.isfinite(xr)) and system.contains(xr, 0.0) and float(w @ xr) < best_val:
        best_val, best_x = float(w @ xr), xr
    return best_val, np.asarray(best_x, dtype=float)


@dataclass
class DirectionRecord:
    w: tuple
    set_min: float
    x_star: tuple
    relax_min: float | None
    gap: float | None
    moment_status: str
    membership: str


@dataclass
class WitnessRecord:
    x: tuple
    in_set: bool
    separation: float | None
    separating_w: tuple | None
    membership: str
    min_eig: float | None


@dataclass
class ExactnessReport:
    d: int
    directions: list[DirectionRecord]
    witnesses: list[WitnessRecord]
    verdict: str
    message: str = ""


def convex_hull_separation(system: PolySystem, x, samples: np.ndarray) -> tuple[float, np.ndarray | None]:
    """Distance-like margin by which ``x`` lies outside the convex hull of S(g).

    A separating direction for the samples is found by linear programming and
    the minimum of the linear function over S(g) is then refined by local
    descent.  Positive return value: ``x`` is outside; ``w'x`` falls below
    ``min_S w'y`` by that amount.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    # variables (w, t): maximise t s.t. w'(s - x) >= t for all samples, -1 <= w <= 1
    A_ub = np.hstack([-(samples - x[None, :]), np.ones((len(samples), 1))])
    b_ub = np.zeros(len(samples))
    c = np.zeros(n + 1)
    c[-1] = -1
    res = scipy.optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(-1, 1)] * n + [(None, None)],
                                 method="highs")
    if not res.success or -res.fun <= 0:
        return 0.0, None
    w0 = res.x[:n] / np.linalg.norm(res.x[:n])

    # the samples miss corners of the hull; polish w on the refined margin,
    # which is concave in w before normalisation
    def margin(v):
        nv = np.linalg.norm(v)
        if nv == 0:
            return 0.0
        v = v / nv
        m, _ = minimize_linear_on_set(system, v, samples)
        return m - float(v @ x)

    pol = scipy.optimize.minimize(lambda v: -margin(v), w0, method="Nelder-Mead",
                                  options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 200 * n})
    w = pol.x / np.linalg.norm(pol.x) if -pol.fun > margin(w0) else w0
    return float(margin(w)), w


def exactness_probe(system: PolySystem, d: int, K: int = 16, per_axis: int | None = None,
                    witnesses: Sequence | None = None, config: SdpConfig = DEFAULT_CONFIG,
                    box=None) -> ExactnessReport:
    """Moment-side gaps, supporting-functional memberships and optional witness points."""
    n = system.n
    if box is None:
        box = estimate_box(system)
    samples = sample_set(system, box, per_axis)
    if len(samples) == 0:
        raise SamplingError("no sample of S(g)")
    if len(sample_set(system, box, per_axis, strict=True)) == 0:
        raise SamplingError("no strictly feasible sample: S(g) does not look full-dimensional")
    _, lmi = build_relaxation(system, d)
    W = unit_directions(n, K)
    xs = Polynomial.variables(n)

    def one(w):
        m, xstar = minimize_linear_on_set(system, w, samples)
        try:
            opt = optimize_linear(lmi, w, config)
            rel, status = opt.value, opt.solution.status
        except UnboundedRelaxationError:
            rel, status = None, "unbounded"
        except EmptyRelaxationError:
            rel, status = None, "empty"
        except RelaxationError as exc:
            rel, status = None, exc.solution.status if exc.solution is not None else "error"
        gap = None if rel is None else abs(rel - m)
        fw = Polynomial.constant(n, Fraction(1, 10**6))
        for i in range(n):
            fw = fw + (xs[i] - to_fraction(float(xstar[i]))) * to_fraction(float(w[i]))
        mem = module_membership(system, fw, max(d, 1), config).status if d >= 1 else "skipped"
        return DirectionRecord(tuple(map(float, w)), m, tuple(map(float, xstar)), rel, gap, status, mem)

    records = parallel_map(one, list(W))

    wit = []
    for x in witnesses or ():
        inside = system.contains(x, 0.0)
        sep, sw = convex_hull_separation(system, x, samples)
        pm = point_membership(lmi, x, config)
        wit.append(WitnessRecord(tuple(map(float, x)), inside, sep, None if sw is None else tuple(map(float, sw)),
                                 pm.status, None if pm.min_eigs is None else float(min(pm.min_eigs))))

    verdict, msg = _exactness_verdict(records, wit)
    return ExactnessReport(d, records, wit, verdict, msg)


def _exactness_verdict(records: list[DirectionRecord], wit: list[WitnessRecord]) -> tuple[str, str]:
    if not records and not wit:
        return "vacuous", "no directions and no witness points"
    if any(w.membership == "feasible" and not w.in_set and (w.separation or 0) > 1e-7 for w in wit):
        return "non-exact", "a point outside the convex hull of S(g) lies in the relaxation"
    if any(r.gap is not None and r.gap > 1e-4 and r.moment_status == "optimal" for r in records):
        return "non-exact", "some linear function has a relaxation gap above 1e-4"
    if any(r.moment_status not in ("optimal",) or r.membership == "ambiguous" for r in records):
        return "inconclusive", "some solve was ambiguous or failed"
    if records and all(r.gap <= 1e-5 for r in records) and all(r.membership == "feasible" for r in records):
        return "exact-evidence", "all gaps <= 1e-5 and all supporting functionals certified"
    return "inconclusive", "mixed evidence"


def left_neighbourhood_width(lmi, u, direction, t_max: float = 0.5, iters: int = 30,
                             config: SdpConfig = DEFAULT_CONFIG) -> float:
    """Largest sampled ``t`` with ``u + t*direction`` in the relaxation, by bisection."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(direction, dtype=float)
    if point_membership(lmi, u + t_max * v, config).feasible:
        return t_max
    lo, hi = 0.0, t_max
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if point_membership(lmi, u + mid * v, config).feasible:
            lo = mid
        else:
            hi = mid
    return lo
