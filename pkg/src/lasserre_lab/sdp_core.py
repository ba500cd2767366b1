"""Dense semidefinite programming kernel and SDPA sparse I/O.

Problems are stored in the primal standard form::

    minimize   <C, X>
    subject to <A_j, X> = b_j   (j = 1..m)
               X = diag(X_1, ..., X_k) psd

with dual ``maximize b'y  s.t.  C - sum_j y_j A_j = S psd``.  ``sense="max"``
flips the primal objective.  The solver is a primal-dual path-following
method on the homogeneous self-dual embedding (variables ``X, y, S, tau,
kappa``) with Nesterov-Todd scaling and a Mehrotra predictor-corrector.  The
embedding needs no feasible start and yields Farkas-type rays when either
side is infeasible, which is what the membership and feasibility questions
upstream rely on.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal-infeasible"
DUAL_INFEASIBLE = "dual-infeasible"
AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class SdpConfig:
    """Every numerical threshold used by the solver and the layers above it."""

    tol_feas: float = 1e-9          # internal stopping, relative primal/dual residual
    tol_gap: float = 1e-9           # internal stopping, relative duality gap
    tol_infeas: float = 1e-8        # ray quality needed to declare infeasibility
    accept_tol: float = 1e-7        # post-hoc check that an "optimal" answer really is one
    max_iter: int = 120
    step_fraction: float = 0.98
    min_step: float = 1e-10
    psd_rel_tol: float = 1e-8       # Gram matrices: min eig >= -psd_rel_tol * ||G||
    residual_tol: float = 1e-8      # certificate identity: defect <= residual_tol * (1 + ||f||_1)
    witness_eig_tol: float = 1e-7   # lifted point witness: min eig of every block >= -witness_eig_tol
    ambiguity_gap: float = 1e-6


DEFAULT_CONFIG = SdpConfig()


class SdpDimensionError(ValueError):
    pass


@dataclass
class SdpProblem:
    block_sizes: tuple[int, ...]
    C: list[np.ndarray]
    A: list[list[np.ndarray]]
    b: np.ndarray
    sense: str = "min"
    labels: dict = field(default_factory=dict)
    diagonal: tuple[bool, ...] | None = None

    def __post_init__(self):
        self.block_sizes = tuple(int(s) for s in self.block_sizes)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.C = [np.asarray(c, dtype=float) for c in self.C]
        self.A = [[np.asarray(a, dtype=float) for a in row] for row in self.A]
        if self.diagonal is None:
            self.diagonal = (False,) * len(self.block_sizes)
        self.diagonal = tuple(bool(v) for v in self.diagonal)
        self.validate()

    @property
    def m(self) -> int:
        return len(self.A)

    def validate(self):
        sizes = self.block_sizes
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', not {self.sense!r}")
        if len(self.diagonal) != len(sizes):
            raise SdpDimensionError("one diagonal flag per block")
        if len(self.C) != len(sizes):
            raise SdpDimensionError(f"C has {len(self.C)} blocks, expected {len(sizes)}")
        if len(self.b) != len(self.A):
            raise SdpDimensionError(f"b has length {len(self.b)} but there are {len(self.A)} constraints")
        for mat, s in zip(self.C, sizes):
            _check_block(mat, s, "C")
        for j, row in enumerate(self.A):
            if len(row) != len(sizes):
                raise SdpDimensionError(f"constraint {j} has {len(row)} blocks, expected {len(sizes)}")
            for mat, s in zip(row, sizes):
                _check_block(mat, s, f"A[{j}]")

    def stacked(self) -> list[np.ndarray]:
        """Per-block arrays of shape ``(m, s, s)``."""
        return [np.array([row[k] for row in self.A]).reshape(self.m, s, s)
                for k, s in enumerate(self.block_sizes)]

    def __eq__(self, other):
        if not isinstance(other, SdpProblem):
            return NotImplemented
        return (self.block_sizes == other.block_sizes and self.sense == other.sense
                and self.diagonal == other.diagonal
                and np.array_equal(self.b, other.b)
                and all(np.array_equal(x, y) for x, y in zip(self.C, other.C))
                and self.m == other.m
                and all(np.array_equal(x, y) for r, s in zip(self.A, other.A) for x, y in zip(r, s)))


def _check_block(mat: np.ndarray, s: int, what: str):
    if mat.shape != (s, s):
        raise SdpDimensionError(f"{what} block has shape {mat.shape}, expected {(s, s)}")
    scale = max(1.0, float(np.max(np.abs(mat)))) if mat.size else 1.0
    if mat.size and float(np.max(np.abs(mat - mat.T))) > 1e-12 * scale:
        raise SdpDimensionError(f"{what} block is not symmetric")


@dataclass
class SdpSolution:
    status: str
    X: list[np.ndarray]
    y: np.ndarray
    S: list[np.ndarray]
    primal_objective: float
    dual_objective: float
    residuals: dict
    iterations: int
    certificate: dict | None = None
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# ---------------------------------------------------------------------------
# linear algebra helpers

def _inner(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> float:
    return float(sum(np.vdot(x, y) for x, y in zip(a, b)))


def _apply_A(Ast: list[np.ndarray], X: list[np.ndarray]) -> np.ndarray:
    return sum(np.tensordot(a, x, axes=([1, 2], [0, 1])) for a, x in zip(Ast, X))


def _apply_AT(Ast: list[np.ndarray], y: np.ndarray) -> list[np.ndarray]:
    return [np.tensordot(y, a, axes=(0, 0)) for a in Ast]


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    if X.size == 0:
        return math.inf
    L = np.linalg.cholesky(X)
    Linv_dX = scipy.linalg.solve_triangular(L, dX, lower=True)
    mat = scipy.linalg.solve_triangular(L, Linv_dX.T, lower=True)
    lam = np.linalg.eigvalsh(_sym(mat))[0]
    return -1.0 / lam if lam < 0 else math.inf


def _nt_scaling(X: np.ndarray, S: np.ndarray):
    """``G`` with ``G^{-1} X G^{-T} = G^T S G = diag(lam)``; ``W = G G^T``."""
    Lx = np.linalg.cholesky(X)
    Ls = np.linalg.cholesky(S)
    U, lam, Vt = np.linalg.svd(Ls.T @ Lx)
    G = Lx @ Vt.T / np.sqrt(lam)
    Ginv = (np.sqrt(lam)[:, None] * U.T) @ Ls.T
    return G, Ginv, lam


def _solve_spd(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        factor = scipy.linalg.cho_factor(M, lower=True)
        return scipy.linalg.cho_solve(factor, rhs)
    except np.linalg.LinAlgError:
        shift = 1e-14 * max(1.0, float(np.max(np.abs(np.diag(M)))))
        for _ in range(8):
            try:
                factor = scipy.linalg.cho_factor(M + shift * np.eye(len(M)), lower=True)
                return scipy.linalg.cho_solve(factor, rhs)
            except np.linalg.LinAlgError:
                shift *= 100
        return np.linalg.lstsq(M, rhs, rcond=None)[0]


# ---------------------------------------------------------------------------
# solver

def solve(problem: SdpProblem, config: SdpConfig = DEFAULT_CONFIG) -> SdpSolution:
    """Solve ``problem``; iteration caps and stalls come back as ``ambiguous``."""
    problem.validate()
    if problem.m == 0:
        raise SdpDimensionError("at least one constraint is required")
    sign = 1.0 if problem.sense == "min" else -1.0
    sizes = problem.block_sizes
    Ast = problem.stacked()
    b = problem.b.copy()
    C = [sign * c for c in problem.C]

    # row and objective scaling; undone before residuals are reported
    row_norm = np.sqrt(sum(np.sum(a * a, axis=(1, 2)) for a in Ast))
    zero_rows = row_norm == 0
    if np.any(zero_rows & (b != 0)):
        j = int(np.flatnonzero(zero_rows & (b != 0))[0])
        y = np.zeros(problem.m)
        y[j] = math.copysign(1.0, b[j])
        return _finish(problem, Ast, C, sign, [np.zeros((s, s)) for s in sizes], y,
                       [np.zeros((s, s)) for s in sizes], 0, PRIMAL_INFEASIBLE,
                       {"kind": "primal-infeasible", "y": y, "margin": abs(b[j])},
                       f"constraint {j} has no support but nonzero right-hand side", config)
    keep = ~zero_rows
    rs = np.where(keep, row_norm, 1.0)
    Ask = [a[keep] / rs[keep][:, None, None] for a in Ast]
    bk = b[keep] / rs[keep]
    sb = max(1.0, float(np.linalg.norm(bk)))
    sc = max(1.0, math.sqrt(_inner(C, C)))
    bs = bk / sb
    Cs = [c / sc for c in C]

    X, y, S, tau, kappa, it, status, cert, msg = _hsd(sizes, Ask, bs, Cs, config)

    # undo scaling: X = sb*X', y = sc*y'/rs, S = sc*S'
    if status == PRIMAL_INFEASIBLE:
        X_out = [x * sb for x in X]
        y_full = np.zeros(problem.m)
        y_full[keep] = cert["y"] / rs[keep]
        S_out = [s * 1.0 for s in cert["S"]]
        cert = {"kind": "primal-infeasible", "y": y_full, "S": S_out,
                "margin": float(y_full @ b)}
        return _finish(problem, Ast, C, sign, X_out, y_full, S_out, it, status, cert, msg, config)
    if status == DUAL_INFEASIBLE:
        ray = cert["X"]
        cx = _inner(C, ray)
        cert = {"kind": "dual-infeasible", "X": ray, "margin": -cx}
        return _finish(problem, Ast, C, sign, ray, np.zeros(problem.m),
                       [np.zeros((s, s)) for s in sizes], it, status, cert, msg, config)
    t = tau if tau > 0 else 1.0
    X_out = [x * (sb / t) for x in X]
    y_full = np.zeros(problem.m)
    y_full[keep] = y * (sc / t) / rs[keep]
    S_out = [s * (sc / t) for s in S]
    return _finish(problem, Ast, C, sign, X_out, y_full, S_out, it, status, None, msg, config)


def _hsd(sizes, Ast, b, C, cfg: SdpConfig):
    m = len(b)
    nu = sum(sizes)
    X = [np.eye(s) for s in sizes]
    S = [np.eye(s) for s in sizes]
    y = np.zeros(m)
    tau = kappa = 1.0
    status = AMBIGUOUS
    cert = None
    msg = "iteration limit reached"
    it = 0
    normb = float(np.linalg.norm(b))
    normC = math.sqrt(_inner(C, C))
    for it in range(1, cfg.max_iter + 1):
        AX = _apply_A(Ast, X)
        ATy = _apply_AT(Ast, y)
        rp = b * tau - AX
        rd = [c * tau - a - s for c, a, s in zip(C, ATy, S)]
        cx = _inner(C, X)
        by = float(b @ y)
        rg = by - cx - kappa
        mu = (_inner(X, S) + tau * kappa) / (nu + 1)

        # stopping tests on the current iterate
        pres = np.linalg.norm(rp) / tau / (1 + normb)
        dres = math.sqrt(_inner(rd, rd)) / tau / (1 + normC)
        gap = abs(cx - by) / tau / (1 + abs(cx / tau) + abs(by / tau))
        if pres <= cfg.tol_feas and dres <= cfg.tol_feas and gap <= cfg.tol_gap:
            status, msg = OPTIMAL, "converged"
            break
        if by > 0:
            ray_res = math.sqrt(_inner([a + s for a, s in zip(ATy, S)], [a + s for a, s in zip(ATy, S)]))
            if ray_res / by <= cfg.tol_infeas and tau / kappa < 1e-2:
                status, msg = PRIMAL_INFEASIBLE, "Farkas ray for the primal found"
                cert = {"y": y / by, "S": [s / by for s in S]}
                break
        if cx < 0:
            ray_res = float(np.linalg.norm(AX))
            if ray_res / -cx <= cfg.tol_infeas and tau / kappa < 1e-2:
                status, msg = DUAL_INFEASIBLE, "improving primal ray found"
                cert = {"X": [x / -cx for x in X]}
                break

        try:
            scal = [_nt_scaling(x, s) for x, s in zip(X, S)]
        except np.linalg.LinAlgError:
            msg = "lost positive definiteness"
            break
        G = [sc[0] for sc in scal]
        Ginv = [sc[1] for sc in scal]
        lam = [sc[2] for sc in scal]
        At = [np.einsum("ki,mkl,lj->mij", g, a, g) for g, a in zip(G, Ast)]
        M = sum(a.reshape(m, -1) @ a.reshape(m, -1).T for a in At)
        Ct = [g.T @ c @ g for g, c in zip(G, C)]
        a_vec = sum(np.tensordot(a, c, axes=([1, 2], [0, 1])) for a, c in zip(At, Ct))
        q = _solve_spd(M, b + a_vec)

        def direction(eta, Rsc, r_tk):
            # Rsc: per-block right-hand side of lam∘D = Rsc in scaled coordinates
            D = [2.0 * r / (l[:, None] + l[None, :]) for r, l in zip(Rsc, lam)]
            rdt = [g.T @ r @ g for g, r in zip(G, rd)]
            # A(Rc) with Rc = G D G^T  -> <A_j, G D G^T> = <At_j, D> since At = G^T A G
            A_Rc = sum(np.tensordot(a, d, axes=([1, 2], [0, 1])) for a, d in zip(At, D))
            A_Wrd = sum(np.tensordot(a, r, axes=([1, 2], [0, 1])) for a, r in zip(At, rdt))
            p = _solve_spd(M, eta * rp + eta * A_Wrd - A_Rc)
            ATp = [np.tensordot(p, a, axes=(0, 0)) for a in At]
            ATq = [np.tensordot(q, a, axes=(0, 0)) for a in At]
            # scaled primal pieces: G^{-1} dX G^{-T} = X0s + X1s * dtau
            X0s = [d - eta * r + t for d, r, t in zip(D, rdt, ATp)]
            X1s = [-c + t for c, t in zip(Ct, ATq)]
            C_X0 = _inner(Ct, X0s)
            C_X1 = _inner(Ct, X1s)
            denom = kappa + tau * (float(b @ q) - C_X1)
            dtau = (r_tk - tau * (eta * rg + float(b @ p) - C_X0)) / denom
            dy = p + q * dtau
            dXs = [x0 + x1 * dtau for x0, x1 in zip(X0s, X1s)]
            dX = [_sym(g @ d @ g.T) for g, d in zip(G, dXs)]
            ATdy = _apply_AT(Ast, dy)
            dS = [_sym(eta * r - a + c * dtau) for r, a, c in zip(rd, ATdy, C)]
            dkappa = eta * rg + float(b @ dy) - _inner(C, dX)
            return dX, dy, dS, dtau, dkappa

        def step_length(dX, dS, dtau, dkappa):
            alpha = math.inf
            for x, d in zip(X, dX):
                alpha = min(alpha, _max_step(x, d))
            for s, d in zip(S, dS):
                alpha = min(alpha, _max_step(s, d))
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkappa < 0:
                alpha = min(alpha, -kappa / dkappa)
            return alpha

        try:
            # predictor
            R_aff = [-np.diag(l * l) for l in lam]
            dXa, dya, dSa, dta, dka = direction(1.0, R_aff, -tau * kappa)
            a_aff = min(1.0, step_length(dXa, dSa, dta, dka))
            mu_aff = (_inner([x + a_aff * d for x, d in zip(X, dXa)], [s + a_aff * d for s, d in zip(S, dSa)])
                      + (tau + a_aff * dta) * (kappa + a_aff * dka)) / (nu + 1)
            sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))
            # corrector
            R = []
            for g, gi, l, dxa, dsa in zip(G, Ginv, lam, dXa, dSa):
                dxs = gi @ dxa @ gi.T
                dss = g.T @ dsa @ g
                R.append(sigma * mu * np.eye(len(l)) - np.diag(l * l) - _sym(dxs @ dss))
            dX, dy, dS, dt, dk = direction(1.0 - sigma, R, sigma * mu - tau * kappa - dta * dka)
            alpha = min(1.0, cfg.step_fraction * step_length(dX, dS, dt, dk))
        except np.linalg.LinAlgError:
            msg = "linear algebra failure while computing the search direction"
            break
        if alpha < cfg.min_step:
            msg = "step length collapsed"
            break
        X = [_sym(x + alpha * d) for x, d in zip(X, dX)]
        S = [_sym(s + alpha * d) for s, d in zip(S, dS)]
        y = y + alpha * dy
        tau += alpha * dt
        kappa += alpha * dk
        # renormalise the homogeneous iterate to keep magnitudes moderate
        scale = tau + kappa + sum(float(np.trace(x)) for x in X) / max(nu, 1)
        if scale > 1e8 or scale < 1e-8:
            X = [x / scale for x in X]
            S = [s / scale for s in S]
            y = y / scale
            tau /= scale
            kappa /= scale
    return X, y, S, tau, kappa, it, status, cert, msg


def _finish(problem, Ast, C, sign, X, y, S, it, status, cert, msg, cfg) -> SdpSolution:
    """Recompute residuals from the returned iterate in the original data."""
    b = problem.b
    AX = _apply_A(Ast, X)
    ATy = _apply_AT(Ast, y)
    pobj = _inner(C, X)
    dobj = float(b @ y)
    rd = [c - a - s for c, a, s in zip(C, ATy, S)]
    res = {
        "primal": float(np.linalg.norm(AX - b) / (1 + np.linalg.norm(b))),
        "dual": float(math.sqrt(_inner(rd, rd)) / (1 + math.sqrt(_inner(C, C)))),
        "gap": float(abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))),
        "min_eig_X": min((float(np.linalg.eigvalsh(x)[0]) for x in X if x.size), default=0.0),
        "min_eig_S": min((float(np.linalg.eigvalsh(s)[0]) for s in S if s.size), default=0.0),
    }
    if status == OPTIMAL:
        if max(res["primal"], res["dual"], res["gap"]) > cfg.accept_tol:
            status, msg = AMBIGUOUS, "post-hoc residual check failed: " + msg
    elif status == AMBIGUOUS:
        # a run cut short can still satisfy the acceptance thresholds
        if max(res["primal"], res["dual"], res["gap"]) <= cfg.accept_tol:
            status = OPTIMAL
    return SdpSolution(status=status, X=X, y=y, S=S, primal_objective=sign * pobj,
                       dual_objective=sign * dobj, residuals=res, iterations=it,
                       certificate=cert, message=msg)


# ---------------------------------------------------------------------------
# positive semidefiniteness

@dataclass(frozen=True)
class PsdResult:
    status: str          # "pd", "psd" or "not-psd"
    min_eig: float

    @property
    def is_psd(self) -> bool:
        return self.status in ("pd", "psd")


def psd_check(A, tol: float = 1e-10) -> PsdResult:
    """Classify a symmetric matrix by its smallest eigenvalue."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if A.size == 0:
        return PsdResult("psd", 0.0)
    scale = max(1.0, float(np.max(np.abs(A))))
    if float(np.max(np.abs(A - A.T))) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    lam = float(np.linalg.eigvalsh(_sym(A))[0])
    if lam > tol:
        return PsdResult("pd", lam)
    if lam >= -tol:
        return PsdResult("psd", lam)
    return PsdResult("not-psd", lam)


# ---------------------------------------------------------------------------
# SDPA sparse format
#
# The SDPA primal is ``min c'x s.t. sum_i F_i x_i - F_0 psd``; its dual is
# ``max <F_0, Y> s.t. <F_i, Y> = c_i``.  Our dual coincides with the SDPA
# primal under c = -b, F_i = -A_i, F_0 = -C, so solvers reading the file see
# the same problem.  Max-sense problems get one leading comment line.


class SdpaFormatError(ValueError):
    def __init__(self, message: str, line: int, column: int, token: str | None = None):
        super().__init__(f"line {line}, column {column}: {message}" + (f" (token {token!r})" if token else ""))
        self.line = line
        self.column = column
        self.token = token


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_sdpa(problem: SdpProblem, path) -> None:
    Path(path).write_text(sdpa_text(problem), newline="\n")


def sdpa_text(problem: SdpProblem) -> str:
    lines = []
    if problem.sense == "max":
        lines.append("* sense max")
    lines.append(str(problem.m))
    lines.append(str(len(problem.block_sizes)))
    lines.append(" ".join(str(-s if d else s) for s, d in zip(problem.block_sizes, problem.diagonal)))
    lines.append(" ".join(_fmt(-v) if v else "0" for v in problem.b))
    mats = [problem.C] + problem.A
    for matno, blocks in enumerate(mats):
        for blockno, (mat, diag) in enumerate(zip(blocks, problem.diagonal), start=1):
            s = mat.shape[0]
            for i in range(s):
                for j in range(i if not diag else i, s if not diag else i + 1):
                    v = mat[i, j]
                    if v:
                        lines.append(f"{matno} {blockno} {i + 1} {j + 1} {_fmt(-v)}")
    return "\n".join(lines) + "\n"


_SEP = re.compile(r"[,{}()]")


def read_sdpa(path) -> SdpProblem:
    return parse_sdpa(Path(path).read_text())


def parse_sdpa(text: str) -> SdpProblem:
    raw_lines = text.split("\n")
    sense = "min"
    idx = 0
    while idx < len(raw_lines) and (raw_lines[idx].startswith(("*", '"')) or not raw_lines[idx].strip()):
        if raw_lines[idx].strip().lower() == "* sense max":
            sense = "max"
        idx += 1

    def header_tokens(k, want, what):
        if k >= len(raw_lines):
            raise SdpaFormatError(f"missing {what}", k + 1, 1)
        line = _SEP.sub(" ", raw_lines[k])
        tokens = []
        for mt in re.finditer(r"\S+", line):
            tokens.append((mt.group(), mt.start() + 1))
        if want is not None:
            tokens = tokens[:want] if len(tokens) >= want else tokens
        return tokens

    def as_int(tok, k, what):
        word, col = tok
        try:
            return int(word)
        except ValueError:
            raise SdpaFormatError(f"expected integer for {what}", k + 1, col, word) from None

    def as_float(tok, k, what):
        word, col = tok
        try:
            return float(word)
        except ValueError:
            raise SdpaFormatError(f"expected number for {what}", k + 1, col, word) from None

    toks = header_tokens(idx, 1, "mDIM")
    if not toks:
        raise SdpaFormatError("missing mDIM", idx + 1, 1)
    m = as_int(toks[0], idx, "mDIM")
    idx += 1
    toks = header_tokens(idx, 1, "nBLOCK")
    if not toks:
        raise SdpaFormatError("missing nBLOCK", idx + 1, 1)
    nblock = as_int(toks[0], idx, "nBLOCK")
    idx += 1
    toks = header_tokens(idx, nblock, "blockStruct")
    if len(toks) < nblock:
        raise SdpaFormatError(f"blockStruct needs {nblock} entries", idx + 1, 1)
    struct = [as_int(t, idx, "blockStruct") for t in toks]
    for t, s in zip(toks, struct):
        if s == 0:
            raise SdpaFormatError("block size cannot be zero", idx + 1, t[1], t[0])
    idx += 1
    toks = header_tokens(idx, m, "objective vector")
    if len(toks) < m:
        raise SdpaFormatError(f"objective vector needs {m} entries", idx + 1, 1)
    cvec = np.array([as_float(t, idx, "objective vector") for t in toks])
    idx += 1
    sizes = [abs(s) for s in struct]
    diag = tuple(s < 0 for s in struct)
    F = [[np.zeros((s, s)) for s in sizes] for _ in range(m + 1)]
    for k in range(idx, len(raw_lines)):
        line = raw_lines[k]
        if not line.strip() or line.startswith(("*", '"')):
            continue
        toks = [(mt.group(), mt.start() + 1) for mt in re.finditer(r"\S+", _SEP.sub(" ", line))]
        if len(toks) < 5:
            raise SdpaFormatError("entry line needs 'matno blockno i j value'", k + 1, 1)
        matno = as_int(toks[0], k, "matno")
        blockno = as_int(toks[1], k, "blockno")
        i = as_int(toks[2], k, "row index")
        j = as_int(toks[3], k, "column index")
        v = as_float(toks[4], k, "value")
        if not 0 <= matno <= m:
            raise SdpaFormatError("matrix number out of range", k + 1, toks[0][1], toks[0][0])
        if not 1 <= blockno <= nblock:
            raise SdpaFormatError("block number out of range", k + 1, toks[1][1], toks[1][0])
        s = sizes[blockno - 1]
        if not (1 <= i <= s and 1 <= j <= s):
            raise SdpaFormatError("index out of range", k + 1, toks[2][1], toks[2][0])
        if diag[blockno - 1] and i != j:
            raise SdpaFormatError("off-diagonal entry in a diagonal block", k + 1, toks[2][1], toks[2][0])
        F[matno][blockno - 1][i - 1, j - 1] = v
        F[matno][blockno - 1][j - 1, i - 1] = v
    C = [-f for f in F[0]]
    A = [[-f for f in row] for row in F[1:]]
    return SdpProblem(tuple(sizes), C, A, -cvec, sense=sense, diagonal=diag)
