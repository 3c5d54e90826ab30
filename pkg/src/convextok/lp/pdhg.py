"""Restarted primal-dual hybrid gradient for box-bounded LPs.

Solves ``min c'x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lb <= x <= ub`` via
the saddle point ``min_x max_y c'x + y'(Kx - q)`` with ``K = [A_eq; A_ub]``
and ``y_ub >= 0``. Iterations run on a Ruiz + Pock-Chambolle rescaled copy;
restarts to the average or current iterate are triggered by KKT-error decay
and the primal weight is re-balanced at every restart.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionMismatchError
from .problem import LpProblem

logger = logging.getLogger(__name__)

ONE_THRESHOLD = 0.999
ZERO_THRESHOLD = 0.001


@dataclass(frozen=True)
class SolverOptions:
    gap_mode: str = "rel"  # "rel" or "abs"
    gap_tol: float = 1e-6
    residual_tol: float = 1e-8
    max_iters: int = 200_000
    check_every: int = 64
    ruiz_iters: int = 10
    precondition: bool = True
    restart_sufficient: float = 0.2
    restart_necessary: float = 0.8
    restart_artificial: float = 0.36
    primal_weight_smoothing: float = 0.5
    step_safety: float = 0.99
    seed: int | None = None  # reserved; the solver draws no random numbers

    def __post_init__(self):
        if self.gap_mode not in ("rel", "abs"):
            raise ValueError("gap_mode must be 'rel' or 'abs'")
        if self.gap_tol <= 0 or self.residual_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.check_every < 1:
            raise ValueError("check_every must be >= 1")

    def to_dict(self) -> dict:
        return {
            "gap_mode": self.gap_mode,
            "gap_tol": self.gap_tol,
            "residual_tol": self.residual_tol,
            "max_iters": self.max_iters,
            "precondition": self.precondition,
        }


@dataclass(eq=False)
class LpSolution:
    x: np.ndarray
    y_eq: np.ndarray
    y_ub: np.ndarray
    objective: float
    dual_value: float
    primal_residual: float  # relative: ||r_p|| / (1 + ||q||)
    dual_residual: float  # relative: ||r_d|| / (1 + ||c||)
    gap: float  # primal - dual
    rel_gap: float  # |gap| / (1 + |primal| + |dual|)
    iterations: int
    wall_time: float
    converged: bool
    gap_mode: str = "rel"
    restarts: int = 0
    n_free: int = 0
    n_priced: int = 0
    history: list[dict] = field(default_factory=list, repr=False)

    @property
    def f(self) -> np.ndarray:
        return self.x[: self.n_free]

    @property
    def p(self) -> np.ndarray:
        return self.x[self.n_free : self.n_free + self.n_priced]

    @property
    def c(self) -> np.ndarray:
        return self.x[self.n_free + self.n_priced :]

    @property
    def status(self) -> str:
        return "optimal" if self.converged else "iteration_limit"

    def integrality_stats(self, budget: int | None = None) -> dict:
        """Counts of near-one and non-near-zero entries, per variable block."""
        out = {}
        for name, v in (("c", self.c), ("f", self.f), ("p", self.p)):
            out[f"{name}_ones"] = int(np.count_nonzero(v >= ONE_THRESHOLD))
            out[f"{name}_nonzeros"] = int(np.count_nonzero(v > ZERO_THRESHOLD))
        if budget:
            out["c_ones_pct"] = 100.0 * out["c_ones"] / budget
            out["c_nonzeros_pct"] = 100.0 * out["c_nonzeros"] / budget
        return out

    def summary(self) -> dict:
        return {
            "status": self.status,
            "objective": self.objective,
            "dual_value": self.dual_value,
            "gap": self.gap,
            "rel_gap": self.rel_gap,
            "gap_mode": self.gap_mode,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "iterations": self.iterations,
            "restarts": self.restarts,
        }


def _stack(problem: LpProblem) -> tuple[sp.csr_matrix, np.ndarray]:
    K = sp.vstack([problem.A_eq, problem.A_ub], format="csr")
    q = np.concatenate([problem.b_eq, problem.b_ub])
    return K, q


def _lagrangian_dual(
    c: np.ndarray, q: np.ndarray, y: np.ndarray, KTy: np.ndarray, lb: np.ndarray, ub: np.ndarray
) -> tuple[float, np.ndarray]:
    """Dual objective and the part of the reduced cost no finite bound absorbs."""
    rc = c + KTy
    pos = rc > 0
    lo_ok = np.isfinite(lb)
    hi_ok = np.isfinite(ub)
    absorbed = np.where(pos & lo_ok, rc, 0.0) + np.where(~pos & hi_ok, rc, 0.0)
    residual = rc - absorbed
    contrib = np.where(pos & lo_ok, rc * np.where(lo_ok, lb, 0.0), 0.0)
    contrib = contrib + np.where(~pos & hi_ok, rc * np.where(hi_ok, ub, 0.0), 0.0)
    return float(-q @ y + contrib.sum()), residual


def _roundoff_bound(
    K: sp.csr_matrix, c: np.ndarray, q: np.ndarray, y: np.ndarray, lb: np.ndarray, ub: np.ndarray
) -> float:
    """Forward error bound on evaluating the dual objective in float64.

    Subtracting it makes the reported dual value a rigorous lower bound
    for the exact LP, not just for its rounded evaluation.
    """
    absy = np.abs(y)
    col_terms = np.abs(c) + abs(K).T @ absy
    scale = np.maximum(np.where(np.isfinite(lb), np.abs(lb), 0.0), np.where(np.isfinite(ub), np.abs(ub), 0.0))
    depth = K.shape[0] + K.shape[1] + 2
    u = np.finfo(float).eps
    return float(2.0 * depth * u * (np.abs(q) @ absy + col_terms @ scale))


def duality_gap(problem: LpProblem, solution: LpSolution) -> tuple[float, float, float]:
    """``(primal value, dual value, primal - dual)`` for a solution's stored vectors.

    Inequality duals are clamped to be non-negative and the dual objective is
    lowered by its floating-point error bound, so the dual value is a valid
    lower bound on the LP optimum for any stored duals.
    """
    x, y_eq, y_ub = solution.x, solution.y_eq, solution.y_ub
    if x.shape != (problem.n_cols,) or y_eq.shape != (problem.n_eq,) or y_ub.shape != (problem.n_ub,):
        raise DimensionMismatchError(
            f"solution shapes x{x.shape} y_eq{y_eq.shape} y_ub{y_ub.shape} do not match "
            f"problem ({problem.n_cols} cols, {problem.n_eq} eq, {problem.n_ub} ub)"
        )
    return _certified(problem, x, np.concatenate([y_eq, np.maximum(y_ub, 0.0)]))


def _certified(problem: LpProblem, x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    K, q = _stack(problem)
    dual, _ = _lagrangian_dual(problem.c, q, y, K.T @ y, problem.lb, problem.ub)
    dual -= _roundoff_bound(K, problem.c, q, y, problem.lb, problem.ub)
    primal = problem.objective(x)
    return primal, dual, primal - dual


def _ruiz_pock_chambolle(K: sp.csr_matrix, ruiz_iters: int) -> tuple[np.ndarray, np.ndarray]:
    m, n = K.shape
    dr = np.ones(m)
    dc = np.ones(n)
    Ks = K.copy()
    absK = abs(Ks)
    for _ in range(ruiz_iters):
        row = np.sqrt(absK.max(axis=1).toarray().ravel())
        col = np.sqrt(absK.max(axis=0).toarray().ravel())
        row[row == 0] = 1.0
        col[col == 0] = 1.0
        dr /= row
        dc /= col
        absK = sp.diags(1.0 / row) @ absK @ sp.diags(1.0 / col)
    row = np.sqrt(np.asarray(absK.sum(axis=1)).ravel())
    col = np.sqrt(np.asarray(absK.sum(axis=0)).ravel())
    row[row == 0] = 1.0
    col[col == 0] = 1.0
    return dr / row, dc / col


def _norm_upper_bound(K: sp.csr_matrix) -> float:
    if K.nnz == 0:
        return 1.0
    absK = abs(K)
    one = absK.sum(axis=0).max()
    inf = absK.sum(axis=1).max()
    frob = np.sqrt((K.data**2).sum())
    return float(min(np.sqrt(one * inf), frob))


def solve_pdhg(problem: LpProblem, opts: SolverOptions | None = None) -> LpSolution:
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    K0, q0 = _stack(problem)
    m_eq, m = problem.n_eq, K0.shape[0]
    n = problem.n_cols
    if K0.shape[1] != n or problem.lb.shape != (n,) or problem.ub.shape != (n,):
        raise DimensionMismatchError("constraint matrix and column vectors disagree")

    if opts.precondition:
        dr, dc = _ruiz_pock_chambolle(K0, opts.ruiz_iters)
    else:
        dr, dc = np.ones(m), np.ones(n)
    K = (sp.diags(dr) @ K0 @ sp.diags(dc)).tocsr()
    KT = K.T.tocsr()
    c = problem.c * dc
    q = q0 * dr
    lb = problem.lb / dc
    ub = problem.ub / dc
    ineq = slice(m_eq, m)
    q_norm = np.linalg.norm(q0)
    c_norm = np.linalg.norm(problem.c)

    eta = opts.step_safety / _norm_upper_bound(K)
    cn, qn = np.linalg.norm(c), np.linalg.norm(q)
    omega = cn / qn if cn > 1e-10 and qn > 1e-10 else 1.0

    def evaluate(x, y, Kx, KTy):
        r = Kx - q
        r[ineq] = np.maximum(r[ineq], 0.0)
        dual, rd = _lagrangian_dual(c, q, y, KTy, lb, ub)
        primal = float(c @ x)
        return primal, dual, r, rd

    def kkt(x, y, Kx, KTy, w):
        primal, dual, r, rd = evaluate(x, y, Kx, KTy)
        return np.sqrt(w**2 * (r @ r) + (rd @ rd) / w**2 + (primal - dual) ** 2)

    def original_metrics(x, y, Kx, KTy):
        primal, dual, r, rd = evaluate(x, y, Kx, KTy)
        pres = np.linalg.norm(r / dr) / (1.0 + q_norm)
        dres = np.linalg.norm(rd / dc) / (1.0 + c_norm)
        gap = primal - dual
        rel = abs(gap) / (1.0 + abs(primal) + abs(dual))
        return primal, dual, pres, dres, gap, rel

    def done(metrics):
        _, _, pres, dres, gap, rel = metrics
        gap_ok = rel <= opts.gap_tol if opts.gap_mode == "rel" else abs(gap) <= opts.gap_tol
        return gap_ok and pres <= opts.residual_tol and dres <= opts.residual_tol

    x = np.clip(np.zeros(n), lb, ub)
    y = np.zeros(m)
    Kx = K @ x
    KTy = KT @ y
    x_avg, y_avg = x.copy(), y.copy()
    n_avg = 0
    x_last, y_last = x.copy(), y.copy()
    kkt_last = kkt(x, y, Kx, KTy, omega)
    kkt_prev_cand = np.inf
    since_restart = 0
    restarts = 0
    history: list[dict] = []
    best = (x, y, Kx, KTy)
    best_metrics = original_metrics(*best)
    converged = done(best_metrics)
    it = 0

    while not converged and it < opts.max_iters:
        tau, sigma = eta / omega, eta * omega
        x_new = np.clip(x - tau * (c + KTy), lb, ub)
        Kx_new = K @ x_new
        y_new = y + sigma * (2.0 * Kx_new - Kx - q)
        y_new[ineq] = np.maximum(y_new[ineq], 0.0)
        KTy = KT @ y_new
        x, y, Kx = x_new, y_new, Kx_new
        it += 1
        since_restart += 1
        n_avg += 1
        x_avg += (x - x_avg) / n_avg
        y_avg += (y - y_avg) / n_avg

        if it % opts.check_every and it < opts.max_iters:
            continue

        Kx_avg = K @ x_avg
        KTy_avg = KT @ y_avg
        cur = (x, y, Kx, KTy)
        avg = (x_avg, y_avg, Kx_avg, KTy_avg)
        m_cur = original_metrics(*cur)
        m_avg = original_metrics(*avg)
        for cand, met in ((cur, m_cur), (avg, m_avg)):
            if done(met):
                best, best_metrics, converged = cand, met, True
                break
        if converged:
            break
        k_cur = kkt(*cur, omega)
        k_avg = kkt(*avg, omega)
        cand, k_cand = (avg, k_avg) if k_avg < k_cur else (cur, k_cur)
        score = max(m_cur[2], m_cur[3], m_cur[5])
        if score < max(best_metrics[2], best_metrics[3], best_metrics[5]):
            best, best_metrics = cur, m_cur
        history.append({"iter": it, "kkt": float(k_cand), "omega": omega})

        restart = (
            k_cand <= opts.restart_sufficient * kkt_last
            or (k_cand <= opts.restart_necessary * kkt_last and k_cand > kkt_prev_cand)
            or since_restart >= opts.restart_artificial * it
        )
        kkt_prev_cand = k_cand
        if not restart:
            continue
        restarts += 1
        cx, cy, cKx, cKTy = cand
        dx = np.linalg.norm(cx - x_last)
        dy = np.linalg.norm(cy - y_last)
        if dx > 1e-10 and dy > 1e-10:
            s = opts.primal_weight_smoothing
            omega = float(np.exp(s * np.log(dy / dx) + (1 - s) * np.log(omega)))
        x, y, Kx, KTy = cx.copy(), cy.copy(), cKx.copy(), cKTy.copy()
        x_last, y_last = x.copy(), y.copy()
        x_avg, y_avg = x.copy(), y.copy()
        n_avg = 0
        since_restart = 0
        kkt_last = kkt(x, y, Kx, KTy, omega)
        kkt_prev_cand = np.inf

    bx, by, _, _ = best
    _, _, pres, dres, _, _ = best_metrics
    x_out = np.clip(bx * dc, problem.lb, problem.ub)
    y_out = by * dr
    y_out[ineq] = np.maximum(y_out[ineq], 0.0)
    primal, dual, gap = _certified(problem, x_out, y_out)
    rel = abs(gap) / (1.0 + abs(primal) + abs(dual))
    converged = bool(converged and done((primal, dual, pres, dres, gap, rel)))
    wall = time.perf_counter() - t0
    logger.debug("pdhg: %s after %d iters (%d restarts), obj=%.10g gap=%.3g",
                 "converged" if converged else "stopped", it, restarts, primal, gap)
    return LpSolution(
        x=x_out,
        y_eq=y_out[:m_eq],
        y_ub=y_out[m_eq:],
        objective=primal,
        dual_value=dual,
        primal_residual=pres,
        dual_residual=dres,
        gap=gap,
        rel_gap=rel,
        iterations=it,
        wall_time=wall,
        converged=converged,
        gap_mode=opts.gap_mode,
        restarts=restarts,
        n_free=problem.n_free,
        n_priced=problem.n_priced,
        history=history,
    )
