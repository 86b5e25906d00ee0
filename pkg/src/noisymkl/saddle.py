"""Convex-concave solver for the noise-budgeted multiple kernel objective.

The problem solved here is

    min_f max_a  (lam/2) * (sum_j ||f_j||)^2 + (1/n) * sum_i a_i * (1 - y_i f(x_i))

where each f_j lives in the RKHS of kernel j, f = sum_j f_j, and the dual
vector a ranges over the box-plus-budget polytope
{a : 0 <= a_i <= cap_i, sum_i a_i <= rho}. Primal functions are stored in
representer form: row j of the coefficient matrix C encodes
f_j = sum_i C[j, i] * k_j(x_i, .), so ||f_j||^2 = C[j]' K_j C[j] and
f(x_i) = sum_j (K_j C[j])_i.

Two solvers are provided: an accelerated mirror-prox loop (``amp_solve``)
whose primal step is a composite gradient mapping, and a plain projected
subgradient descent/ascent baseline (``vi_solve``). Both report progress
through the duality gap of their running-average iterates.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

GAP_CONVERGED = "gap_converged"
ITERATION_CAP = "iteration_cap"

_BISECT_TOL = 1e-12
_BISECT_MAX_ITER = 200


class SolverError(RuntimeError):
    """A solve produced non-finite values or otherwise diverged."""


@dataclass(frozen=True)
class SaddleProblem:
    """Problem data: stacked Grams, labels, and the dual polytope.

    ``cap`` is the per-coordinate dual bound (scalar, or one value per
    example for weighted-hinge subproblems); ``rho`` is the total dual
    budget.
    """

    grams: np.ndarray  # (m, n, n)
    y: np.ndarray      # (n,) in {-1, +1}
    lam: float
    cap: float | np.ndarray
    rho: float

    def __post_init__(self):
        G = np.asarray(self.grams, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if G.ndim != 3 or G.shape[1] != G.shape[2]:
            raise ValueError(f"grams must be (m, n, n), got {G.shape}")
        n = G.shape[1]
        if y.shape != (n,):
            raise ValueError(f"labels shape {y.shape} does not match n={n}")
        if self.lam <= 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        cap = np.broadcast_to(np.asarray(self.cap, dtype=np.float64), (n,))
        if cap.min() < 0 or cap.max() <= 0:
            raise ValueError("dual caps must be nonnegative with at least one positive")
        if not 0 < self.rho <= float(cap.sum()) + 1e-9:
            raise ValueError(f"rho={self.rho} outside (0, sum(cap)={cap.sum()}]")
        object.__setattr__(self, "grams", G)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.grams.shape[1]

    @property
    def m(self) -> int:
        return self.grams.shape[0]

    @property
    def cap_vector(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.cap, dtype=np.float64), (self.n,))


@dataclass
class PrimalState:
    """Coefficient matrix C (one row per kernel) with cached K_j C[j] products."""

    coef: np.ndarray  # (m, n)
    kv: np.ndarray    # (m, n), row j is grams[j] @ coef[j]

    @classmethod
    def zeros(cls, m: int, n: int) -> "PrimalState":
        return cls(np.zeros((m, n)), np.zeros((m, n)))

    @classmethod
    def from_coef(cls, coef: np.ndarray, prob: SaddleProblem) -> "PrimalState":
        coef = np.asarray(coef, dtype=np.float64)
        if coef.shape != (prob.m, prob.n):
            raise ValueError(f"coef shape {coef.shape}, expected {(prob.m, prob.n)}")
        kv = np.einsum("jkl,jl->jk", prob.grams, coef)
        return cls(coef, kv)

    def norms(self) -> np.ndarray:
        """Per-kernel RKHS norms ||f_j|| from the cached products."""
        return np.sqrt(np.maximum(np.einsum("jn,jn->j", self.coef, self.kv), 0.0))

    def cache_error(self, prob: SaddleProblem) -> float:
        """Relative deviation of the cached products from recomputation."""
        fresh = np.einsum("jkl,jl->jk", prob.grams, self.coef)
        denom = max(float(np.abs(fresh).max()), 1e-30)
        return float(np.abs(self.kv - fresh).max()) / denom


@dataclass
class DualState:
    """Dual vector constrained to the box-plus-budget polytope."""

    alpha: np.ndarray

    def check_feasible(self, prob: SaddleProblem, tol: float = 1e-8) -> None:
        a = self.alpha
        cap = prob.cap_vector
        if a.shape != (prob.n,):
            raise ValueError(f"alpha shape {a.shape}, expected ({prob.n},)")
        if a.min() < -tol or (a - cap).max() > tol or a.sum() > prob.rho + tol:
            raise ValueError("dual state violates the box/budget constraints")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    objective: float
    gap: float
    seconds: float


@dataclass
class SolveTrace:
    """Per-checkpoint progress records and the final stopping status."""

    records: list[TraceRecord] = field(default_factory=list)
    status: str = ITERATION_CAP

    @property
    def iterations(self) -> int:
        return self.records[-1].iteration if self.records else 0

    @property
    def final_gap(self) -> float:
        return self.records[-1].gap if self.records else math.inf

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "objective", "gap", "seconds"])
            for rec in self.records:
                writer.writerow([rec.iteration, repr(rec.objective),
                                 repr(rec.gap), repr(rec.seconds)])


def residuals(P: PrimalState, prob: SaddleProblem) -> np.ndarray:
    """Margin residuals r_i = 1 - y_i f(x_i), from the cached products."""
    if P.kv.shape != (prob.m, prob.n):
        raise ValueError(f"state shape {P.kv.shape}, expected {(prob.m, prob.n)}")
    return 1.0 - prob.y * P.kv.sum(axis=0)


def regularizer(P: PrimalState, prob: SaddleProblem) -> float:
    """(lam/2) * (sum_j ||f_j||)^2."""
    total = float(P.norms().sum())
    return 0.5 * prob.lam * total * total  # plain product: overflow -> inf, not OverflowError


def saddle_objective(P: PrimalState, D: DualState, prob: SaddleProblem) -> float:
    """Value of the minimax objective at (f, a)."""
    r = residuals(P, prob)
    return regularizer(P, prob) + float(D.alpha @ r) / prob.n


def _eta_bisect(v: np.ndarray, cap: np.ndarray, rho: float) -> float:
    # invariant: g(lo) > rho >= g(hi); returning hi keeps the projection
    # feasible even if the iteration cap is hit on pathological scales
    lo, hi = 0.0, float(v.max())
    for _ in range(_BISECT_MAX_ITER):
        if hi - lo <= _BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        if np.minimum(np.maximum(v - mid, 0.0), cap).sum() > rho:
            lo = mid
        else:
            hi = mid
    return hi


def _eta_exact(v: np.ndarray, cap: np.ndarray, rho: float) -> float:
    # g(eta) = sum_i min(cap_i, (v_i - eta)+) = h_v(eta) - h_w(eta) with
    # w = v - cap; both h terms are evaluated from sorted values and suffix
    # sums, so the crossing g(eta) = rho is located in O(n log n).
    w = v - cap
    sv, sw = np.sort(v), np.sort(w)
    sufv = np.concatenate([np.cumsum(sv[::-1])[::-1], [0.0]])
    sufw = np.concatenate([np.cumsum(sw[::-1])[::-1], [0.0]])
    events = np.unique(np.concatenate([[0.0], v[v > 0], w[w > 0]]))
    kv = np.searchsorted(sv, events, side="right")
    kw = np.searchsorted(sw, events, side="right")
    hv = sufv[kv] - (sv.size - kv) * events
    hw = sufw[kw] - (sw.size - kw) * events
    gvals = hv - hw
    i = int(np.nonzero(gvals >= rho)[0][-1])
    slope = (sv.size - kv[i]) - (sw.size - kw[i])
    if slope == 0:
        return float(events[i])
    return float(events[i] + (gvals[i] - rho) / slope)


def project_dual(alpha_hat: np.ndarray, cap, rho: float,
                 method: str = "bisect") -> DualState:
    """Euclidean projection onto {a : 0 <= a <= cap, sum(a) <= rho}.

    The projection is the clipped shift clip(alpha_hat - eta, 0, cap). If
    the budget is slack after box clipping, eta = 0; otherwise eta solves
    sum_i clip(alpha_hat_i - eta, 0, cap_i) = rho, located either by
    bisection (default) or by the exact sort-based method.
    """
    v = np.asarray(alpha_hat, dtype=np.float64)
    capv = np.broadcast_to(np.asarray(cap, dtype=np.float64), v.shape)
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    clipped = np.minimum(np.maximum(v, 0.0), capv)
    if clipped.sum() <= rho:
        return DualState(clipped)
    if method == "bisect":
        eta = _eta_bisect(v, capv, rho)
    elif method == "sort":
        eta = _eta_exact(v, capv, rho)
    else:
        raise ValueError(f"unknown projection method {method!r}")
    return DualState(np.minimum(np.maximum(v - eta, 0.0), capv))


def _shrink_total(a: np.ndarray, step_times_lambda: float) -> float:
    # Unique root of h(T) = sum_j (a_j - gl*T)+ - T on [0, sum(a)];
    # h is strictly decreasing with h(0) >= 0.
    hi = float(a.sum())
    if hi == 0.0:
        return 0.0
    lo = 0.0
    for _ in range(_BISECT_MAX_ITER):
        if hi - lo <= _BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        if np.maximum(a - step_times_lambda * mid, 0.0).sum() - mid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def shrink_magnitudes(a: np.ndarray, step_times_lambda: float) -> np.ndarray:
    """Optimal norms t_j of the composite step, given input norms a_j.

    Solves min_t>=0  (1/2) sum_j (t_j - a_j)^2 + (gl/2) (sum_j t_j)^2.
    The stationarity system is t_j = (a_j - gl * sum_k t_k)+, a group
    soft-threshold whose total is pinned down by a scalar root-find.
    """
    if step_times_lambda <= 0:
        raise ValueError(f"step*lambda must be positive, got {step_times_lambda}")
    a = np.asarray(a, dtype=np.float64)
    total = _shrink_total(a, step_times_lambda)
    return np.maximum(a - step_times_lambda * total, 0.0)


def composite_map(coef_hat: np.ndarray, step_times_lambda: float,
                  grams: np.ndarray) -> PrimalState:
    """Composite gradient mapping in the product RKHS geometry.

    Solves min_f (1/2)||f - f_hat||^2 + (gl/2)(sum_j ||f_j||)^2 where gl
    is the step size times the regularization weight. Each output row is
    a rescaled input row: row j shrinks by (1 - gl*T / a_j)+ with
    a_j = ||f_hat_j|| and T = sum of the output norms; rows with a_j = 0
    stay zero.
    """
    coef_hat = np.asarray(coef_hat, dtype=np.float64)
    kv_hat = np.einsum("jkl,jl->jk", grams, coef_hat)
    a = np.sqrt(np.maximum(np.einsum("jn,jn->j", coef_hat, kv_hat), 0.0))
    t = shrink_magnitudes(a, step_times_lambda)
    safe = np.where(a > 0.0, a, 1.0)
    s = np.where(a > 0.0, t / safe, 0.0)
    return PrimalState(s[:, None] * coef_hat, s[:, None] * kv_hat)


def _knapsack_max(r: np.ndarray, cap: np.ndarray, rho: float) -> float:
    # max of sum_i a_i r_i over the box/budget polytope: fill the largest
    # positive residuals first, fractionally at the budget boundary.
    pos = r > 0.0
    if not pos.any():
        return 0.0
    rv, cv = r[pos], cap[pos]
    order = np.argsort(rv)[::-1]
    rv, cv = rv[order], cv[order]
    cum = np.cumsum(cv)
    take = np.minimum(cv, np.maximum(rho - (cum - cv), 0.0))
    return float(take @ rv)


def duality_gap(P: PrimalState, D: DualState, prob: SaddleProblem) -> float:
    """Certified saddle suboptimality max_a F(f, a) - min_f F(f, a).

    The dual maximization is a fractional knapsack over the positive
    residuals; the primal minimization has the closed form
    (1/n) sum(a) - max_j ||g_j||^2 / (2 lam) with
    ||g_j||^2 = (1/n^2) (a*y)' K_j (a*y), since the sum-of-norms
    regularizer concentrates all mass on the best single kernel.
    """
    D.check_feasible(prob)
    n = prob.n
    r = residuals(P, prob)
    best = regularizer(P, prob) + _knapsack_max(r, prob.cap_vector, prob.rho) / n

    w = (D.alpha * prob.y) / n
    kw = (prob.grams.reshape(prob.m * n, n) @ w).reshape(prob.m, n)
    gsq = np.maximum(kw @ w, 0.0)
    worst = float(D.alpha.sum()) / n - float(gsq.max()) / (2.0 * prob.lam)
    return best - worst


def _check_finite(t: int, *arrays: np.ndarray) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise SolverError(
                f"non-finite values at iteration {t}; the step size is too "
                "large for this problem or the data is pathological")


def amp_solve(prob: SaddleProblem, t_max: int = 1000,
              gap_tol: float | None = 1e-2, gamma: float | None = None,
              checkpoint_every: int = 10,
              projection_method: str = "bisect",
              ) -> tuple[PrimalState, DualState, SolveTrace]:
    """Accelerated mirror-prox solve; returns uniform-average iterates.

    Per iteration, from the secondary dual variable b and primal f:

    1. a_t = project(b + (gamma/n) r(f))        extragradient dual step
    2. f_t = composite_map(f + (gamma/n)(a_t*y) broadcast, gamma*lam)
    3. b   = project(b + (gamma/n) r(f_t))      dual bookkeeping step

    The default step size is sqrt(n / (2m)). Every ``checkpoint_every``
    iterations (and at the final one) the duality gap of the running
    averages is recorded; the solve stops early once it falls to
    ``gap_tol`` (pass None to always run t_max iterations).
    """
    if t_max < 1:
        raise ValueError(f"t_max must be >= 1, got {t_max}")
    if checkpoint_every < 1:
        raise ValueError(f"checkpoint_every must be >= 1, got {checkpoint_every}")
    n, m = prob.n, prob.m
    if gamma is None:
        gamma = math.sqrt(n / (2.0 * m))
    gl = gamma * prob.lam
    gram_rows = prob.grams.reshape(m * n, n)
    cap, rho, y = prob.cap_vector, prob.rho, prob.y

    coef = np.zeros((m, n))
    kv = np.zeros((m, n))
    beta = np.zeros(n)
    coef_sum = np.zeros((m, n))
    kv_sum = np.zeros((m, n))
    alpha_sum = np.zeros(n)
    r_prev = np.ones(n)  # residuals of f = 0

    trace = SolveTrace()
    start = time.perf_counter()
    t_done = 0
    for t in range(1, t_max + 1):
        alpha = project_dual(beta + (gamma / n) * r_prev, cap, rho,
                             projection_method).alpha
        u = (gamma / n) * (alpha * y)
        coef_hat = coef + u
        kv_hat = kv + (gram_rows @ u).reshape(m, n)
        a = np.sqrt(np.maximum(np.einsum("jn,jn->j", coef_hat, kv_hat), 0.0))
        t_norms = shrink_magnitudes(a, gl)
        s = np.where(a > 0.0, t_norms / np.where(a > 0.0, a, 1.0), 0.0)
        coef = s[:, None] * coef_hat
        kv = s[:, None] * kv_hat
        r = 1.0 - y * kv.sum(axis=0)
        beta = project_dual(beta + (gamma / n) * r, cap, rho,
                            projection_method).alpha

        _check_finite(t, a, r, alpha)
        coef_sum += coef
        kv_sum += kv
        alpha_sum += alpha
        r_prev = r
        t_done = t

        if t % checkpoint_every == 0 or t == t_max:
            P_avg = PrimalState(coef_sum / t, kv_sum / t)
            D_avg = DualState(alpha_sum / t)
            gap = duality_gap(P_avg, D_avg, prob)
            obj = saddle_objective(P_avg, D_avg, prob)
            trace.records.append(TraceRecord(t, obj, gap,
                                             time.perf_counter() - start))
            if gap_tol is not None and gap <= gap_tol:
                trace.status = GAP_CONVERGED
                break

    P_avg = PrimalState(coef_sum / t_done, kv_sum / t_done)
    D_avg = DualState(alpha_sum / t_done)
    return P_avg, D_avg, trace


def vi_solve(prob: SaddleProblem, t_max: int = 1000, gamma0: float = 1.0,
             gap_tol: float | None = 1e-2, checkpoint_every: int = 10,
             projection_method: str = "bisect",
             ) -> tuple[PrimalState, DualState, SolveTrace]:
    """Projected subgradient descent/ascent baseline with step gamma0/sqrt(T).

    Both blocks move simultaneously from the current iterate: the dual
    ascends along the residuals and projects back onto the polytope; the
    primal descends along a subgradient of the full objective (taking 0 as
    the regularizer's subgradient on zero rows) with no composite mapping.
    Averaged iterates and their gap trace are returned, as in
    ``amp_solve``.
    """
    if t_max < 1:
        raise ValueError(f"t_max must be >= 1, got {t_max}")
    if gamma0 <= 0:
        raise ValueError(f"gamma0 must be positive, got {gamma0}")
    n, m = prob.n, prob.m
    gamma = gamma0 / math.sqrt(t_max)
    gram_rows = prob.grams.reshape(m * n, n)
    cap, rho, y, lam = prob.cap_vector, prob.rho, prob.y, prob.lam

    coef = np.zeros((m, n))
    kv = np.zeros((m, n))
    alpha = np.zeros(n)
    coef_sum = np.zeros((m, n))
    kv_sum = np.zeros((m, n))
    alpha_sum = np.zeros(n)

    trace = SolveTrace()
    start = time.perf_counter()
    t_done = 0
    for t in range(1, t_max + 1):
        r = 1.0 - y * kv.sum(axis=0)
        a = np.sqrt(np.maximum(np.einsum("jn,jn->j", coef, kv), 0.0))
        total = float(a.sum())
        # subgradient of the regularizer at row j is lam * total * f_j/||f_j||
        shrink = np.where(a > 0.0, 1.0 - gamma * lam * total / np.where(a > 0.0, a, 1.0), 1.0)
        u = (gamma / n) * (alpha * y)
        coef = shrink[:, None] * coef + u
        kv = shrink[:, None] * kv + (gram_rows @ u).reshape(m, n)
        alpha = project_dual(alpha + (gamma / n) * r, cap, rho,
                             projection_method).alpha

        _check_finite(t, a, kv, alpha)
        coef_sum += coef
        kv_sum += kv
        alpha_sum += alpha
        t_done = t

        if t % checkpoint_every == 0 or t == t_max:
            P_avg = PrimalState(coef_sum / t, kv_sum / t)
            D_avg = DualState(alpha_sum / t)
            gap = duality_gap(P_avg, D_avg, prob)
            obj = saddle_objective(P_avg, D_avg, prob)
            trace.records.append(TraceRecord(t, obj, gap,
                                             time.perf_counter() - start))
            if gap_tol is not None and gap <= gap_tol:
                trace.status = GAP_CONVERGED
                break

    P_avg = PrimalState(coef_sum / t_done, kv_sum / t_done)
    D_avg = DualState(alpha_sum / t_done)
    return P_avg, D_avg, trace
