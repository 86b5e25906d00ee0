"""Independent oracles used by the test suite.

Everything here deliberately avoids the library's own solution paths:
projections are checked by enumerating KKT support patterns, the
composite step by grid search with local refinement, full solves by a
generic convex solver (cvxpy), and the reweighting step by an LP solver.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _support_patterns(n: int) -> np.ndarray:
    # 0 = at lower bound, 1 = interior, 2 = at cap
    return np.array(list(itertools.product((0, 1, 2), repeat=n)), dtype=np.int8)


def project_box_budget_bruteforce(v: np.ndarray, cap: float, rho: float,
                                  tol: float = 1e-9) -> np.ndarray:
    """Exact projection onto {0 <= a <= cap, sum(a) <= rho} for small n.

    Enumerates every support pattern of the polytope's faces; for each,
    the face-restricted minimizer is affine in v, so the true projection
    appears among the candidates and the feasible minimum distance wins.
    """
    v = np.asarray(v, dtype=np.float64)
    n = v.size
    candidates = []

    box = np.clip(v, 0.0, cap)
    if box.sum() <= rho + tol:
        candidates.append(box)

    patterns = _support_patterns(n)
    interior = patterns == 1
    upper = patterns == 2
    k_int = interior.sum(axis=1)
    sum_int = interior @ v
    sum_up = cap * upper.sum(axis=1)

    with np.errstate(divide="ignore", invalid="ignore"):
        eta = (sum_int + sum_up - rho) / k_int
        cand = np.where(upper, cap, 0.0) + interior * (v[None, :] - eta[:, None])

    has_interior = k_int > 0
    in_box = np.all(~interior | ((cand >= -tol) & (cand <= cap + tol)), axis=1)
    exact_corner = (k_int == 0) & (np.abs(sum_up - rho) <= tol)
    ok = (has_interior & in_box) | exact_corner
    for row in cand[ok]:
        candidates.append(np.clip(row, 0.0, cap))

    dists = [np.sum((c - v) ** 2) for c in candidates]
    return candidates[int(np.argmin(dists))]


def magnitude_objective(t: np.ndarray, a: np.ndarray, gl: float) -> np.ndarray:
    """0.5 sum (t - a)^2 + (gl/2) (sum t)^2, broadcast over rows of t."""
    t = np.atleast_2d(t)
    return 0.5 * np.sum((t - a) ** 2, axis=1) + 0.5 * gl * np.sum(t, axis=1) ** 2


def grid_min_magnitudes(a: np.ndarray, gl: float, pts: int = 21,
                        rounds: int = 7) -> tuple[np.ndarray, float]:
    """Brute-force grid minimum of the composite magnitude problem.

    Searches [0, a_j] per coordinate (the minimizer satisfies t <= a),
    shrinking the grid around the incumbent each round.
    """
    a = np.asarray(a, dtype=np.float64)
    m = a.size
    lo = np.zeros(m)
    hi = a.copy()
    best_t, best_val = np.zeros(m), float(magnitude_objective(np.zeros(m), a, gl)[0])
    for _ in range(rounds):
        axes = [np.linspace(lo[j], hi[j], pts) for j in range(m)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
        vals = magnitude_objective(mesh, a, gl)
        idx = int(np.argmin(vals))
        if vals[idx] < best_val:
            best_val, best_t = float(vals[idx]), mesh[idx]
        width = (hi - lo) / (pts - 1)
        lo = np.clip(best_t - 2.0 * width, 0.0, a)
        hi = np.clip(best_t + 2.0 * width, 0.0, a)
    return best_t, best_val


def reference_mkl_solve(grams: np.ndarray, y: np.ndarray,
                        lam: float) -> float:
    """Optimal value of the plain hinge multiple-kernel objective via cvxpy."""
    import cvxpy as cp

    m, n, _ = grams.shape
    roots = []
    for K in grams:
        w, V = np.linalg.eigh(K)
        roots.append((V * np.sqrt(np.clip(w, 0.0, None))) @ V.T)
    C = cp.Variable((m, n))
    s = cp.Variable(nonneg=True)
    scores = sum(grams[j] @ C[j] for j in range(m))
    norms = cp.hstack([cp.norm(roots[j] @ C[j]) for j in range(m)])
    objective = cp.Minimize(0.5 * lam * cp.square(s)
                            + cp.sum(cp.pos(1.0 - cp.multiply(y, scores))) / n)
    problem = cp.Problem(objective, [s >= cp.sum(norms)])
    problem.solve()
    if problem.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"reference solve failed: {problem.status}")
    return float(problem.value)


def lp_best_case_weights(losses: np.ndarray, budget: float) -> tuple[np.ndarray, float]:
    """LP oracle for min sum w_i (l_i - 1) over [0,1]^n, sum w <= budget."""
    from scipy.optimize import linprog

    losses = np.asarray(losses, dtype=np.float64)
    n = losses.size
    res = linprog(c=losses - 1.0, A_ub=np.ones((1, n)), b_ub=[budget],
                  bounds=[(0.0, 1.0)] * n, method="highs")
    if not res.success:
        raise RuntimeError(f"LP oracle failed: {res.message}")
    return res.x, float(res.fun)


def knapsack_max_bruteforce(r: np.ndarray, cap: np.ndarray, rho: float) -> float:
    """LP oracle for max sum a_i r_i over the box/budget polytope."""
    from scipy.optimize import linprog

    r = np.asarray(r, dtype=np.float64)
    n = r.size
    cap = np.broadcast_to(np.asarray(cap, dtype=np.float64), (n,))
    res = linprog(c=-r, A_ub=np.ones((1, n)), b_ub=[rho],
                  bounds=list(zip(np.zeros(n), cap)), method="highs")
    if not res.success:
        raise RuntimeError(f"LP oracle failed: {res.message}")
    return -float(res.fun)
