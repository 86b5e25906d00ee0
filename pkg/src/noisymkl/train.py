"""Training variants, budget parameters, model selection, and prediction.

Three variants share the saddle-point machinery:

* ``stpmkl``: the noise-budgeted worst-case formulation. The dual box is
  absorbed to [0, 1] and the budget rho is a tuned fraction of n.
* ``sipmkl``: the plain hinge baseline. With rho = n the budget is slack
  and the dual polytope is exactly [0, 1]^n.
* ``mipmkl``: the best-case counterpart. Alternates between a closed-form
  reweighting of examples (an exact LP step) and a weighted-hinge solve
  with per-example dual caps.

The faithful (non-absorbed) dual box [0, 1 + tau] with the analytic
budget is available through ``faithful_problem`` for checking the
formulas directly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .kernels import KERNEL_MODES, KernelBank, KernelSpec, cross_gram
from .saddle import (DualState, PrimalState, SaddleProblem, SolverError,
                     SolveTrace, amp_solve, regularizer, residuals)

VARIANTS = ("stpmkl", "sipmkl", "mipmkl")

_MIPMKL_MAX_ROUNDS = 20
_MIPMKL_STOP_DECREASE = 1e-4

MODEL_FORMAT_VERSION = 1


def confidence_radius(epsilon_chance: float) -> float:
    """Budget inflation sqrt(0.5 * ln(1/eps)) for confidence level 1 - eps."""
    if not 0.0 < epsilon_chance <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon_chance}")
    return math.sqrt(0.5 * math.log(1.0 / epsilon_chance))


def dual_budget(n: int, q: float, tau: float, cap: float | None = None) -> float:
    """Total dual budget (1 - q + tau + tau/sqrt(n)) * n, clamped to n * cap.

    ``cap`` defaults to the faithful per-coordinate bound 1 + tau.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= q < 0.5:
        raise ValueError(f"q must lie in [0, 0.5), got {q}")
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    if cap is None:
        cap = 1.0 + tau
    return min((1.0 - q + tau + tau / math.sqrt(n)) * n, n * cap)


def faithful_problem(bank: KernelBank, y: np.ndarray, lam: float,
                     q: float, tau: float) -> SaddleProblem:
    """Saddle problem with the non-absorbed dual box [0, 1 + tau]."""
    return SaddleProblem(bank.grams, y, lam, cap=1.0 + tau,
                         rho=dual_budget(bank.n, q, tau))


def absorbed_problem(bank: KernelBank, y: np.ndarray, lam: float,
                     rho_fraction: float) -> SaddleProblem:
    """Saddle problem with cap 1 and budget rho = rho_fraction * n."""
    if not 0.0 < rho_fraction <= 1.0:
        raise ValueError(f"rho fraction must lie in (0, 1], got {rho_fraction}")
    return SaddleProblem(bank.grams, y, lam, cap=1.0, rho=rho_fraction * bank.n)


@dataclass(frozen=True)
class TrainConfig:
    """Variant choice, assumed noise level, tuning grids, and solver knobs."""

    variant: str = "stpmkl"
    q: float = 0.0
    epsilon_chance: float = 0.05
    lambda_grid: tuple[float, ...] = (1e-3, 1e-2, 1e-1, 1.0, 10.0)
    rho_fraction_grid: tuple[float, ...] = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5)
    t_max: int = 1000
    gap_tol: float = 1e-2
    seed: int = 0
    kernel_mode: str = "sigma"
    checkpoint_every: int = 10

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not 0.0 <= self.q < 0.5:
            raise ValueError(f"q must lie in [0, 0.5), got {self.q}")
        if not self.lambda_grid or not self.rho_fraction_grid:
            raise ValueError("tuning grids must be nonempty")
        if any(lam <= 0 for lam in self.lambda_grid):
            raise ValueError("lambda grid entries must be positive")
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if self.gap_tol <= 0:
            raise ValueError(f"gap_tol must be positive, got {self.gap_tol}")
        if self.kernel_mode not in KERNEL_MODES:
            raise ValueError(f"unknown kernel mode {self.kernel_mode!r}")

    def rho_fractions_for_variant(self) -> tuple[float, ...]:
        """Grid actually swept: only stpmkl tunes the budget fraction."""
        return self.rho_fraction_grid if self.variant == "stpmkl" else (1.0,)


@dataclass
class Model:
    """Trained classifier: kernel specs, training rows, and coefficients."""

    specs: list[KernelSpec]
    kernel_mode: str
    train_features: np.ndarray
    coef: np.ndarray
    lam: float
    rho: float
    variant: str
    status: str = ""
    iterations: int = 0
    final_gap: float = math.inf
    training_accuracy: float = math.nan
    scale_min: np.ndarray | None = None
    scale_span: np.ndarray | None = None
    name: str = ""

    def apply_scaling(self, X: np.ndarray) -> np.ndarray:
        """Map raw features through the scaling captured at training time."""
        if self.scale_min is None:
            return np.asarray(X, dtype=np.float64)
        X = np.asarray(X, dtype=np.float64)
        span = self.scale_span
        return np.where(span > 0, (X - self.scale_min) / np.where(span > 0, span, 1.0), 0.0)


def predict(model: Model, X_query: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scores f(x) = sum_j f_j(x) and sign labels (0 maps to +1).

    ``X_query`` must already be in the model's feature space; use
    ``model.apply_scaling`` first for raw file features.
    """
    X_query = np.asarray(X_query, dtype=np.float64)
    if X_query.ndim != 2 or X_query.shape[1] != model.train_features.shape[1]:
        raise ValueError(f"query features {X_query.shape} incompatible with "
                         f"training d={model.train_features.shape[1]}")
    scores = np.zeros(X_query.shape[0])
    for spec, crow in zip(model.specs, model.coef):
        scores += crow @ cross_gram(spec, model.train_features, X_query,
                                    mode=model.kernel_mode)
    labels = np.where(scores >= 0.0, 1.0, -1.0)
    return scores, labels


def _score_stack(specs: list[KernelSpec], mode: str, X_train: np.ndarray,
                 X_query: np.ndarray) -> np.ndarray:
    return np.stack([cross_gram(spec, X_train, X_query, mode=mode)
                     for spec in specs])


def best_case_weights(losses: np.ndarray, budget: float) -> np.ndarray:
    """Exact minimizer of sum_i w_i (l_i - 1) over [0,1]^n with sum(w) <= budget.

    Weight 1 goes to the smallest losses first (most negative objective
    coefficients), fractionally at the budget boundary; losses above 1
    get weight 0. Losses exactly 1 are indifferent and are included while
    budget remains, which keeps the alternating scheme away from the
    all-zero degenerate start.
    """
    losses = np.asarray(losses, dtype=np.float64)
    if budget < 0:
        raise ValueError(f"budget must be nonnegative, got {budget}")
    w = np.zeros(losses.size)
    order = np.argsort(losses, kind="stable")
    order = order[losses[order] <= 1.0]
    if order.size:
        ranks = np.arange(order.size, dtype=np.float64)
        w[order] = np.minimum(1.0, np.maximum(budget - ranks, 0.0))
    return w


def robust_hinge_objective(P: PrimalState, weights: np.ndarray,
                           prob: SaddleProblem) -> float:
    """Best-case objective (1/n) sum_i (w_i l_i + 1 - w_i) + regularizer."""
    hinge = np.maximum(residuals(P, prob), 0.0)
    n = prob.n
    return float(weights @ hinge + (1.0 - weights).sum()) / n + regularizer(P, prob)


def _train_minimax(bank: KernelBank, y: np.ndarray, lam: float,
                   rho: float, config: TrainConfig,
                   ) -> tuple[PrimalState, DualState, SolveTrace, float]:
    prob = SaddleProblem(bank.grams, y, lam, cap=1.0, rho=rho)
    P, D, trace = amp_solve(prob, t_max=config.t_max, gap_tol=config.gap_tol,
                            checkpoint_every=config.checkpoint_every)
    return P, D, trace, rho


def _train_best_case(bank: KernelBank, y: np.ndarray, lam: float,
                     config: TrainConfig,
                     ) -> tuple[PrimalState, DualState, SolveTrace, float, list[float]]:
    n = bank.n
    tau = confidence_radius(config.epsilon_chance)
    budget = min((1.0 - config.q) * n + tau * math.sqrt(n), float(n))
    base = SaddleProblem(bank.grams, y, lam, cap=1.0, rho=float(n))

    best_P = PrimalState.zeros(bank.m, n)
    best_D = DualState(np.zeros(n))
    best_trace = SolveTrace()
    best_obj = math.inf
    history: list[float] = []
    cur_P = best_P
    for _ in range(_MIPMKL_MAX_ROUNDS):
        losses = np.maximum(residuals(cur_P, base), 0.0)
        weights = best_case_weights(losses, budget)
        wsum = float(weights.sum())
        if wsum <= 0.0:
            break
        prob = SaddleProblem(bank.grams, y, lam, cap=weights, rho=wsum)
        P, D, trace = amp_solve(prob, t_max=config.t_max, gap_tol=config.gap_tol,
                                checkpoint_every=config.checkpoint_every)
        obj = robust_hinge_objective(P, weights, base)
        # the weighted solve is inexact, so the objective may rise by at
        # most its certified gap; anything beyond that is a genuine bug
        slack = max(trace.final_gap, 1e-8)
        if obj > best_obj + slack:
            raise SolverError(
                "best-case objective increased across an outer round "
                f"({best_obj} -> {obj}); weighted solve is inconsistent")
        decrease = best_obj - obj
        if obj <= best_obj:
            best_P, best_D, best_trace, best_obj = P, D, trace, obj
            cur_P = P
            history.append(obj)
        if decrease < _MIPMKL_STOP_DECREASE:
            break
    return best_P, best_D, best_trace, budget, history


def train(data: Dataset, bank: KernelBank, config: TrainConfig,
          lambda_: float | None = None, rho_fraction: float | None = None,
          ) -> tuple[Model, SolveTrace]:
    """Train one model on the given rows with a single (lambda, rho) choice.

    When not passed explicitly, lambda and the budget fraction default to
    the first entries of the config grids (``model_select`` sweeps them).
    """
    if bank.n != data.n:
        raise ValueError(f"bank built over {bank.n} rows, data has {data.n}")
    lam = config.lambda_grid[0] if lambda_ is None else lambda_
    rf = config.rho_fractions_for_variant()[0] if rho_fraction is None else rho_fraction
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if not 0.0 < rf <= 1.0:
        raise ValueError(f"rho fraction must lie in (0, 1], got {rf}")

    y = data.labels
    if config.variant == "stpmkl":
        P, D, trace, rho = _train_minimax(bank, y, lam, rf * bank.n, config)
    elif config.variant == "sipmkl":
        P, D, trace, rho = _train_minimax(bank, y, lam, float(bank.n), config)
    else:
        P, D, trace, rho, _ = _train_best_case(bank, y, lam, config)

    scores = P.kv.sum(axis=0)
    labels = np.where(scores >= 0.0, 1.0, -1.0)
    model = Model(
        specs=list(bank.specs),
        kernel_mode=bank.mode,
        train_features=data.features,
        coef=P.coef,
        lam=lam,
        rho=rho,
        variant=config.variant,
        status=trace.status,
        iterations=trace.iterations,
        final_gap=trace.final_gap,
        training_accuracy=float(np.mean(labels == y)),
        name=data.name,
    )
    return model, trace


def model_select(data: Dataset, bank: KernelBank, config: TrainConfig,
                 val_features: np.ndarray, val_labels: np.ndarray,
                 ) -> tuple[float, float, Model]:
    """Grid search over (lambda, rho fraction) by validation 0/1 accuracy.

    Ties break toward larger lambda, then larger rho fraction. Returns the
    winning pair and its trained model (trained on ``data`` only, not
    refit on the validation rows).
    """
    val_features = np.asarray(val_features, dtype=np.float64)
    val_labels = np.asarray(val_labels, dtype=np.float64)
    if val_features.shape[0] < 1:
        raise ValueError("validation set is empty")
    stack = _score_stack(bank.specs, bank.mode, data.features, val_features)
    best_key = None
    best_model = None
    for lam in config.lambda_grid:
        for rf in config.rho_fractions_for_variant():
            model, _ = train(data, bank, config, lambda_=lam, rho_fraction=rf)
            scores = np.einsum("jn,jnq->q", model.coef, stack)
            acc = float(np.mean(np.where(scores >= 0.0, 1.0, -1.0)
                                == val_labels))
            key = (acc, lam, rf)
            if best_key is None or key > best_key:
                best_key, best_model = key, model
    return best_key[1], best_key[2], best_model


def save_model(model: Model, path: str) -> None:
    """Serialize to a self-describing JSON file (exact float round-trip)."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "noisymkl-model",
        "variant": model.variant,
        "kernel_mode": model.kernel_mode,
        "lam": model.lam,
        "rho": model.rho,
        "status": model.status,
        "iterations": model.iterations,
        "final_gap": model.final_gap,
        "training_accuracy": model.training_accuracy,
        "name": model.name,
        "widths": [spec.width for spec in model.specs],
        "scopes": [spec.scope for spec in model.specs],
        "train_features": model.train_features.tolist(),
        "coef": model.coef.tolist(),
        "scale_min": None if model.scale_min is None else model.scale_min.tolist(),
        "scale_span": None if model.scale_span is None else model.scale_span.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path: str) -> Model:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("kind") != "noisymkl-model":
        raise ValueError(f"{path}: not a model file")
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model format "
                         f"{payload.get('format_version')}")
    return Model(
        specs=[KernelSpec(w, s) for w, s in zip(payload["widths"], payload["scopes"])],
        kernel_mode=payload["kernel_mode"],
        train_features=np.asarray(payload["train_features"], dtype=np.float64),
        coef=np.asarray(payload["coef"], dtype=np.float64),
        lam=payload["lam"],
        rho=payload["rho"],
        variant=payload["variant"],
        status=payload["status"],
        iterations=payload["iterations"],
        final_gap=payload["final_gap"],
        training_accuracy=payload["training_accuracy"],
        scale_min=None if payload["scale_min"] is None
        else np.asarray(payload["scale_min"], dtype=np.float64),
        scale_span=None if payload["scale_span"] is None
        else np.asarray(payload["scale_span"], dtype=np.float64),
        name=payload["name"],
    )
