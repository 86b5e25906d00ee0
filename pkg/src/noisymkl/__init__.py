"""Multiple kernel learning from noisily labeled data.

A solver library (saddle-point formulation with an accelerated mirror-prox
loop), baseline trainers, and a command-line experiment harness.
"""

from .data import (Dataset, DataError, NoiseSpec, SplitResult, flip_labels,
                   load_dataset, minmax_scale, save_csv, split)
from .kernels import (KernelBank, KernelSpec, WIDTH_GRID, build_bank,
                      cross_gram, gram, rkhs_norm_sq)
from .saddle import (DualState, GAP_CONVERGED, ITERATION_CAP, PrimalState,
                     SaddleProblem, SolverError, SolveTrace, amp_solve,
                     composite_map, duality_gap, project_dual, residuals,
                     saddle_objective, shrink_magnitudes, vi_solve)
from .train import (Model, TrainConfig, VARIANTS, absorbed_problem,
                    best_case_weights, confidence_radius, dual_budget,
                    faithful_problem, load_model, model_select, predict,
                    robust_hinge_objective, save_model, train)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "DataError", "NoiseSpec", "SplitResult", "flip_labels",
    "load_dataset", "minmax_scale", "save_csv", "split",
    "KernelBank", "KernelSpec", "WIDTH_GRID", "build_bank", "cross_gram",
    "gram", "rkhs_norm_sq",
    "DualState", "GAP_CONVERGED", "ITERATION_CAP", "PrimalState",
    "SaddleProblem", "SolverError", "SolveTrace", "amp_solve",
    "composite_map", "duality_gap", "project_dual", "residuals",
    "saddle_objective", "shrink_magnitudes", "vi_solve",
    "Model", "TrainConfig", "VARIANTS", "absorbed_problem",
    "best_case_weights", "confidence_radius", "dual_budget",
    "faithful_problem", "load_model", "model_select", "predict",
    "robust_hinge_objective", "save_model", "train",
    "__version__",
]
