"""Experiment command line: noise sweeps, convergence benchmarks, train/predict.

Subcommands
-----------
sweep              noise-robustness protocol over (dataset, variant, q, trial)
bench-convergence  mirror-prox versus subgradient baseline gap traces
train              fit one model and serialize it
predict            score a query file with a saved model

Every run writes a ``manifest.txt`` with the resolved configuration.
Result and trace CSVs are bitwise-deterministic for a given config and
seed; wall-clock timings go to separate ``timings`` files that are
excluded from that guarantee. Figures are rendered next to the CSVs
unless ``--no-figures`` is given.

Options may also come from a ``--config`` file of ``key = value`` lines
(keys are the long flag names, dashes or underscores); explicit flags
win. The default output directory is ``$NOISYMKL_OUT`` or
``./noisymkl_out``.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, NoiseSpec, flip_labels, load_dataset, minmax_scale, split
from .kernels import KERNEL_MODES, KernelBank, build_bank
from .saddle import SaddleProblem, SolverError, amp_solve, vi_solve
from .train import (TrainConfig, VARIANTS, load_model, model_select,
                    predict, save_model, train)

ENV_OUT_DIR = "NOISYMKL_OUT"
DEFAULT_OUT_DIR = "noisymkl_out"

BENCH_LAMBDA = 0.01
BENCH_RHO = 100.0
GAMMA0_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)

RESULT_COLUMNS = ("dataset", "variant", "q", "trial", "accuracy", "lambda",
                  "rho", "iterations", "final_gap", "error")
TIMING_COLUMNS = ("dataset", "variant", "q", "trial", "gram_seconds",
                  "solve_seconds")
AGGREGATE_COLUMNS = ("dataset", "variant", "q", "trials", "mean_accuracy",
                     "std_accuracy")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, columns: tuple[str, ...], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in columns])


def _write_manifest(out_dir: Path, command: str, resolved: dict) -> None:
    lines = [f"command = {command}"]
    for key in sorted(resolved):
        value = resolved[key]
        if isinstance(value, (list, tuple)):
            value = ",".join(_fmt(v) for v in value)
        else:
            value = _fmt(value)
        lines.append(f"{key} = {value}")
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# configuration plumbing

def _parse_floats(text: str) -> tuple[float, ...]:
    values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    if not values:
        raise ValueError(f"empty list {text!r}")
    return values


def _parse_strs(text: str) -> tuple[str, ...]:
    values = tuple(tok.strip() for tok in text.split(",") if tok.strip())
    if not values:
        raise ValueError(f"empty list {text!r}")
    return values


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` config text; '#' starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve(args: argparse.Namespace, key: str, default, convert):
    """Precedence: explicit CLI flag, then config file, then default."""
    cli_value = getattr(args, key, None)
    if cli_value is not None:
        return convert(cli_value) if isinstance(cli_value, str) else cli_value
    file_values = getattr(args, "_file_values", {})
    if key in file_values:
        return convert(file_values[key])
    return default


def _default_out() -> str:
    return os.environ.get(ENV_OUT_DIR, DEFAULT_OUT_DIR)


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved sweep settings."""

    datasets: tuple[str, ...]
    fmt: str = "csv"
    dims: int | None = None
    variants: tuple[str, ...] = VARIANTS
    q_grid: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4)
    trials: int = 5
    seed: int = 0
    lambda_grid: tuple[float, ...] = (1e-3, 1e-2, 1e-1, 1.0, 10.0)
    rho_grid: tuple[float, ...] = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5)
    t_max: int = 1000
    gap_tol: float = 1e-2
    epsilon_chance: float = 0.05
    kernel_mode: str = "sigma"
    out_dir: str = field(default_factory=_default_out)
    jobs: int = 1
    figures: bool = True

    def __post_init__(self):
        if not self.datasets:
            raise ValueError("at least one dataset is required")
        for variant in self.variants:
            if variant not in VARIANTS:
                raise ValueError(f"unknown variant {variant!r}")
        if any(not 0.0 <= q < 0.5 for q in self.q_grid):
            raise ValueError("q grid values must lie in [0, 0.5)")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")
        if self.kernel_mode not in KERNEL_MODES:
            raise ValueError(f"unknown kernel mode {self.kernel_mode!r}")


# ---------------------------------------------------------------------------
# sweep

def _cell_seeds(base_seed: int, ds_idx: int, var_idx: int, q_idx: int,
                trial: int) -> tuple[int, int]:
    ss = np.random.SeedSequence(base_seed,
                                spawn_key=(ds_idx, var_idx, q_idx, trial))
    state = ss.generate_state(2, dtype=np.uint64)
    return int(state[0]), int(state[1])


def _run_sweep_cell(task: dict) -> tuple[dict, dict]:
    """One (dataset, variant, q, trial) cell; failures become an error row."""
    key = {"dataset": task["name"], "variant": task["variant"],
           "q": task["q"], "trial": task["trial"]}
    result = dict(key)
    timing = dict(key)
    try:
        X, y_clean = task["features"], task["labels"]
        data = Dataset(X, y_clean, name=task["name"])
        split_seed, flip_seed = _cell_seeds(task["seed"], task["ds_idx"],
                                            task["var_idx"], task["q_idx"],
                                            task["trial"])
        parts = split(data, 0.8, 0.1, seed=split_seed)
        noisy, _ = flip_labels(data, NoiseSpec(task["q"], flip_seed))
        tr_idx, va_idx, te_idx = (parts.train_indices,
                                  parts.validation_indices,
                                  parts.test_indices)
        train_ds = Dataset(X[tr_idx], noisy.labels[tr_idx], name=task["name"])

        t0 = time.perf_counter()
        bank = KernelBank.from_data(train_ds.features,
                                    build_bank(train_ds.d),
                                    mode=task["kernel_mode"])
        timing["gram_seconds"] = time.perf_counter() - t0

        tcfg = TrainConfig(
            variant=task["variant"], q=task["q"],
            epsilon_chance=task["epsilon_chance"],
            lambda_grid=task["lambda_grid"],
            rho_fraction_grid=task["rho_grid"],
            t_max=task["t_max"], gap_tol=task["gap_tol"],
            seed=split_seed, kernel_mode=task["kernel_mode"])
        t0 = time.perf_counter()
        lam, _, model = model_select(train_ds, bank, tcfg,
                                     X[va_idx], noisy.labels[va_idx])
        timing["solve_seconds"] = time.perf_counter() - t0

        _, labels = predict(model, X[te_idx])
        result.update(
            accuracy=float(np.mean(labels == y_clean[te_idx])),
            **{"lambda": lam},
            rho=model.rho,
            iterations=model.iterations,
            final_gap=model.final_gap,
            error="",
        )
    except Exception as exc:  # per-cell isolation: record and continue
        result["error"] = f"{type(exc).__name__}: {exc}"
    return result, timing


def cmd_sweep(config: ExperimentConfig) -> int:
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    loaded = []
    for path in config.datasets:
        data = minmax_scale(load_dataset(path, fmt=config.fmt, dims=config.dims))
        loaded.append(data)

    tasks = []
    for ds_idx, data in enumerate(loaded):
        for var_idx, variant in enumerate(config.variants):
            for q_idx, q in enumerate(config.q_grid):
                for trial in range(config.trials):
                    tasks.append({
                        "features": data.features, "labels": data.labels,
                        "name": data.name, "ds_idx": ds_idx,
                        "variant": variant, "var_idx": var_idx,
                        "q": q, "q_idx": q_idx, "trial": trial,
                        "seed": config.seed,
                        "lambda_grid": config.lambda_grid,
                        "rho_grid": config.rho_grid,
                        "t_max": config.t_max, "gap_tol": config.gap_tol,
                        "epsilon_chance": config.epsilon_chance,
                        "kernel_mode": config.kernel_mode,
                    })

    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_run_sweep_cell, tasks))
    else:
        outcomes = [_run_sweep_cell(task) for task in tasks]

    order = ("dataset", "variant", "q", "trial")
    results = sorted((r for r, _ in outcomes), key=lambda r: [r[k] for k in order])
    timings = sorted((t for _, t in outcomes), key=lambda t: [t[k] for k in order])

    aggregates = []
    seen = []
    for row in results:
        cell = (row["dataset"], row["variant"], row["q"])
        if cell in seen:
            continue
        seen.append(cell)
        accs = [r["accuracy"] for r in results
                if (r["dataset"], r["variant"], r["q"]) == cell and not r["error"]]
        if not accs:
            continue
        aggregates.append({
            "dataset": cell[0], "variant": cell[1], "q": cell[2],
            "trials": len(accs),
            "mean_accuracy": float(np.mean(accs)),
            "std_accuracy": float(np.std(accs, ddof=1)) if len(accs) > 1 else 0.0,
        })

    _write_csv(out_dir / "results.csv", RESULT_COLUMNS, results)
    _write_csv(out_dir / "timings.csv", TIMING_COLUMNS, timings)
    _write_csv(out_dir / "aggregate.csv", AGGREGATE_COLUMNS, aggregates)

    if config.figures:
        from . import plots
        for data in loaded:
            rows = [a for a in aggregates if a["dataset"] == data.name]
            if rows:
                plots.render_accuracy_figure(
                    rows, data.name, str(out_dir / f"sweep_accuracy_{data.name}.png"))

    failures = sum(1 for row in results if row["error"])
    print(f"sweep: {len(results)} cells, {failures} failed -> {out_dir}")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# convergence benchmark

def fit_loglog_slope(iterations, gaps, lo: int = 100, hi: int = 1000) -> float:
    """Least-squares slope of log(gap) vs log(iteration) over [lo, hi]."""
    pts = [(it, gap) for it, gap in zip(iterations, gaps)
           if lo <= it <= hi and gap > 0]
    if len(pts) < 2:
        raise ValueError("need at least two positive-gap checkpoints in range")
    x = np.log([p[0] for p in pts])
    z = np.log([p[1] for p in pts])
    return float(np.polyfit(x, z, 1)[0])


def _trace_rows(trace) -> tuple[list[int], list[float]]:
    iters = [rec.iteration for rec in trace.records]
    gaps = [rec.gap for rec in trace.records]
    return iters, gaps


def cmd_bench_convergence(data_path: str, fmt: str, dims: int | None,
                          t_max: int, gamma0_grid: tuple[float, ...],
                          lam: float, rho: float, kernel_mode: str,
                          out_dir: Path, figures: bool) -> int:
    data = minmax_scale(load_dataset(data_path, fmt=fmt, dims=dims))
    bank = KernelBank.from_data(data.features, build_bank(data.d),
                                mode=kernel_mode)
    rho_eff = min(rho, float(bank.n))  # cap 1 forces rho <= n
    prob = SaddleProblem(bank.grams, data.labels, lam, cap=1.0, rho=rho_eff)

    t0 = time.perf_counter()
    _, _, amp_trace = amp_solve(prob, t_max=t_max, gap_tol=None)
    amp_seconds = time.perf_counter() - t0

    vi_runs = []
    vi_seconds = []
    for gamma0 in gamma0_grid:
        t0 = time.perf_counter()
        try:
            _, _, trace = vi_solve(prob, t_max=t_max, gamma0=gamma0, gap_tol=None)
        except SolverError:
            trace = None  # diverged at this step size; tuning skips it
        vi_seconds.append(time.perf_counter() - t0)
        vi_runs.append((gamma0, trace))
    finished = [(g, tr) for g, tr in vi_runs if tr is not None]
    if not finished:
        print("error: every vi step size diverged", file=sys.stderr)
        return 2
    best_gamma0, best_trace = min(finished, key=lambda item: item[1].final_gap)

    def write_trace(path: Path, trace) -> None:
        iters, gaps = _trace_rows(trace)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "gap"])
            for it, gap in zip(iters, gaps):
                writer.writerow([it, repr(gap)])

    write_trace(out_dir / "amp_trace.csv", amp_trace)
    write_trace(out_dir / "vi_trace.csv", best_trace)
    with open(out_dir / "vi_tuning.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma0", "final_gap"])
        for gamma0, trace in vi_runs:
            gap = trace.final_gap if trace is not None else math.inf
            writer.writerow([repr(gamma0), repr(gap)])
    with open(out_dir / "timings.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solver", "seconds"])
        writer.writerow(["amp", repr(amp_seconds)])
        for (gamma0, _), secs in zip(vi_runs, vi_seconds):
            writer.writerow([f"vi_gamma0_{gamma0}", repr(secs)])

    if figures:
        from . import plots
        plots.render_convergence_figure(
            {"amp": _trace_rows(amp_trace),
             f"vi (gamma0={best_gamma0})": _trace_rows(best_trace)},
            data.name, str(out_dir / f"convergence_{data.name}.png"))

    print(f"bench: amp final gap {amp_trace.final_gap:.3e}, "
          f"best vi (gamma0={best_gamma0}) {best_trace.final_gap:.3e} -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# train / predict

def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def cmd_train(data_path: str, fmt: str, dims: int | None, variant: str,
              q: float, epsilon_chance: float,
              lambda_grid: tuple[float, ...], rho_grid: tuple[float, ...],
              t_max: int, gap_tol: float, seed: int, kernel_mode: str,
              validation_frac: float, out_dir: Path) -> int:
    raw = load_dataset(data_path, fmt=fmt, dims=dims)
    scale_min = raw.features.min(axis=0)
    scale_span = raw.features.max(axis=0) - scale_min
    data = minmax_scale(raw)

    tcfg = TrainConfig(variant=variant, q=q, epsilon_chance=epsilon_chance,
                       lambda_grid=lambda_grid, rho_fraction_grid=rho_grid,
                       t_max=t_max, gap_tol=gap_tol, seed=seed,
                       kernel_mode=kernel_mode)
    n_cells = len(lambda_grid) * len(tcfg.rho_fractions_for_variant())
    if n_cells > 1:
        n_val = max(_round_half_up(data.n * validation_frac), 1)
        if data.n - n_val < 2:
            raise ValueError(f"dataset of size {data.n} is too small to carve "
                             "a validation split; pass single-point grids")
        perm = np.random.default_rng(seed).permutation(data.n)
        va_idx, tr_idx = np.sort(perm[:n_val]), np.sort(perm[n_val:])
        train_ds = data.subset(tr_idx)
        bank = KernelBank.from_data(train_ds.features, build_bank(data.d),
                                    mode=kernel_mode)
        _, _, model = model_select(train_ds, bank, tcfg,
                                   data.features[va_idx], data.labels[va_idx])
    else:
        bank = KernelBank.from_data(data.features, build_bank(data.d),
                                    mode=kernel_mode)
        model, _ = train(data, bank, tcfg)

    model.scale_min = scale_min
    model.scale_span = scale_span
    model.name = data.name
    save_model(model, str(out_dir / "model.json"))
    print(f"train: {variant} on {data.name} (lambda={model.lam}, "
          f"rho={model.rho}, {model.iterations} iters, "
          f"gap {model.final_gap:.3e}) -> {out_dir / 'model.json'}")
    return 0


def cmd_predict(model_path: str, data_path: str, fmt: str, dims: int | None,
                out_dir: Path) -> int:
    model = load_model(model_path)
    if dims is None and fmt == "svmlight":
        dims = model.train_features.shape[1]
    raw = load_dataset(data_path, fmt=fmt, dims=dims)
    X = model.apply_scaling(raw.features)
    scores, labels = predict(model, X)
    with open(out_dir / "predictions.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "score", "label"])
        for i, (score, label) in enumerate(zip(scores, labels)):
            writer.writerow([i, repr(float(score)), int(label)])
    print(f"predict: {len(scores)} rows -> {out_dir / 'predictions.csv'}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key = value config file; flags override")
    sub.add_argument("--data", action="append",
                     help="dataset path (repeatable or comma-separated)")
    sub.add_argument("--format", dest="format_", metavar="FMT",
                     help="csv or svmlight (default csv)")
    sub.add_argument("--dims", type=int,
                     help="feature count for svmlight files (default: max index)")
    sub.add_argument("--seed", type=int, help="base RNG seed (default 0)")
    sub.add_argument("--kernel-mode", dest="kernel_mode",
                     help="width convention: sigma (default) or gamma")
    sub.add_argument("--out", help=f"output directory (default ${ENV_OUT_DIR} "
                                   f"or ./{DEFAULT_OUT_DIR})")
    sub.add_argument("--no-figures", action="store_true", default=None,
                     help="skip rendering PNG figures")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisymkl",
        description="Multiple kernel learning from noisy labels: "
                    "experiment harness")
    commands = parser.add_subparsers(dest="command", required=True)

    sweep = commands.add_parser("sweep", help="noise-robustness sweep")
    _add_common(sweep)
    sweep.add_argument("--variant", action="append",
                       help="stpmkl, sipmkl, mipmkl (repeatable or "
                            "comma-separated; default all)")
    sweep.add_argument("--q-grid", dest="q_grid",
                       help="comma-separated noise levels (default 0,0.1,...,0.4)")
    sweep.add_argument("--trials", type=int, help="trials per cell (default 5)")
    sweep.add_argument("--lambda-grid", dest="lambda_grid",
                       help="comma-separated lambda values")
    sweep.add_argument("--rho-grid", dest="rho_grid",
                       help="comma-separated budget fractions of n")
    sweep.add_argument("--t-max", dest="t_max", type=int,
                       help="iteration cap (default 1000)")
    sweep.add_argument("--gap-tol", dest="gap_tol", type=float,
                       help="duality-gap stopping threshold (default 0.01)")
    sweep.add_argument("--epsilon", dest="epsilon_chance", type=float,
                       help="chance-constraint confidence (default 0.05)")
    sweep.add_argument("--jobs", type=int, help="parallel worker cap (default 1)")

    bench = commands.add_parser("bench-convergence",
                                help="gap-decay benchmark: amp vs vi")
    _add_common(bench)
    bench.add_argument("--t-max", dest="t_max", type=int,
                       help="iterations (default 1000)")
    bench.add_argument("--gamma0-grid", dest="gamma0_grid",
                       help="vi step-size tuning grid "
                            "(default 0.01,0.1,1,10,100)")
    bench.add_argument("--bench-lambda", dest="bench_lambda", type=float,
                       help="regularization weight (default 0.01)")
    bench.add_argument("--bench-rho", dest="bench_rho", type=float,
                       help="dual budget (default 100)")

    train_p = commands.add_parser("train", help="fit and serialize one model")
    _add_common(train_p)
    train_p.add_argument("--variant", action="append",
                         help="stpmkl, sipmkl, or mipmkl (default stpmkl)")
    train_p.add_argument("--q", type=float, help="assumed noise level (default 0)")
    train_p.add_argument("--epsilon", dest="epsilon_chance", type=float)
    train_p.add_argument("--lambda-grid", dest="lambda_grid")
    train_p.add_argument("--rho-grid", dest="rho_grid")
    train_p.add_argument("--t-max", dest="t_max", type=int)
    train_p.add_argument("--gap-tol", dest="gap_tol", type=float)
    train_p.add_argument("--validation-frac", dest="validation_frac", type=float,
                         help="validation share for grid selection (default 0.1)")

    predict_p = commands.add_parser("predict", help="score a query file")
    _add_common(predict_p)
    predict_p.add_argument("--model", help="model file from the train command")

    return parser


def _gather_data(args) -> tuple[str, ...]:
    raw = getattr(args, "data", None)
    if raw:
        paths = []
        for item in raw:
            paths.extend(_parse_strs(item))
        return tuple(paths)
    file_values = getattr(args, "_file_values", {})
    if "data" in file_values:
        return _parse_strs(file_values["data"])
    raise SystemExit("error: --data is required")


def _gather_variants(args, default: tuple[str, ...]) -> tuple[str, ...]:
    raw = getattr(args, "variant", None)
    if raw:
        variants = []
        for item in raw:
            variants.extend(v.lower() for v in _parse_strs(item))
        return tuple(variants)
    file_values = getattr(args, "_file_values", {})
    if "variant" in file_values:
        return tuple(v.lower() for v in _parse_strs(file_values["variant"]))
    return default


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args._file_values = read_config_file(args.config) if args.config else {}

    figures = not _resolve(args, "no_figures", False, _parse_bool)
    if "figures" in args._file_values:  # config files say figures = true/false
        if getattr(args, "no_figures", None) is None:
            figures = _parse_bool(args._file_values["figures"])
    out_dir = Path(_resolve(args, "out", _default_out(), str))
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = _resolve(args, "format_", "csv", str)
    dims = _resolve(args, "dims", None, int)
    seed = _resolve(args, "seed", 0, int)
    kernel_mode = _resolve(args, "kernel_mode", "sigma", str)

    try:
        if args.command == "sweep":
            config = ExperimentConfig(
                datasets=_gather_data(args),
                fmt=fmt,
                dims=dims,
                variants=_gather_variants(args, VARIANTS),
                q_grid=_resolve(args, "q_grid", (0.0, 0.1, 0.2, 0.3, 0.4),
                                _parse_floats),
                trials=_resolve(args, "trials", 5, int),
                seed=seed,
                lambda_grid=_resolve(args, "lambda_grid",
                                     (1e-3, 1e-2, 1e-1, 1.0, 10.0), _parse_floats),
                rho_grid=_resolve(args, "rho_grid",
                                  (1.0, 0.9, 0.8, 0.7, 0.6, 0.5), _parse_floats),
                t_max=_resolve(args, "t_max", 1000, int),
                gap_tol=_resolve(args, "gap_tol", 1e-2, float),
                epsilon_chance=_resolve(args, "epsilon_chance", 0.05, float),
                kernel_mode=kernel_mode,
                out_dir=str(out_dir),
                jobs=_resolve(args, "jobs", 1, int),
                figures=figures,
            )
            _write_manifest(out_dir, "sweep", {
                "data": config.datasets, "format": config.fmt,
                "dims": config.dims, "variant": config.variants,
                "q_grid": config.q_grid, "trials": config.trials,
                "seed": config.seed, "lambda_grid": config.lambda_grid,
                "rho_grid": config.rho_grid, "t_max": config.t_max,
                "gap_tol": config.gap_tol,
                "epsilon": config.epsilon_chance,
                "kernel_mode": config.kernel_mode, "jobs": config.jobs,
                "figures": config.figures,
            })
            return cmd_sweep(config)

        if args.command == "bench-convergence":
            data_paths = _gather_data(args)
            t_max = _resolve(args, "t_max", 1000, int)
            gamma0_grid = _resolve(args, "gamma0_grid", GAMMA0_GRID, _parse_floats)
            lam = _resolve(args, "bench_lambda", BENCH_LAMBDA, float)
            rho = _resolve(args, "bench_rho", BENCH_RHO, float)
            _write_manifest(out_dir, "bench-convergence", {
                "data": data_paths, "format": fmt, "dims": dims,
                "t_max": t_max, "gamma0_grid": gamma0_grid,
                "bench_lambda": lam, "bench_rho": rho, "seed": seed,
                "kernel_mode": kernel_mode, "figures": figures,
            })
            return cmd_bench_convergence(data_paths[0], fmt, dims, t_max,
                                         gamma0_grid, lam, rho, kernel_mode,
                                         out_dir, figures)

        if args.command == "train":
            data_paths = _gather_data(args)
            variant = _gather_variants(args, ("stpmkl",))[0]
            q = _resolve(args, "q", 0.0, float)
            epsilon = _resolve(args, "epsilon_chance", 0.05, float)
            lambda_grid = _resolve(args, "lambda_grid",
                                   (1e-3, 1e-2, 1e-1, 1.0, 10.0), _parse_floats)
            rho_grid = _resolve(args, "rho_grid",
                                (1.0, 0.9, 0.8, 0.7, 0.6, 0.5), _parse_floats)
            t_max = _resolve(args, "t_max", 1000, int)
            gap_tol = _resolve(args, "gap_tol", 1e-2, float)
            validation_frac = _resolve(args, "validation_frac", 0.1, float)
            _write_manifest(out_dir, "train", {
                "data": data_paths, "format": fmt, "dims": dims,
                "variant": variant, "q": q, "epsilon": epsilon,
                "lambda_grid": lambda_grid, "rho_grid": rho_grid,
                "t_max": t_max, "gap_tol": gap_tol, "seed": seed,
                "kernel_mode": kernel_mode,
                "validation_frac": validation_frac,
            })
            return cmd_train(data_paths[0], fmt, dims, variant, q, epsilon,
                             lambda_grid, rho_grid, t_max, gap_tol, seed,
                             kernel_mode, validation_frac, out_dir)

        if args.command == "predict":
            model_path = _resolve(args, "model", None, str)
            if not model_path:
                raise SystemExit("error: --model is required")
            data_paths = _gather_data(args)
            _write_manifest(out_dir, "predict", {
                "model": model_path, "data": data_paths, "format": fmt,
                "dims": dims,
            })
            return cmd_predict(model_path, data_paths[0], fmt, dims, out_dir)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
