"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``. The heavyweight
experiment criteria (6 and 7) drive the real CLI pipeline on bundled
synthetic datasets; everything else checks the solver mathematics
against independent oracles at the stated tolerances.
"""

import csv
from contextlib import contextmanager

import numpy as np
import pytest

import noisymkl as nk
from noisymkl.cli import fit_loglog_slope, main
from noisymkl.saddle import PrimalState, regularizer
from noisymkl.synthetic import heart_like, two_gaussians
from noisymkl.train import _train_best_case

from conftest import random_problem
from oracles import (grid_min_magnitudes, lp_best_case_weights,
                     magnitude_objective, project_box_budget_bruteforce,
                     reference_mkl_solve)


@contextmanager
def criterion(num, label):
    try:
        yield
    except Exception:
        print(f"\nACCEPTANCE {num} [{label}]: FAIL")
        raise
    print(f"\nACCEPTANCE {num} [{label}]: PASS")


def test_criterion_01_projection_correctness():
    with criterion(1, "dual projection vs brute-force oracle"):
        rng = np.random.default_rng(101)
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(1, 7))
            v = rng.standard_normal(n) * 3.0
            cap = float(rng.random() * 2.0 + 0.05)
            rho = float(rng.random() * n * cap * 0.95 + 1e-3)
            bisect = nk.project_dual(v, cap, rho, method="bisect").alpha
            sort = nk.project_dual(v, cap, rho, method="sort").alpha
            assert np.abs(bisect - sort).max() <= 1e-10
            oracle = project_box_budget_bruteforce(v, cap, rho)
            worst = max(worst, float(np.linalg.norm(bisect - oracle)))
        assert worst <= 1e-6, f"worst distance {worst}"


def test_criterion_02_composite_map_correctness():
    with criterion(2, "composite map vs grid minimum and stationarity"):
        rng = np.random.default_rng(202)
        for _ in range(1000):
            m = int(rng.integers(1, 4))
            a = rng.random(m) * 3.0
            gl = float(rng.random() * 2.0 + 0.01)
            t = nk.shrink_magnitudes(a, gl)
            total = float(t.sum())
            assert np.abs(t - np.maximum(a - gl * total, 0.0)).max() <= 1e-8
            ours = float(magnitude_objective(t, a, gl)[0])
            _, grid_val = grid_min_magnitudes(a, gl)
            assert abs(ours - grid_val) <= 1e-6, (a, gl, ours, grid_val)


def test_criterion_03_worked_examples():
    with criterion(3, "worked numeric examples"):
        shifted = nk.project_dual(np.array([3.0, 1.5, 0.5]), 2.0, 3.0).alpha
        np.testing.assert_allclose(shifted, [2.0, 1.0, 0.0], atol=1e-9)
        np.testing.assert_allclose(nk.shrink_magnitudes(np.array([2.0, 1.0]), 1.0),
                                   [1.0, 0.0], atol=1e-9)
        assert nk.confidence_radius(0.01) == pytest.approx(1.517427, abs=1e-5)
        assert nk.dual_budget(100, 0.2, 1.0) == pytest.approx(190.0, abs=1e-9)
        assert len(nk.build_bank(13)) == 140


def test_criterion_04_noiseless_reduction():
    with criterion(4, "budgeted variant reduces to plain hinge at q=0"):
        rng = np.random.default_rng(404)
        # bitwise trace agreement between the two variants
        X = rng.random((18, 3))
        y = np.where(rng.random(18) < 0.5, 1.0, -1.0)
        data = nk.Dataset(X, y)
        bank = nk.KernelBank.from_data(X, nk.build_bank(3)[:5])
        shared = dict(q=0.0, epsilon_chance=1.0, lambda_grid=(0.2,),
                      rho_fraction_grid=(1.0,), t_max=200, gap_tol=1e-9)
        _, tr_st = nk.train(data, bank, nk.TrainConfig(variant="stpmkl", **shared))
        _, tr_si = nk.train(data, bank, nk.TrainConfig(variant="sipmkl", **shared))
        assert [r.objective for r in tr_st.records] == \
               [r.objective for r in tr_si.records]

        # final objective vs an independent convex solver
        for seed in (1, 2, 3):
            prob, bank, _ = random_problem(np.random.default_rng(seed),
                                           n=16, m=4, lam=0.4, rho=16.0)
            P, D, trace = nk.amp_solve(prob, t_max=30000, gap_tol=1e-5)
            primal = (regularizer(P, prob)
                      + np.maximum(nk.residuals(P, prob), 0.0).sum() / prob.n)
            reference = reference_mkl_solve(prob.grams, prob.y, prob.lam)
            assert primal == pytest.approx(reference, rel=1e-3)


def test_criterion_05_gap_certification():
    with criterion(5, "duality gap nonnegativity and stopping certificates"):
        rng = np.random.default_rng(505)
        pairs = 0
        for _ in range(25):
            prob, _, _ = random_problem(rng, n=int(rng.integers(3, 10)),
                                        m=int(rng.integers(1, 4)))
            for _ in range(400):
                coef = rng.standard_normal((prob.m, prob.n)) * (2.0 * rng.random())
                P = PrimalState.from_coef(coef, prob)
                D = nk.project_dual(rng.standard_normal(prob.n) * 3.0,
                                    prob.cap_vector, prob.rho)
                assert nk.duality_gap(P, D, prob) >= -1e-8
                pairs += 1
        assert pairs == 10_000

        for seed in (0, 1, 2):
            prob, _, _ = random_problem(np.random.default_rng(seed), n=12, m=3)
            _, _, trace = nk.amp_solve(prob, t_max=5000, gap_tol=1e-2)
            assert trace.status == nk.GAP_CONVERGED
            assert trace.final_gap <= 1e-2


def _bench(data, lam=0.01, rho=100.0, t_max=1000):
    bank = nk.KernelBank.from_data(data.features, nk.build_bank(data.d))
    prob = nk.SaddleProblem(bank.grams, data.labels, lam, cap=1.0,
                            rho=min(rho, float(bank.n)))
    _, _, amp_trace = nk.amp_solve(prob, t_max=t_max, gap_tol=None)
    vi_traces = []
    for gamma0 in (0.01, 0.1, 1.0, 10.0, 100.0):
        try:
            _, _, tr = nk.vi_solve(prob, t_max=t_max, gamma0=gamma0,
                                   gap_tol=None)
        except nk.SolverError:
            continue  # diverged step size loses the tuning
        vi_traces.append(tr)
    best_vi = min(vi_traces, key=lambda tr: tr.final_gap)
    return amp_trace, best_vi


def test_criterion_06_convergence_rate():
    with criterion(6, "mirror-prox beats tuned subgradient baseline"):
        for data in (nk.minmax_scale(heart_like()),
                     nk.minmax_scale(two_gaussians(200, 4, seed=11))):
            amp_trace, vi_trace = _bench(data)
            assert amp_trace.final_gap < vi_trace.final_gap, data.name
            amp_slope = fit_loglog_slope(
                [r.iteration for r in amp_trace.records],
                [r.gap for r in amp_trace.records])
            vi_slope = fit_loglog_slope(
                [r.iteration for r in vi_trace.records],
                [r.gap for r in vi_trace.records])
            print(f"\n  {data.name}: amp gap {amp_trace.final_gap:.3e} "
                  f"slope {amp_slope:.3f}; vi gap {vi_trace.final_gap:.3e} "
                  f"slope {vi_slope:.3f}")
            assert amp_slope <= -0.6, data.name
            assert amp_slope <= vi_slope - 0.25, data.name


def _sweep_means(tmp_path, data, tag):
    out = tmp_path / f"sweep_{tag}"
    path = tmp_path / f"{tag}.csv"
    nk.save_csv(data, str(path))
    code = main(["sweep", "--data", str(path), "--variant", "stpmkl,sipmkl",
                 "--q-grid", "0,0.3,0.4", "--trials", "5",
                 "--lambda-grid", "0.01,0.1,1.0", "--t-max", "1000",
                 "--seed", "0", "--jobs", "2", "--no-figures",
                 "--out", str(out)])
    assert code == 0
    means = {}
    with open(out / "aggregate.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            means[(row["variant"], float(row["q"]))] = float(row["mean_accuracy"])
    return means


@pytest.mark.slow
def test_criterion_07_noise_robustness_trend(tmp_path):
    with criterion(7, "noise-robustness trend at q=0.3"):
        for data, tag in ((two_gaussians(400, 4, seed=0), "blobs"),
                          (heart_like(), "heartlike")):
            means = _sweep_means(tmp_path, data, tag)
            margin = means[("stpmkl", 0.3)] - means[("sipmkl", 0.3)]
            drop_st = means[("stpmkl", 0.0)] - means[("stpmkl", 0.4)]
            drop_si = means[("sipmkl", 0.0)] - means[("sipmkl", 0.4)]
            print(f"\n  {tag}: margin at q=0.3 {margin:+.4f}; "
                  f"drops stpmkl {drop_st:.4f} vs sipmkl {drop_si:.4f}")
            assert margin >= 0.02, (tag, margin)
            assert drop_st < drop_si, (tag, drop_st, drop_si)


def test_criterion_08_gradient_checks():
    with criterion(8, "gradients vs central finite differences"):
        rng = np.random.default_rng(808)
        for _ in range(100):
            prob, _, _ = random_problem(rng, n=int(rng.integers(3, 9)),
                                        m=int(rng.integers(1, 4)))
            coef = rng.standard_normal((prob.m, prob.n)) * 0.4
            P = PrimalState.from_coef(coef, prob)
            alpha = rng.random(prob.n) * 0.5
            h = 1e-6

            grad_alpha = nk.residuals(P, prob) / prob.n
            i = int(rng.integers(prob.n))
            e = np.zeros(prob.n)
            e[i] = h
            fd = (nk.saddle_objective(P, nk.DualState(alpha + e), prob)
                  - nk.saddle_objective(P, nk.DualState(alpha - e), prob)) / (2 * h)
            assert fd == pytest.approx(grad_alpha[i], rel=1e-6, abs=1e-9)

            grad_coef = -np.einsum("jkl,l->jk", prob.grams,
                                   alpha * prob.y) / prob.n
            direction = rng.standard_normal((prob.m, prob.n))

            def linear(c):
                return float(alpha @ nk.residuals(
                    PrimalState.from_coef(c, prob), prob)) / prob.n

            fd = (linear(coef + h * direction)
                  - linear(coef - h * direction)) / (2 * h)
            assert fd == pytest.approx(float((grad_coef * direction).sum()),
                                       rel=1e-6, abs=1e-9)


def test_criterion_09_best_case_reweighting():
    with criterion(9, "reweighting step exactness and outer monotonicity"):
        rng = np.random.default_rng(909)
        for _ in range(500):
            n = int(rng.integers(2, 9))
            losses = rng.random(n) * 2.5
            budget = float(rng.random() * n)
            w = nk.best_case_weights(losses, budget)
            _, lp_val = lp_best_case_weights(losses, budget)
            assert w.min() >= 0.0 and w.max() <= 1.0 + 1e-12
            assert w.sum() <= budget + 1e-9
            assert abs(float(w @ (losses - 1.0)) - lp_val) <= 1e-8

        for seed in range(20):
            gen = np.random.default_rng(seed)
            X = gen.random((12, 2))
            y = np.where(gen.random(12) < 0.5, 1.0, -1.0)
            bank = nk.KernelBank.from_data(X, nk.build_bank(2)[:4])
            cfg = nk.TrainConfig(variant="mipmkl", q=0.25, lambda_grid=(0.2,),
                                 t_max=150)
            _, _, _, _, history = _train_best_case(bank, y, 0.2, cfg)
            assert all(b <= a + 1e-10 for a, b in zip(history, history[1:]))


def test_criterion_10_cli_determinism(tmp_path):
    with criterion(10, "repeated CLI runs produce identical artifacts"):
        data_path = tmp_path / "blobs.csv"
        nk.save_csv(two_gaussians(50, 2, seed=6), str(data_path))

        runs = {
            "sweep": ["sweep", "--data", str(data_path), "--variant",
                      "stpmkl,mipmkl", "--q-grid", "0,0.2", "--trials", "2",
                      "--lambda-grid", "0.1", "--rho-grid", "1.0,0.6",
                      "--t-max", "50", "--seed", "7"],
            "bench": ["bench-convergence", "--data", str(data_path),
                      "--t-max", "30", "--gamma0-grid", "0.1,1.0"],
            "train": ["train", "--data", str(data_path), "--lambda-grid",
                      "0.1,1.0", "--rho-grid", "1.0", "--t-max", "40",
                      "--seed", "2"],
        }
        deterministic = {
            "sweep": ("results.csv", "aggregate.csv", "manifest.txt",
                      "sweep_accuracy_blobs.png"),
            "bench": ("amp_trace.csv", "vi_trace.csv", "vi_tuning.csv",
                      "manifest.txt", "convergence_blobs.png"),
            "train": ("model.json", "manifest.txt"),
        }
        for name, args in runs.items():
            out1 = tmp_path / f"{name}_1"
            out2 = tmp_path / f"{name}_2"
            assert main(args + ["--out", str(out1)]) == 0
            assert main(args + ["--out", str(out2)]) == 0
            for artifact in deterministic[name]:
                assert (out1 / artifact).read_bytes() == \
                       (out2 / artifact).read_bytes(), (name, artifact)

        model = str(tmp_path / "train_1" / "model.json")
        p1, p2 = tmp_path / "pred_1", tmp_path / "pred_2"
        for p in (p1, p2):
            assert main(["predict", "--model", model, "--data", str(data_path),
                         "--out", str(p)]) == 0
        for artifact in ("predictions.csv", "manifest.txt"):
            assert (p1 / artifact).read_bytes() == (p2 / artifact).read_bytes()
