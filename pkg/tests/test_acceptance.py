"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that pytest prints in its terminal
summary; ``python3 tests/test_acceptance.py`` runs just this file.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from dtaoi.coud import AgeFunction, Metric, approximate, coud_mean_closed, model_cost_numeric, pcoud_mean_closed
from dtaoi.framework import total_variation
from dtaoi.gf import coefficients
from dtaoi.models import (
    BUFFERLESS,
    FCFS,
    LCFS,
    QueueParams,
    aoi_cdf,
    aoi_distribution,
    aoi_gf,
    aoi_pmf,
    paoi_distribution,
    paoi_gf,
    paoi_pmf,
)
from dtaoi.optimize import optimal_lambda_numeric
from dtaoi.sim import Quantity, SimConfig, empirical_pmf, simulate, theorem1_residual

from test_models import random_params

REFERENCE = {
    FCFS: QueueParams.fcfs(0.5, 0.9),
    LCFS: QueueParams.lcfs(0.5, 0.9),
    BUFFERLESS: QueueParams.bufferless(0.5, 0.8),
}
# mean age: 1/lam + E[T] - lam/mu^2 + lam/mu, 1/lam + 1/mu, and 1/(lam p)
REFERENCE_MEAN = {FCFS: 2 + 1.25 - 0.5 / 0.81 + 0.5 / 0.9, LCFS: 1 / 0.5 + 1 / 0.9, BUFFERLESS: 1 / 0.4}


@pytest.fixture(scope="module")
def reference_runs():
    start = time.perf_counter()
    runs = {m: simulate(SimConfig(p, horizon_slots=10**6, seed=20240601)) for m, p in REFERENCE.items()}
    return runs, time.perf_counter() - start


def test_criterion_1_closed_forms_match_coefficients(acceptance):
    start = time.perf_counter()
    x = np.arange(1, 201)
    worst = 0.0
    for model in (FCFS, LCFS, BUFFERLESS):
        for p in random_params(model, 20, seed=100):
            for pmf, gf in ((paoi_pmf, paoi_gf), (aoi_pmf, aoi_gf)):
                worst = max(worst, float(np.max(np.abs(pmf(p, x) - coefficients(gf(p), 201)[1:]))))
    elapsed = time.perf_counter() - start
    acceptance(1, worst < 1e-10 and elapsed < 5.0, f"max abs error {worst:.2e}, {elapsed:.2f} s")


def test_criterion_2_simulation_matches_analytics(acceptance, reference_runs):
    runs, elapsed = reference_runs
    parts, ok = [], elapsed < 60.0
    for model, stats in runs.items():
        tv = total_variation(empirical_pmf(stats, Quantity.AOI), aoi_distribution(REFERENCE[model]))
        rel = abs(stats.aoi_mean - REFERENCE_MEAN[model]) / REFERENCE_MEAN[model]
        ok &= tv < 0.01 and rel < 0.02
        parts.append(f"{model.value}: TV {tv:.4f}, mean {stats.aoi_mean:.4f} vs {REFERENCE_MEAN[model]:.6f}")
    acceptance(2, ok, "; ".join(parts) + f"; {elapsed:.1f} s")


def test_criterion_3_theorem1_residual(acceptance, reference_runs):
    runs, _ = reference_runs
    residuals = {m.value: theorem1_residual(s) for m, s in runs.items()}
    acceptance(3, max(residuals.values()) < 0.01, ", ".join(f"{k} {v:.2e}" for k, v in residuals.items()))


def test_criterion_4_bufferless_age_equals_peak(acceptance, reference_runs):
    runs, _ = reference_runs
    x = np.arange(1, 501)
    exact = all(np.array_equal(aoi_pmf(p, x), paoi_pmf(p, x)) for p in random_params(BUFFERLESS, 20, seed=4))
    stats = runs[BUFFERLESS]
    tv = total_variation(empirical_pmf(stats, Quantity.AOI), empirical_pmf(stats, Quantity.PAOI))
    acceptance(4, exact and tv < 0.01, f"analytic identical: {exact}, empirical TV {tv:.4f}")


def test_criterion_5_cost_closed_forms(acceptance):
    costs = [AgeFunction.linear(1), AgeFunction.linear(2)] + [AgeFunction.power(1, n) for n in (2, 3, 4)] + [
        AgeFunction.affine_quad(1, 2)
    ]
    worst = 0.0
    for model in (FCFS, LCFS, BUFFERLESS):
        for p in random_params(model, 20, seed=500):
            for f in costs:
                for metric, closed in ((Metric.COUD, coud_mean_closed), (Metric.PCOUD, pcoud_mean_closed)):
                    want = model_cost_numeric(p, f, metric)
                    worst = max(worst, abs(closed(p, f) - want) / want)
    mean_err = 0.0
    for p in random_params(FCFS, 20, seed=501):
        mean_err = max(
            mean_err,
            abs(coud_mean_closed(p, AgeFunction.linear(1)) - aoi_distribution(p).mean()) / aoi_distribution(p).mean(),
            abs(pcoud_mean_closed(p, AgeFunction.linear(1)) - paoi_distribution(p).mean()) / paoi_distribution(p).mean(),
        )
    acceptance(5, worst < 1e-7 and mean_err < 1e-7, f"worst relative error {worst:.2e}; linear vs means {mean_err:.2e}")


def test_criterion_6_series_gap(acceptance):
    approx = approximate(AgeFunction.exp(0.1), 15, 1e-6)
    gap5 = approx.gaps[4]
    decreasing = all(b < a for a, b in zip(approx.gaps, approx.gaps[1:]))
    acceptance(6, abs(gap5 - 0.0200) <= 5e-4 and decreasing, f"gap after 5 terms {gap5:.6f}, strictly decreasing: {decreasing}")


def test_criterion_7_peak_minimizer(acceptance):
    costs = [AgeFunction.linear(1), AgeFunction.linear(3), AgeFunction.power(1, 2), AgeFunction.affine_quad(1, 2)]
    worst = 0.0
    for mu in (0.5, 0.7, 0.9):
        target = 1 - math.sqrt(1 - mu)
        for f in costs:
            worst = max(worst, abs(optimal_lambda_numeric(FCFS, f, Metric.PCOUD, mu).lambda_star - target))
        for alpha in (0.1, 1.0, 10.0):
            worst = max(worst, abs(optimal_lambda_numeric(FCFS, AgeFunction.power(alpha, 2), Metric.PCOUD, mu).lambda_star - target))
    acceptance(7, worst < 1e-5, f"max distance from 1 - sqrt(1 - mu): {worst:.2e}")


def test_criterion_8_figure_properties(acceptance):
    x = np.arange(1, 61)
    lams = np.linspace(0.05, 0.95, 19)
    lcfs_ok = True
    for mu in (0.3, 0.6, 0.9):
        c = np.array([aoi_cdf(QueueParams.lcfs(lam, mu), x) for lam in lams])
        step = np.diff(c, axis=0)
        # strictly increasing wherever the cdf has not saturated
        lcfs_ok &= bool(np.all(step >= -1e-12) and np.all(step[:, 1:][c[:-1, 1:] < 1 - 1e-6] > 0))
    low, high = aoi_cdf(QueueParams.fcfs(0.6, 0.9), x), aoi_cdf(QueueParams.fcfs(0.8, 0.9), x)
    fcfs_ok = bool(np.all(low[:10] >= high[:10] - 1e-12) and np.all(low[1:10] > high[1:10]))
    mean_lo = coud_mean_closed(QueueParams.fcfs(0.6, 0.9), AgeFunction.linear(1))
    mean_hi = coud_mean_closed(QueueParams.fcfs(0.8, 0.9), AgeFunction.linear(1))
    fcfs_ok &= mean_hi > mean_lo
    gap_ok = True
    for lam in (0.2, 0.4, 0.6):
        gaps = []
        for mu in np.linspace(lam + 0.02, 0.98, 30):
            p = QueueParams.fcfs(lam, mu)
            gaps.append(pcoud_mean_closed(p, AgeFunction.linear(1)) - coud_mean_closed(p, AgeFunction.linear(1)))
        gap_ok &= bool(min(gaps) >= 0 and np.all(np.diff(gaps) < 0))
    acceptance(
        8,
        lcfs_ok and fcfs_ok and gap_ok,
        f"lcfs cdf increasing in lambda: {lcfs_ok}; fcfs lambda=0.6 dominates 0.8: {fcfs_ok}; "
        f"peak-minus-average gap shrinking in mu: {gap_ok}",
    )


def test_criterion_9_deterministic_cli(acceptance):
    argv = [sys.executable, "-m", "dtaoi", "simulate", "--model", "fcfs", "--lambda", "0.5", "--mu", "0.9",
            "--slots", "1000000", "--seed", "12345", "--format", "csv"]
    outputs = [subprocess.run(argv, capture_output=True, check=True).stdout for _ in range(2)]
    acceptance(9, outputs[0] == outputs[1] and len(outputs[0]) > 0, f"{len(outputs[0])} bytes, identical: {outputs[0] == outputs[1]}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
