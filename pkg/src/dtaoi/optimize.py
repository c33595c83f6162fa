"""Choosing the arrival probability that minimizes a mean age cost."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .coud import AgeFunction, Metric, cost_mean
from .errors import AccuracyError, ConvergenceError, DivergenceError, InvalidInputError
from .models import FCFS, Model, QueueParams

EDGE = 1e-6
SCAN_POINTS = 32
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class Method(str, Enum):
    CLOSED_FORM = "closed_form"
    GOLDEN_SECTION = "golden_section"


@dataclass(frozen=True)
class OptimizationResult:
    lambda_star: float
    objective_value: float
    method: Method
    iterations: int
    bracket: tuple[float, float]
    unimodal: bool = True


def optimal_lambda_pcoud_closed(mu: float) -> float:
    """Peak-cost minimizer of the FCFS queue for any increasing polynomial cost: ``1 - sqrt(1 - mu)``."""
    if not 0.0 < mu < 1.0:
        raise InvalidInputError(f"mu must lie in (0, 1), got {mu}")
    return 1.0 - math.sqrt(1.0 - mu)


def fcfs_linear_coud_stationarity(lam: float, mu: float) -> float:
    """Numerator of d/d(lam) of the FCFS mean age; zero at the age-optimal lam."""
    return lam**4 * (mu - 1.0) - 2.0 * lam**3 * (mu - 1.0) * mu - lam**2 * mu**2 + 2.0 * lam * mu**3 - mu**4


def search_bracket(model: Model, mu: Optional[float]) -> tuple[float, float]:
    if model is FCFS:
        return EDGE, mu - EDGE
    return EDGE, 1.0 - EDGE


def golden_section(
    objective: Callable[[float], float], lo: float, hi: float, tol: float, max_iter: int = 500
) -> tuple[float, float, int]:
    """Minimize a unimodal function on ``[lo, hi]`` to an interval shorter than ``tol``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = objective(c), objective(d)
    it = 0
    while b - a > tol:
        if it >= max_iter:
            raise ConvergenceError(f"golden-section search did not reach tol={tol:g} in {max_iter} steps")
        it += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = objective(d)
    x = c if fc <= fd else d
    return x, min(fc, fd), it


def _is_unimodal(values: np.ndarray) -> bool:
    i = int(np.argmin(values))
    slack = 1e-12 * np.max(np.abs(values))
    return bool(np.all(np.diff(values[: i + 1]) <= slack) and np.all(np.diff(values[i:]) >= -slack))


def optimal_lambda_numeric(
    model,
    f: AgeFunction,
    metric=Metric.PCOUD,
    mu: Optional[float] = None,
    tol: float = 1e-9,
    p: Optional[float] = None,
) -> OptimizationResult:
    """Minimize the mean cost over the arrival probability.

    A coarse scan locates the basin and checks that the sampled objective is
    unimodal; golden-section search then refines inside the two scan cells
    around the best sample.  Points where the objective is not finite are
    dropped from the scan.
    """
    model = Model.parse(model)
    metric = Metric.parse(metric)
    if model is not Model.BUFFERLESS_DROP and (mu is None or not 0.0 < mu < 1.0):
        raise InvalidInputError(f"mu must lie in (0, 1), got {mu}")
    if model is FCFS and mu <= 2 * EDGE:
        raise InvalidInputError(f"mu={mu} leaves no room for a stable arrival probability")
    lo, hi = search_bracket(model, mu)

    def objective(lam: float) -> float:
        try:
            return cost_mean(QueueParams(model, float(lam), mu, p), f, metric)
        except DivergenceError:
            return math.inf

    grid = np.linspace(lo, hi, SCAN_POINTS)
    values = np.array([objective(x) for x in grid])
    finite = np.isfinite(values)
    if not finite.any():
        raise AccuracyError("objective is not finite anywhere in the search bracket")
    grid, values = grid[finite], values[finite]
    unimodal = _is_unimodal(values)
    i = int(np.argmin(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, grid.size - 1)]
    x, fx, it = golden_section(objective, a, b, tol)
    if not np.isfinite(fx):
        raise AccuracyError(f"objective became non-finite near lambda={x:.6g}")
    return OptimizationResult(float(x), float(fx), Method.GOLDEN_SECTION, it, (lo, hi), unimodal)


def optimal_lambda(model, f: AgeFunction, metric=Metric.PCOUD, mu: Optional[float] = None, p: Optional[float] = None,
                   tol: float = 1e-9) -> OptimizationResult:
    """Closed form where one is known (FCFS peak cost with a polynomial cost), search otherwise."""
    model = Model.parse(model)
    metric = Metric.parse(metric)
    if model is FCFS and metric is Metric.PCOUD and f.polynomial_terms() is not None:
        lam = optimal_lambda_pcoud_closed(mu)
        value = cost_mean(QueueParams(model, lam, mu), f, metric)
        return OptimizationResult(lam, value, Method.CLOSED_FORM, 0, search_bracket(model, mu))
    return optimal_lambda_numeric(model, f, metric, mu, tol, p)
