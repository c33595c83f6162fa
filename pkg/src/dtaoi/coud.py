"""Mean cost of update delay (CoUD) and its peak counterpart (PCoUD).

Given a non-decreasing cost ``f`` with ``f(0) = 0``, the time-average cost
equals ``sum_x f(x) P(x)`` over the stationary age pmf (or peak-age pmf for
the peak cost).  This module offers three ways to get that number:

* direct summation over a truncated pmf (:func:`coud_mean_numeric`),
* closed forms for polynomial costs on the three built-in systems
  (:func:`coud_mean_closed`, :func:`pcoud_mean_closed`),
* truncated series expansions for exponential and logarithmic costs
  (:func:`approximate`, :func:`coud_mean_series`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConvergenceError,
    DivergenceError,
    InsufficientDataError,
    InvalidInputError,
    UnsupportedCostError,
)
from .framework import DiscretePmf
from .gf import lerch_phi, polylog
from .models import FCFS, LCFS, QueueParams, aoi_pmf, paoi_pmf

# below this |lam - mu| the preemptive-queue power-n forms lose all precision
LCFS_POWER_SPLIT_TOL = 1e-6


class CostKind(str, Enum):
    LINEAR = "linear"
    POWER = "power"
    AFFINE_QUAD = "affine_quad"
    EXP = "exp"
    LOG = "log"
    SERIES = "series"


class Metric(str, Enum):
    COUD = "coud"
    PCOUD = "pcoud"

    @classmethod
    def parse(cls, value) -> Metric:
        try:
            return cls(str(getattr(value, "value", value)).lower())
        except ValueError:
            raise InvalidInputError(f"unknown metric {value!r}; choose coud or pcoud") from None


@dataclass(frozen=True)
class AgeFunction:
    """A cost of age.

    ``LINEAR``: alpha t.  ``POWER``: alpha t**n.  ``AFFINE_QUAD``: alpha t**2 + beta t.
    ``EXP``: exp(alpha t) - 1.  ``LOG``: log(alpha t + 1).
    ``SERIES``: sum_k coefficients[k-1] t**k.
    """

    kind: CostKind
    alpha: float = 1.0
    n: int = 1
    beta: float = 0.0
    coefficients: tuple[float, ...] = field(default=())

    def __post_init__(self):
        kind = CostKind(getattr(self.kind, "value", self.kind))
        object.__setattr__(self, "kind", kind)
        if kind is CostKind.SERIES:
            coeffs = tuple(float(c) for c in self.coefficients)
            if not coeffs:
                raise InvalidInputError("a series cost needs at least one coefficient")
            object.__setattr__(self, "coefficients", coeffs)
            t = np.arange(0, 1001, dtype=float)
            if np.any(np.diff(self(t)) < 0):
                raise InvalidInputError("series cost must be non-decreasing on the integers 0..1000")
            return
        if not self.alpha > 0:
            raise InvalidInputError(f"alpha must be positive, got {self.alpha}")
        if kind is CostKind.POWER and (int(self.n) != self.n or self.n < 1):
            raise InvalidInputError(f"power n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if kind is CostKind.AFFINE_QUAD and self.beta < 0:
            raise InvalidInputError(f"beta must be non-negative, got {self.beta}")

    @classmethod
    def linear(cls, alpha: float = 1.0) -> AgeFunction:
        return cls(CostKind.LINEAR, alpha)

    @classmethod
    def power(cls, alpha: float, n: int) -> AgeFunction:
        return cls(CostKind.POWER, alpha, n=n)

    @classmethod
    def affine_quad(cls, alpha: float, beta: float) -> AgeFunction:
        return cls(CostKind.AFFINE_QUAD, alpha, beta=beta)

    @classmethod
    def exp(cls, alpha: float) -> AgeFunction:
        return cls(CostKind.EXP, alpha)

    @classmethod
    def log(cls, alpha: float) -> AgeFunction:
        return cls(CostKind.LOG, alpha)

    @classmethod
    def series(cls, coefficients: Sequence[float]) -> AgeFunction:
        return cls(CostKind.SERIES, coefficients=tuple(coefficients))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k is CostKind.LINEAR:
            return self.alpha * t
        if k is CostKind.POWER:
            return self.alpha * t**self.n
        if k is CostKind.AFFINE_QUAD:
            return self.alpha * t**2 + self.beta * t
        if k is CostKind.EXP:
            return np.expm1(self.alpha * t)
        if k is CostKind.LOG:
            return np.log1p(self.alpha * t)
        return np.polynomial.polynomial.polyval(t, (0.0,) + self.coefficients)

    def polynomial_terms(self) -> Optional[list[tuple[int, float]]]:
        """``[(power, weight), ...]`` for polynomial costs, else None."""
        k = self.kind
        if k is CostKind.LINEAR:
            return [(1, self.alpha)]
        if k is CostKind.POWER:
            return [(self.n, self.alpha)]
        if k is CostKind.AFFINE_QUAD:
            return [(2, self.alpha), (1, self.beta)]
        if k is CostKind.SERIES:
            return [(i + 1, c) for i, c in enumerate(self.coefficients) if c != 0.0]
        return None

    def describe(self) -> str:
        k = self.kind
        if k is CostKind.POWER:
            return f"{self.alpha:g}*t^{self.n}"
        if k is CostKind.AFFINE_QUAD:
            return f"{self.alpha:g}*t^2+{self.beta:g}*t"
        if k is CostKind.LINEAR:
            return f"{self.alpha:g}*t"
        if k is CostKind.EXP:
            return f"exp({self.alpha:g}*t)-1"
        if k is CostKind.LOG:
            return f"log({self.alpha:g}*t+1)"
        return "+".join(f"{c:g}*t^{p}" for p, c in self.polynomial_terms())


# --- direct summation --------------------------------------------------------


@dataclass(frozen=True)
class NumericMean:
    value: float
    tail_bound: float
    decay_rate: Optional[float]


def _estimate_decay(mass: np.ndarray) -> Optional[float]:
    nz = np.flatnonzero(mass > 0)
    if nz.size < 4:
        return None
    last = mass[nz[-4:]]
    ratios = last[1:] / last[:-1]
    return float(min(1.0, ratios.max()))


def numeric_mean(pmf: DiscretePmf, f: AgeFunction, decay_rate: Optional[float] = None) -> NumericMean:
    """Sum ``f(x) P(x)`` over the stored support and bound what the tail could add.

    The tail is extrapolated as ``P(x_max) r**j`` with ``r`` the decay rate
    (estimated from the last stored masses when not given).  For an
    exponential cost the sum only converges when ``r * exp(alpha) < 1``.
    """
    x = pmf.support.astype(float)
    value = float(_weighted(f, x, pmf.mass).sum())
    if pmf.tail_mass <= 0.0 or not x.size:
        return NumericMean(value, 0.0, decay_rate)
    r = decay_rate if decay_rate is not None else _estimate_decay(pmf.mass)
    if f.kind is CostKind.EXP and r is not None and r * math.exp(f.alpha) >= 1.0:
        raise DivergenceError(
            f"exp({f.alpha:g} t) cost diverges against a tail decaying at rate {r:.6g} "
            f"(needs rate < exp(-{f.alpha:g}) = {math.exp(-f.alpha):.6g})"
        )
    if r is None or r >= 1.0:
        return NumericMean(value, math.inf, r)
    if r == 0.0:
        return NumericMean(value, 0.0, r)
    last = pmf.mass[-1] if pmf.mass[-1] > 0 else pmf.tail_mass
    j = np.arange(1, 20_001, dtype=float)
    log_terms = _log_cost(f, pmf.x_max + j) + math.log(last) + j * math.log(r)
    return NumericMean(value, float(np.sum(np.exp(log_terms))), r)


def _weighted(f: AgeFunction, x: np.ndarray, mass: np.ndarray) -> np.ndarray:
    """``f(x) * mass`` without forming ``inf * 0`` where an exponential cost meets a vanishing mass."""
    if f.kind is not CostKind.EXP:
        return f(x) * mass
    out = np.zeros_like(mass)
    pos = mass > 0
    out[pos] = np.exp(_log_cost(f, x[pos]) + np.log(mass[pos]))
    return out


def _log_cost(f: AgeFunction, t: np.ndarray) -> np.ndarray:
    if f.kind is CostKind.EXP:
        at = f.alpha * t
        return at + np.log(-np.expm1(-at))
    with np.errstate(divide="ignore"):
        return np.log(np.maximum(f(t), 0.0))


def coud_mean_numeric(age_pmf: DiscretePmf, f: AgeFunction, decay_rate: Optional[float] = None) -> float:
    return numeric_mean(age_pmf, f, decay_rate).value


def pcoud_mean_numeric(paoi_pmf: DiscretePmf, f: AgeFunction, decay_rate: Optional[float] = None) -> float:
    return numeric_mean(paoi_pmf, f, decay_rate).value


def model_pmf_for_cost(params: QueueParams, f: AgeFunction, metric=Metric.COUD, rel_tol: float = 1e-15) -> DiscretePmf:
    """Analytic age (or peak-age) pmf, truncated where ``f``-weighted tail mass is negligible.

    The support doubles until the weighted mass in the last half is below
    ``rel_tol`` of the total.
    """
    metric = Metric.parse(metric)
    pmf_fn = aoi_pmf if metric is Metric.COUD else paoi_pmf
    r = params.decay_rate()
    if f.kind is CostKind.EXP and r * math.exp(f.alpha) >= 1.0:
        raise DivergenceError(
            f"exp({f.alpha:g} t) cost diverges for this model: tail rate {r:.6g} "
            f"is not below exp(-{f.alpha:g}) = {math.exp(-f.alpha):.6g}"
        )
    n = 64
    while True:
        mass = np.clip(pmf_fn(params, np.arange(1, n + 1)), 0.0, None)
        weighted = _weighted(f, np.arange(1, n + 1, dtype=float), mass)
        total = weighted.sum()
        if weighted[n // 2 :].sum() <= rel_tol * total or n >= 1 << 24:
            return DiscretePmf(mass, x_min=1)
        n *= 2


def model_cost_numeric(params: QueueParams, f: AgeFunction, metric=Metric.COUD) -> float:
    """Direct summation of the cost against the model's analytic pmf."""
    pmf = model_pmf_for_cost(params, f, metric)
    return numeric_mean(pmf, f, params.decay_rate()).value


# --- closed forms --------------------------------------------------------------


def _fcfs_linear(lam, mu, peak):
    if peak:
        return (lam**2 - mu) / (lam * (lam - mu))
    return 1.0 / lam + (1.0 - lam) / (mu - lam) - lam / mu**2 + lam / mu


def _fcfs_quadratic(lam, mu, peak):
    if peak:
        num = (
            lam**4 * (mu * (mu + 2.0) - 2.0)
            + lam**3 * mu * ((mu - 6.0) * mu + 4.0)
            + lam**2 * mu**3
            - lam * mu**3 * (mu + 2.0)
            + 2.0 * mu**4
        )
        return num / (lam**2 * mu**2 * (mu - lam) ** 2)
    num = (
        lam**5 * (mu - 1.0) * (mu + 4.0)
        + lam**4 * mu * ((mu - 8.0) * mu + 8.0)
        + lam**3 * (mu - 2.0) * mu**2
        + lam**2 * mu**4
        - lam * mu**4 * (mu + 2.0)
        + 2.0 * mu**5
    )
    return num / (lam**2 * mu**3 * (lam - mu) ** 2)


def _fcfs_power(lam, mu, n, peak):
    a, b = 1.0 - lam, 1.0 - mu
    rho = b / a
    if peak:
        inner = (
            (2.0 * lam**2 - lam * mu * (mu + 2.0) + mu**2) * polylog(-n, b)
            + (lam - 1.0) * (mu - lam) ** 2 * polylog(-n, rho)
            + lam * mu * (mu - lam) * polylog(-n - 1, b)
        )
        return mu / (lam * (lam - mu)) * (lam**2 * polylog(-n, a) / (lam - 1.0) + inner / b**2)
    inner = (
        (lam**2 + (1.0 - 2.0 * lam) * mu**2 + (lam - 1.0) * lam * mu) * lerch_phi(b, -n, 0)
        + (lam - 1.0) * (mu - lam) ** 2 * lerch_phi(rho, -n, 0)
        + lam * mu * (mu - lam) * lerch_phi(b, -n - 1, 0)
    )
    return (lam * mu * lerch_phi(a, -n, 0) / (lam - 1.0) + inner / b**2) / (lam - mu)


def _lcfs_linear(lam, mu, peak):
    if peak:
        return (lam**2 * (1.0 - mu) ** 2 + lam * mu * (3.0 - 2.0 * mu) + mu**2) / (
            lam * mu * (lam * (1.0 - mu) + mu)
        )
    return 1.0 / lam + 1.0 / mu


def _lcfs_quadratic(lam, mu, peak):
    if peak:
        s = lam + mu - lam * mu
        return 2.0 / lam**2 + (4.0 / mu - 3.0) / lam - 1.0 / s + 2.0 / s**2 + (2.0 - 3.0 * mu) / mu**2 + 1.0
    return (lam**2 * (2.0 - mu) + lam * (2.0 - mu) * mu + 2.0 * mu**2) / (lam**2 * mu**2)


def _lcfs_power(lam, mu, n, peak):
    a, b = 1.0 - lam, 1.0 - mu
    if peak:
        inner = lam * (mu - 1.0) * polylog(-n, a) + (mu - lam * mu) * polylog(-n, b) + (lam - mu) * polylog(-n, a * b)
        return (lam * (mu - 1.0) - mu) / (a * b * (mu - lam)) * inner
    return lam * mu * ((mu - 1.0) * lerch_phi(a, -n, 0) - (lam - 1.0) * lerch_phi(b, -n, 0)) / (a * b * (lam - mu))


def _bufferless_linear(q):
    return 1.0 / q


def _bufferless_quadratic(q):
    return (2.0 - q) / q**2


def _bufferless_power(q, n, peak):
    if q == 1.0:
        # every slot delivers: the age is identically 1
        return 1.0
    if peak:
        return q * polylog(-n, 1.0 - q) / (1.0 - q)
    return q * lerch_phi(1.0 - q, -n, 0) / (1.0 - q)


def _unit_power_mean(params: QueueParams, n: int, peak: bool) -> float:
    """Closed-form mean of ``t**n`` through the Lerch / polylog expressions."""
    lam, mu = params.lam, params.mu
    if params.model is FCFS:
        return _fcfs_power(lam, mu, n, peak)
    if params.model is LCFS:
        if abs(lam - mu) < LCFS_POWER_SPLIT_TOL:
            return model_cost_numeric(params, AgeFunction.power(1.0, n), Metric.PCOUD if peak else Metric.COUD)
        return _lcfs_power(lam, mu, n, peak)
    return _bufferless_power(lam * params.p, n, peak)


def _linear_mean(params: QueueParams, peak: bool) -> float:
    if params.model is FCFS:
        return _fcfs_linear(params.lam, params.mu, peak)
    if params.model is LCFS:
        return _lcfs_linear(params.lam, params.mu, peak)
    return _bufferless_linear(params.lam * params.p)


def _quadratic_mean(params: QueueParams, peak: bool) -> float:
    if params.model is FCFS:
        return _fcfs_quadratic(params.lam, params.mu, peak)
    if params.model is LCFS:
        return _lcfs_quadratic(params.lam, params.mu, peak)
    return _bufferless_quadratic(params.lam * params.p)


def _closed(params: QueueParams, f: AgeFunction, peak: bool) -> float:
    k = f.kind
    if k is CostKind.LINEAR:
        return f.alpha * _linear_mean(params, peak)
    if k is CostKind.AFFINE_QUAD:
        out = f.alpha * _quadratic_mean(params, peak)
        if f.beta:
            out += f.beta * _linear_mean(params, peak)
        return out
    if k is CostKind.POWER:
        return f.alpha * _unit_power_mean(params, f.n, peak)
    if k is CostKind.SERIES:
        return sum(w * _unit_power_mean(params, p, peak) for p, w in f.polynomial_terms())
    raise UnsupportedCostError(
        f"no closed form for a {k.value} cost; use approximate() with coud_mean_series() "
        "or the numeric summation"
    )


def coud_mean_closed(params: QueueParams, f: AgeFunction) -> float:
    return _closed(params, f, peak=False)


def pcoud_mean_closed(params: QueueParams, f: AgeFunction) -> float:
    return _closed(params, f, peak=True)


# --- truncated series for non-polynomial costs --------------------------------


@dataclass(frozen=True)
class SeriesApproximation:
    """Truncated expansion of an EXP or LOG cost, checked at ``probe_t``.

    ``terms`` holds ``(power, weight)`` pairs.  For EXP the powers are of
    ``t``.  For LOG they are of ``u = alpha t / (alpha t + 2)``, so the
    expansion is not a polynomial in ``t``.  ``gaps[i]`` is the absolute
    error at ``probe_t`` after ``i + 1`` summed terms; ``k`` counts the terms
    used.
    """

    function: AgeFunction
    terms: tuple[tuple[int, float], ...]
    k: int
    gap: float
    probe_t: int
    epsilon: float
    gaps: tuple[float, ...]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.function.kind is CostKind.EXP:
            v = t
        else:
            at = self.function.alpha * t
            v = at / (at + 2.0)
        return sum(w * v**p for p, w in self.terms)


def _exp_term(alpha: float, k: int) -> tuple[int, float]:
    return k, math.exp(k * math.log(alpha) - math.lgamma(k + 1))


def _log_term(k: int) -> tuple[int, float]:
    return 2 * k - 1, 2.0 / (2 * k - 1)


def approximate(f: AgeFunction, probe_t: int, epsilon: float, max_terms: int = 1000) -> SeriesApproximation:
    """Add expansion terms until the error at ``probe_t`` drops below ``epsilon``."""
    if f.kind not in (CostKind.EXP, CostKind.LOG):
        raise UnsupportedCostError(f"series approximation is defined for exp and log costs, not {f.kind.value}")
    if not epsilon > 0:
        raise InvalidInputError(f"epsilon must be positive, got {epsilon}")
    if probe_t < 0 or int(probe_t) != probe_t:
        raise InvalidInputError(f"probe_t must be a non-negative integer, got {probe_t}")
    target = float(f(probe_t))
    at = f.alpha * probe_t
    terms: list[tuple[int, float]] = []
    gaps: list[float] = []
    approx = 0.0
    for k in range(1, max_terms + 1):
        if f.kind is CostKind.EXP:
            p, w = _exp_term(f.alpha, k)
            approx += w * float(probe_t) ** p
        else:
            p, w = _log_term(k)
            approx += w * (at / (at + 2.0)) ** p
        terms.append((p, w))
        gap = abs(target - approx)
        gaps.append(gap)
        if gap < epsilon:
            return SeriesApproximation(f, tuple(terms), k, gap, int(probe_t), epsilon, tuple(gaps))
    raise ConvergenceError(f"gap {gaps[-1]:.3e} still above epsilon={epsilon:g} after {max_terms} terms")


def truncate(approx: SeriesApproximation, k: int) -> SeriesApproximation:
    """The same expansion cut to its first ``k`` terms."""
    if not 1 <= k <= approx.k:
        raise InvalidInputError(f"k must lie in [1, {approx.k}], got {k}")
    return SeriesApproximation(
        approx.function, approx.terms[:k], k, approx.gaps[k - 1], approx.probe_t, approx.epsilon, approx.gaps[:k]
    )


def _series_mean(params: QueueParams, approx: SeriesApproximation, peak: bool) -> float:
    if approx.function.kind is CostKind.EXP:
        return sum(w * _unit_power_mean(params, p, peak) for p, w in approx.terms)
    # powers of alpha t / (alpha t + 2) have no closed form here; sum the exact cost
    return model_cost_numeric(params, approx.function, Metric.PCOUD if peak else Metric.COUD)


def coud_mean_series(params: QueueParams, approx: SeriesApproximation) -> float:
    return _series_mean(params, approx, peak=False)


def pcoud_mean_series(params: QueueParams, approx: SeriesApproximation) -> float:
    return _series_mean(params, approx, peak=True)


def cost_mean(params: QueueParams, f: AgeFunction, metric=Metric.COUD) -> float:
    """Closed form when one exists, otherwise numeric summation."""
    metric = Metric.parse(metric)
    if f.polynomial_terms() is not None:
        return _closed(params, f, peak=metric is Metric.PCOUD)
    return model_cost_numeric(params, f, metric)


def empirical_cost(age_counts: np.ndarray, peaks: np.ndarray, f: AgeFunction) -> tuple[float, float]:
    """Slot average of ``f(age)`` from a histogram indexed by age, and delivery average of ``f(peak)``."""
    counts = np.asarray(age_counts, dtype=float)
    if counts.sum() <= 0 or len(peaks) == 0:
        raise InsufficientDataError("no slots or no deliveries recorded")
    ages = np.arange(counts.size, dtype=float)
    coud = float(np.dot(f(ages), counts) / counts.sum())
    pcoud = float(np.mean(f(np.asarray(peaks, dtype=float))))
    return coud, pcoud
