"""Slot-level Monte-Carlo simulation of the three status-update systems.

Timing within slot ``s``: a departure can happen at the start of the slot,
an arrival at its end, and the age is recorded at the end.  A packet born in
slot ``g`` and delivered in slot ``d`` has system time ``d - g`` and leaves
the destination with age ``d - g + 1`` at the end of slot ``d``.  Queued
packets can leave no earlier than the slot after their birth, so their
system time is at least 1.  The bufferless system sends a packet within its
birth slot, which is a system time of 0 in this bookkeeping and a
post-delivery age of 1.

Service is drawn per packet as a geometric number of slots.  Because the
head-of-line packet completes in each slot with probability ``mu``
independently of the past, this has the same law as a per-slot coin flip.

The whole delivery process is built with array operations, then the age of
every slot is read off the delivery log, so a 10**6-slot run takes well under
a second.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, TextIO

import numpy as np

from .coud import AgeFunction, empirical_cost
from .errors import InsufficientDataError, InvalidInputError
from .framework import DiscretePmf
from .models import FCFS, LCFS, Model, QueueParams

DEFAULT_HORIZON = 10**6
DEFAULT_WARMUP = 10**4
TRACE_COLUMNS = ("n", "t_n", "t'_n", "T_n", "A_n")
LOW_CONFIDENCE_DELIVERIES = 1000


class Quantity(str, Enum):
    AOI = "aoi"
    PAOI = "paoi"
    SYSTEM_TIME = "system_time"


@dataclass(frozen=True)
class SimConfig:
    """One simulation run.

    ``warmup_slots`` defaults to ``min(10**4, horizon_slots // 10)`` so short
    runs still keep most of their slots.
    """

    params: QueueParams
    horizon_slots: int = DEFAULT_HORIZON
    warmup_slots: Optional[int] = None
    seed: int = 0
    x_max_histogram: int = 500
    record_path: bool = False

    def __post_init__(self):
        if int(self.horizon_slots) != self.horizon_slots or self.horizon_slots < 1:
            raise InvalidInputError(f"horizon_slots must be a positive integer, got {self.horizon_slots}")
        object.__setattr__(self, "horizon_slots", int(self.horizon_slots))
        warmup = self.warmup_slots
        if warmup is None:
            warmup = min(DEFAULT_WARMUP, self.horizon_slots // 10)
        if int(warmup) != warmup or warmup < 0:
            raise InvalidInputError(f"warmup_slots must be a non-negative integer, got {warmup}")
        if warmup >= self.horizon_slots:
            raise InvalidInputError(
                f"warmup_slots ({warmup}) must be smaller than horizon_slots ({self.horizon_slots})"
            )
        object.__setattr__(self, "warmup_slots", int(warmup))
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidInputError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))
        if self.x_max_histogram < 1:
            raise InvalidInputError(f"x_max_histogram must be positive, got {self.x_max_histogram}")

    @property
    def model(self) -> Model:
        return self.params.model

    @property
    def effective_slots(self) -> int:
        return self.horizon_slots - self.warmup_slots


@dataclass(frozen=True, eq=False)
class EmpiricalStats:
    """Summary of one run (or of merged replications).

    ``aoi_counts[x]`` is the number of recorded slots whose age was ``x``.
    The per-delivery arrays are aligned: entry ``i`` of each describes the
    ``i``-th informative delivery after warmup.
    """

    config: SimConfig
    aoi_counts: np.ndarray
    paoi_samples: np.ndarray
    system_time_samples: np.ndarray
    interarrival_samples: np.ndarray
    generation_slots: np.ndarray
    delivery_slots: np.ndarray
    effective_slots: int
    aoi_sum: int
    last_delivery_offset: int
    age_path: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def deliveries(self) -> int:
        return int(self.paoi_samples.size)

    @property
    def rate_estimate(self) -> float:
        return self.deliveries / self.effective_slots

    @property
    def aoi_mean(self) -> float:
        return self.aoi_sum / self.effective_slots

    @property
    def paoi_mean(self) -> float:
        if not self.deliveries:
            raise InsufficientDataError("no deliveries recorded")
        return float(self.paoi_samples.mean())

    @property
    def system_time_mean(self) -> float:
        if not self.deliveries:
            raise InsufficientDataError("no deliveries recorded")
        return float(self.system_time_samples.mean())

    @property
    def aoi_hist(self) -> np.ndarray:
        """Counts for ages ``0 .. x_max_histogram`` followed by one overflow bin."""
        x_max = self.config.x_max_histogram
        out = np.zeros(x_max + 2, dtype=np.int64)
        head = self.aoi_counts[: x_max + 1]
        out[: head.size] = head
        out[-1] = self.aoi_counts[x_max + 1 :].sum()
        return out

    def summary(self) -> dict:
        return {
            "model": self.config.model.value,
            "lambda": self.config.params.lam,
            "mu": self.config.params.mu,
            "p": self.config.params.p,
            "seed": self.config.seed,
            "horizon_slots": self.config.horizon_slots,
            "warmup_slots": self.config.warmup_slots,
            "effective_slots": self.effective_slots,
            "deliveries": self.deliveries,
            "rate_estimate": self.rate_estimate,
            "aoi_mean": self.aoi_mean,
            "paoi_mean": self.paoi_mean if self.deliveries else math.nan,
            "system_time_mean": self.system_time_mean if self.deliveries else math.nan,
        }


# --- delivery processes -------------------------------------------------------


def _fcfs_deliveries(params: QueueParams, births: np.ndarray, rng: np.random.Generator):
    service = rng.geometric(params.mu, size=births.size).astype(np.int64)
    # d_k = max(g_k, d_{k-1}) + S_k, unrolled as C_k + max_{j<=k}(g_j - C_{j-1})
    c = np.cumsum(service)
    c_prev = c - service
    done = c + np.maximum.accumulate(births - c_prev)
    return births, done


def _lcfs_deliveries(params: QueueParams, births: np.ndarray, rng: np.random.Generator, horizon: int):
    service = rng.geometric(params.mu, size=births.size).astype(np.int64)
    done = births + service
    # a packet survives if it finishes no later than the slot in which the next one is born
    next_birth = np.append(births[1:], horizon)
    keep = done <= next_birth
    return births[keep], done[keep]


def _bufferless_deliveries(params: QueueParams, births: np.ndarray, rng: np.random.Generator):
    ok = rng.random(births.size) < params.p
    kept = births[ok]
    return kept, kept.copy()


def _run(config: SimConfig, rng: np.random.Generator) -> EmpiricalStats:
    params = config.params
    horizon, warmup = config.horizon_slots, config.warmup_slots
    births = np.flatnonzero(rng.random(horizon) < params.lam).astype(np.int64)
    if params.model is FCFS:
        gen, done = _fcfs_deliveries(params, births, rng)
    elif params.model is LCFS:
        gen, done = _lcfs_deliveries(params, births, rng, horizon)
    else:
        gen, done = _bufferless_deliveries(params, births, rng)
    inside = done < horizon
    # the destination starts out holding an update born and delivered at slot -1
    gen = np.concatenate(([-1], gen[inside]))
    done = np.concatenate(([-1], done[inside]))

    slots = np.arange(warmup, horizon, dtype=np.int64)
    newest = gen[np.searchsorted(done, slots, side="right") - 1]
    ages = slots - newest + 1
    counts = np.bincount(ages)

    first = int(np.searchsorted(done, warmup, side="left"))
    g, d = gen[first:], done[first:]
    g_prev = gen[first - 1 : -1]
    last_offset = int(done[-1] - warmup + 1) if g.size else 0
    return EmpiricalStats(
        config=config,
        aoi_counts=counts,
        paoi_samples=d - g_prev,
        system_time_samples=d - g,
        interarrival_samples=g - g_prev,
        generation_slots=g,
        delivery_slots=d,
        effective_slots=config.effective_slots,
        aoi_sum=int(ages.sum()),
        last_delivery_offset=last_offset,
        age_path=ages if config.record_path else None,
    )


def simulate(config: SimConfig) -> EmpiricalStats:
    """Run one replication; identical configs give identical results."""
    return _run(config, np.random.default_rng(np.random.SeedSequence(config.seed)))


def _run_child(args) -> EmpiricalStats:
    config, seq = args
    return _run(config, np.random.default_rng(seq))


def simulate_replications(config: SimConfig, replications: int, workers: int = 1) -> list[EmpiricalStats]:
    """Independent replications with streams spawned from ``config.seed``.

    Results come back in spawn order whatever ``workers`` is, so merged
    statistics do not depend on scheduling.
    """
    if replications < 1:
        raise InvalidInputError(f"replications must be >= 1, got {replications}")
    children = np.random.SeedSequence(config.seed).spawn(replications)
    jobs = [(config, c) for c in children]
    if workers <= 1:
        return [_run_child(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_child, jobs))


def merge(runs: Sequence[EmpiricalStats]) -> EmpiricalStats:
    """Pool replications by adding histograms and concatenating per-delivery samples."""
    if not runs:
        raise InvalidInputError("nothing to merge")
    width = max(r.aoi_counts.size for r in runs)
    counts = np.zeros(width, dtype=np.int64)
    for r in runs:
        counts[: r.aoi_counts.size] += r.aoi_counts

    def cat(name):
        return np.concatenate([getattr(r, name) for r in runs])

    return EmpiricalStats(
        config=runs[0].config,
        aoi_counts=counts,
        paoi_samples=cat("paoi_samples"),
        system_time_samples=cat("system_time_samples"),
        interarrival_samples=cat("interarrival_samples"),
        generation_slots=cat("generation_slots"),
        delivery_slots=cat("delivery_slots"),
        effective_slots=sum(r.effective_slots for r in runs),
        aoi_sum=sum(r.aoi_sum for r in runs),
        last_delivery_offset=sum(r.last_delivery_offset for r in runs),
    )


# --- estimators ------------------------------------------------------------------


def _require_deliveries(stats: EmpiricalStats) -> None:
    if stats.deliveries == 0:
        raise InsufficientDataError("the run recorded no deliveries after warmup")


def empirical_pmf(stats: EmpiricalStats, which=Quantity.AOI) -> DiscretePmf:
    """Normalized histogram: ages weighted by slot, peaks and system times by delivery."""
    _require_deliveries(stats)
    which = Quantity(getattr(which, "value", which))
    if which is Quantity.AOI:
        counts = stats.aoi_counts
        return DiscretePmf(counts[1:] / counts.sum(), x_min=1, tail_mass=0.0)
    samples = stats.paoi_samples if which is Quantity.PAOI else stats.system_time_samples
    counts = np.bincount(samples)
    lo = int(samples.min())
    return DiscretePmf(counts[lo:] / samples.size, x_min=lo, tail_mass=0.0)


def _cdf_on(pmf: DiscretePmf, length: int) -> np.ndarray:
    """CDF at values ``0 .. length - 1``."""
    return np.cumsum(pmf.dense(length))


@dataclass(frozen=True)
class AgeIdentityReport:
    residual: float
    x_max: int
    rate_estimate: float
    rate_from_last_delivery: float
    renewal_gap: float
    low_confidence: bool


def age_identity_report(stats: EmpiricalStats, x_max: int = 50) -> AgeIdentityReport:
    """Compare the empirical age CDF with ``rate * sum_{u < x} (T_cdf(u) - A_cdf(u))``.

    Also reports how far the slot-based delivery rate is from the rate
    measured up to the last delivery, which should vanish on long runs.
    """
    _require_deliveries(stats)
    age = empirical_pmf(stats, Quantity.AOI)
    t = empirical_pmf(stats, Quantity.SYSTEM_TIME)
    a = empirical_pmf(stats, Quantity.PAOI)
    age_cdf = _cdf_on(age, x_max + 1)[1:]
    gap = _cdf_on(t, x_max) - _cdf_on(a, x_max)
    predicted = stats.rate_estimate * np.cumsum(gap)
    residual = float(np.max(np.abs(age_cdf - predicted)))
    by_last = stats.deliveries / stats.last_delivery_offset
    return AgeIdentityReport(
        residual=residual,
        x_max=x_max,
        rate_estimate=stats.rate_estimate,
        rate_from_last_delivery=by_last,
        renewal_gap=abs(stats.rate_estimate - by_last),
        low_confidence=stats.deliveries < LOW_CONFIDENCE_DELIVERIES,
    )


def theorem1_residual(stats: EmpiricalStats, x_max: int = 50) -> float:
    return age_identity_report(stats, x_max).residual


def empirical_coud(stats: EmpiricalStats, f: AgeFunction) -> tuple[float, float]:
    """(slot average of f(age), delivery average of f(peak))."""
    _require_deliveries(stats)
    return empirical_cost(stats.aoi_counts, stats.paoi_samples, f)


def write_trace(stats: EmpiricalStats, out: TextIO) -> None:
    """Per-delivery records as CSV: index, birth slot, delivery slot, system time, peak age."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for i in range(stats.deliveries):
        w.writerow(
            (
                i + 1,
                int(stats.generation_slots[i]),
                int(stats.delivery_slots[i]),
                int(stats.system_time_samples[i]),
                int(stats.paoi_samples[i]),
            )
        )


def trace_csv(stats: EmpiricalStats) -> str:
    buf = io.StringIO()
    write_trace(stats, buf)
    return buf.getvalue()
