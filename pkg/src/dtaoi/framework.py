"""Model-agnostic relations between age, peak age, and system time.

Everything here works on truncated distributions over slot counts.  A
:class:`DiscretePmf` carries its truncation explicitly through ``tail_mass``
so each construction can say how much probability it has lost.

Slot convention shared by the whole package: the age recorded for a slot is
the age at the end of that slot.  After a delivery with system time ``T`` the
recorded age is ``T + 1``, and the peak is the last age recorded before the
delivery slot.  Under that convention the stationary age pmf is

    P_age(x) = rate * (T_cdf(x - 1) - A_cdf(x - 1)),

which in the z-domain is ``rate * z * (T*(z) - A*(z)) / (1 - z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    AccuracyError,
    DegenerateModelError,
    InconsistentInputsError,
    InvalidInputError,
)
from .gf import RationalGF

NEG_TOL = 1e-12
SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DiscretePmf:
    """Probability mass on ``x_min, x_min + 1, ...`` plus unassigned tail mass.

    If ``tail_mass`` is omitted it is taken to be ``1 - sum(mass)``.
    """

    mass: np.ndarray
    x_min: int = 1
    tail_mass: Optional[float] = None

    def __post_init__(self):
        m = np.array(self.mass, dtype=float).ravel()
        if self.x_min < 0:
            raise InvalidInputError(f"x_min must be non-negative, got {self.x_min}")
        if m.size and m.min() < -NEG_TOL:
            raise InvalidInputError(f"negative probability mass {m.min():.3e}")
        m = np.clip(m, 0.0, None)
        m.setflags(write=False)
        total = float(m.sum())
        if self.tail_mass is None:
            tail = max(0.0, 1.0 - total)
        else:
            tail = float(self.tail_mass)
            if abs(total + tail - 1.0) > SUM_TOL:
                raise InvalidInputError(
                    f"mass ({total:.12g}) + tail_mass ({tail:.3g}) must equal 1"
                )
        object.__setattr__(self, "mass", m)
        object.__setattr__(self, "tail_mass", tail)

    @classmethod
    def point_mass(cls, x: int) -> DiscretePmf:
        return cls(np.array([1.0]), x_min=x, tail_mass=0.0)

    @classmethod
    def geometric(cls, success: float, tail_tol: float = 1e-12) -> DiscretePmf:
        """Trials until the first success, truncated once the tail drops below ``tail_tol``."""
        if not 0.0 < success <= 1.0:
            raise InvalidInputError(f"success probability must lie in (0, 1], got {success}")
        q = 1.0 - success
        n = 1 if q == 0.0 else max(1, math.ceil(math.log(tail_tol) / math.log(q)))
        x = np.arange(n)
        return cls(success * q**x, x_min=1, tail_mass=q**n)

    @classmethod
    def from_coefficients(cls, coeffs: Sequence[float], x_min: int = 1) -> DiscretePmf:
        """Build from power-series coefficients indexed from ``z**0``; entries below ``x_min`` are dropped."""
        c = np.asarray(coeffs, dtype=float)
        return cls(c[x_min:], x_min=x_min)

    @property
    def x_max(self) -> int:
        return self.x_min + len(self.mass) - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.x_min, self.x_max + 1)

    def is_complete(self, tol: float = SUM_TOL) -> bool:
        return self.tail_mass < tol

    def at(self, x: int) -> float:
        i = x - self.x_min
        return float(self.mass[i]) if 0 <= i < len(self.mass) else 0.0

    def dense(self, length: int) -> np.ndarray:
        """Masses indexed by value ``0 .. length - 1`` (zeros outside the stored range)."""
        out = np.zeros(length)
        lo, hi = self.x_min, min(self.x_max + 1, length)
        if hi > lo:
            out[lo:hi] = self.mass[: hi - lo]
        return out

    def cdf(self) -> DiscreteCdf:
        return DiscreteCdf(np.cumsum(self.mass), x_min=self.x_min)

    def mean(self) -> float:
        return float(np.dot(self.support, self.mass))

    def expect(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(f(self.support.astype(float)), self.mass))


@dataclass(frozen=True, eq=False)
class DiscreteCdf:
    """Non-decreasing ``Pr(X <= x)`` for ``x = x_min, x_min + 1, ...``.

    Below ``x_min`` the value is 0; past the stored range it is the last
    stored value.
    """

    values: np.ndarray
    x_min: int = 1

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size and (np.any(np.diff(v) < -NEG_TOL) or v.max() > 1.0 + NEG_TOL or v.min() < -NEG_TOL):
            raise InvalidInputError("cdf values must be non-decreasing within [0, 1]")
        v = np.clip(np.maximum.accumulate(v), 0.0, 1.0) if v.size else v
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def geometric(cls, success: float, x_max: int) -> DiscreteCdf:
        x = np.arange(1, x_max + 1)
        return cls(1.0 - (1.0 - success) ** x, x_min=1)

    @property
    def x_max(self) -> int:
        return self.x_min + len(self.values) - 1

    def at(self, x: int) -> float:
        if x < self.x_min:
            return 0.0
        i = min(x - self.x_min, len(self.values) - 1)
        return float(self.values[i])

    def dense(self, length: int) -> np.ndarray:
        """CDF values at ``0 .. length - 1``."""
        return np.array([self.at(x) for x in range(length)])

    def pmf(self) -> DiscretePmf:
        v = np.asarray(self.values)
        return DiscretePmf(np.diff(v, prepend=0.0), x_min=self.x_min)


def total_variation(p: DiscretePmf, q: DiscretePmf) -> float:
    """Half the L1 distance, with unassigned tail mass counted as disagreement."""
    n = max(p.x_max, q.x_max) + 1
    return 0.5 * (float(np.abs(p.dense(n) - q.dense(n)).sum()) + p.tail_mass + q.tail_mass)


# --- Theorems 1 and 2 -------------------------------------------------------


def aoi_pmf_from_components(
    system_time: DiscretePmf, paoi: DiscretePmf, rate: float, x_max: int
) -> DiscretePmf:
    """Stationary age pmf on ``[1, x_max]`` from system-time and peak-age pmfs.

    ``rate`` is the long-run delivery rate of the packets that reset the age.
    The inputs must describe one stationary system: then ``T_cdf >= A_cdf``
    everywhere and ``rate * (E[A] - E[T]) == 1``.
    """
    if not rate > 0:
        raise InvalidInputError(f"rate must be positive, got {rate}")
    if x_max < 1:
        raise InvalidInputError("x_max must be >= 1")
    for name, d in (("system_time", system_time), ("paoi", paoi)):
        if d.tail_mass > SUM_TOL:
            raise AccuracyError(f"{name} pmf is truncated (tail mass {d.tail_mass:.3e})")
    norm = rate * (paoi.mean() - system_time.mean())
    if abs(norm - 1.0) > 1e-6:
        raise InconsistentInputsError(
            f"rate * (E[A] - E[T]) = {norm:.9g}, expected 1; inputs do not share a system"
        )
    t_cdf = np.cumsum(system_time.dense(x_max))
    a_cdf = np.cumsum(paoi.dense(x_max))
    mass = rate * (t_cdf - a_cdf)
    if mass.min() < -SUM_TOL:
        raise InconsistentInputsError(
            f"negative age mass {mass.min():.3e}: peak-age cdf exceeds system-time cdf"
        )
    return DiscretePmf(np.clip(mass, 0.0, None), x_min=1)


def aoi_gf_from_components(
    system_time_gf: RationalGF, paoi_gf: RationalGF, rate: float, tol: float = SUM_TOL
) -> RationalGF:
    """``rate * z * (T*(z) - A*(z)) / (1 - z)`` with the ``(1 - z)`` cancelled exactly."""
    if not rate > 0:
        raise InvalidInputError(f"rate must be positive, got {rate}")
    diff = system_time_gf - paoi_gf
    try:
        quotient = diff.divide_by_one_minus_z(tol)
    except InvalidInputError as exc:
        raise InconsistentInputsError(str(exc)) from exc
    return RationalGF((0.0,) + tuple(rate * c for c in quotient.numerator), quotient.denominator)


# --- FCFS with general interarrival/service --------------------------------


def fcfs_paoi_pmf_general(
    interarrival_cdf: DiscreteCdf,
    system_time_cdf: DiscreteCdf,
    service_pmf: DiscretePmf,
    x_max: int,
    tail_tol: float = 1e-6,
) -> DiscretePmf:
    """Peak-age pmf of an FCFS queue as ``max(Y_n, T_{n-1}) + S_n``.

    ``Y_n`` and ``T_{n-1}`` are taken as independent (the caller's modelling
    choice); the max has cdf ``Y(x) T(x)`` and is then convolved with the
    service pmf.
    """
    y = interarrival_cdf.dense(x_max + 1)
    t = system_time_cdf.dense(x_max + 1)
    z_cdf = y * t
    z_pmf = np.diff(z_cdf, prepend=0.0)
    s_pmf = service_pmf.dense(x_max + 1)
    a = np.convolve(z_pmf, s_pmf)[: x_max + 1]
    if a[0] > NEG_TOL:
        raise InvalidInputError("peak age cannot be zero; check the interarrival cdf")
    out = DiscretePmf(np.clip(a[1:], 0.0, None), x_min=1)
    if out.tail_mass > tail_tol:
        raise AccuracyError(
            f"peak-age tail mass beyond x_max={x_max} is {out.tail_mass:.3e} > {tail_tol}"
        )
    return out


# --- preemptive LCFS with general interarrival/service ---------------------


def _span(*pmfs: DiscretePmf) -> int:
    return max(p.x_max for p in pmfs) + 2


def lcfs_theta(interarrival_pmf: DiscretePmf, service_pmf: DiscretePmf, tol: float = SUM_TOL) -> float:
    """``Pr(Y <= S)``, the chance that the next arrival comes no later than the service ends.

    Evaluated both as ``sum Y_cdf(n) P_S(n)`` and as ``sum P_Y(n) Pr(S >= n)``.
    """
    n = _span(interarrival_pmf, service_pmf)
    p_y, p_s = interarrival_pmf.dense(n), service_pmf.dense(n)
    y_cdf, s_cdf = np.cumsum(p_y), np.cumsum(p_s)
    first = float(np.dot(y_cdf, p_s))
    s_at_least = 1.0 - np.concatenate(([0.0], s_cdf[:-1]))
    second = float(np.dot(p_y, s_at_least))
    if abs(first - second) > tol:
        raise AccuracyError(
            f"theta forms disagree ({first:.12g} vs {second:.12g}); supports truncated too early"
        )
    return first


@dataclass(frozen=True)
class PreemptionTransforms:
    """Conditional transforms for a preemptive LCFS server.

    ``theta`` is ``Pr(Y <= S)``.  A departure and an arrival in the same slot
    boundary resolve departure-first, so a packet is made obsolete with
    probability ``obsolete_probability = Pr(Y < S)``.  Each transform is
    normalised to mass 1:

    * ``s_lt_y``: service time given it ends no later than the next arrival (``S <= Y``),
    * ``y_lt_s``: interarrival time given it beats the service (``None`` when impossible),
    * ``y_gt_s``: interarrival time given the service finished first (``Y >= S``).
    """

    theta: float
    obsolete_probability: float
    s_lt_y: RationalGF
    y_lt_s: Optional[RationalGF]
    y_gt_s: RationalGF
    effective_rate: float
    mean_interarrival: float


def lcfs_conditional_transforms(
    interarrival_pmf: DiscretePmf, service_pmf: DiscretePmf, tol: float = SUM_TOL
) -> PreemptionTransforms:
    for name, d in (("interarrival", interarrival_pmf), ("service", service_pmf)):
        if d.tail_mass > tol:
            raise AccuracyError(f"{name} pmf is truncated (tail mass {d.tail_mass:.3e})")
    theta = lcfs_theta(interarrival_pmf, service_pmf, tol)
    if theta >= 1.0 - tol:
        raise DegenerateModelError("theta = 1: every packet is preempted, none is informative")
    n = _span(interarrival_pmf, service_pmf)
    p_y, p_s = interarrival_pmf.dense(n), service_pmf.dense(n)
    y_cdf, s_cdf = np.cumsum(p_y), np.cumsum(p_s)

    s_first = p_s * (1.0 - y_cdf + p_y)  # S = n <= Y
    y_before_s = p_y * (1.0 - s_cdf)  # Y = n < S
    y_after_s = p_y * s_cdf  # S <= Y = n
    p_s_first = float(s_first.sum())
    p_y_lt_s = float(y_before_s.sum())
    if p_s_first <= 0.0:
        raise DegenerateModelError("service never completes before the next arrival")

    mean_y = interarrival_pmf.mean()
    return PreemptionTransforms(
        theta=theta,
        obsolete_probability=p_y_lt_s,
        s_lt_y=RationalGF.polynomial(s_first / p_s_first),
        y_lt_s=RationalGF.polynomial(y_before_s / p_y_lt_s) if p_y_lt_s > 0.0 else None,
        y_gt_s=RationalGF.polynomial(y_after_s / (1.0 - p_y_lt_s)),
        effective_rate=(1.0 - p_y_lt_s) / mean_y,
        mean_interarrival=mean_y,
    )


def lcfs_paoi_gf_general(pt: PreemptionTransforms, tol: float = SUM_TOL) -> RationalGF:
    """Peak age of informative packets: ``Y_{>=S} + (m - 1) obsolete interarrivals + S_{<Y}``.

    The number ``m`` of packets up to and including the informative one is
    geometric, which sums to ``A* = Y*_{>=S} (1 - q) S*_{<Y} / (1 - q Y*_{<S})``.
    """
    if pt.theta >= 1.0:
        raise DegenerateModelError("theta = 1: every packet is preempted")
    q = pt.obsolete_probability
    head = pt.y_gt_s * pt.s_lt_y
    if pt.y_lt_s is None or q == 0.0:
        a = head
    else:
        den = [-q * c for c in pt.y_lt_s.numerator]
        den[0] += 1.0
        a = head * RationalGF((1.0 - q,), tuple(den))
    if abs(a.evaluate(1.0) - 1.0) > tol:
        raise AccuracyError(f"peak-age transform has mass {a.evaluate(1.0):.12g} at z=1")
    return a


def lcfs_aoi_gf_general(pt: PreemptionTransforms, tol: float = SUM_TOL) -> RationalGF:
    """Age transform of a preemptive LCFS server; the system time of informative packets is ``S_{<Y}``."""
    return aoi_gf_from_components(pt.s_lt_y, lcfs_paoi_gf_general(pt, tol), pt.effective_rate, tol)
