"""Closed forms for the three single-source systems.

* ``FCFS_GEO_GEO_1``: Bernoulli(lam) arrivals, geometric(mu) service, infinite FIFO buffer.
* ``LCFS_PREEMPTIVE_GEO_GEO_1``: same arrivals and service, a new arrival preempts.
* ``BUFFERLESS_DROP``: an update generated with probability lam is sent once
  over an erasure channel with success probability p and dropped on failure.

All distributions live on ``x >= 1``; asking for ``x <= 0`` returns zero mass.
Functions taking ``x`` accept an int or an integer array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import InvalidInputError, StabilityError
from .framework import DiscretePmf
from .gf import RationalGF, poly_mul

STABILITY_MARGIN = 1e-12
EQUAL_RATES_TOL = 1e-9


class Model(str, Enum):
    FCFS_GEO_GEO_1 = "fcfs"
    LCFS_PREEMPTIVE_GEO_GEO_1 = "lcfs"
    BUFFERLESS_DROP = "bufferless"

    @classmethod
    def parse(cls, value) -> Model:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for m in cls:
            if key in (m.value, m.name.lower()):
                return m
        raise InvalidInputError(f"unknown model {value!r}; choose from fcfs, lcfs, bufferless")


FCFS = Model.FCFS_GEO_GEO_1
LCFS = Model.LCFS_PREEMPTIVE_GEO_GEO_1
BUFFERLESS = Model.BUFFERLESS_DROP


@dataclass(frozen=True)
class QueueParams:
    model: Model
    lam: float
    mu: Optional[float] = None
    p: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "model", Model.parse(self.model))
        lam = self.lam
        if self.model is BUFFERLESS:
            if not 0.0 < lam <= 1.0:
                raise InvalidInputError(f"lambda must lie in (0, 1], got {lam}")
            if self.p is None or not 0.0 < self.p <= 1.0:
                raise InvalidInputError(f"channel success probability p must lie in (0, 1], got {self.p}")
            if self.mu is not None:
                raise InvalidInputError("mu is not a parameter of the bufferless model")
            return
        if not 0.0 < lam < 1.0:
            raise InvalidInputError(f"lambda must lie in (0, 1), got {lam}")
        if self.mu is None or not 0.0 < self.mu < 1.0:
            raise InvalidInputError(f"mu must lie in (0, 1), got {self.mu}")
        if self.p is not None:
            raise InvalidInputError("p is only a parameter of the bufferless model")
        if self.model is FCFS and lam >= self.mu - STABILITY_MARGIN:
            raise StabilityError(
                f"FCFS queue is unstable: lambda={lam} must be below mu={self.mu}"
            )

    @classmethod
    def fcfs(cls, lam: float, mu: float) -> QueueParams:
        return cls(FCFS, lam, mu)

    @classmethod
    def lcfs(cls, lam: float, mu: float) -> QueueParams:
        return cls(LCFS, lam, mu)

    @classmethod
    def bufferless(cls, lam: float, p: float) -> QueueParams:
        return cls(BUFFERLESS, lam, p=p)

    def with_lam(self, lam: float) -> QueueParams:
        return QueueParams(self.model, lam, self.mu, self.p)

    @property
    def rho(self) -> float:
        """``(1 - mu) / (1 - lam)``."""
        return (1.0 - self.mu) / (1.0 - self.lam)

    @property
    def rho_bar(self) -> float:
        """``lam (1 - mu) / (mu (1 - lam))``: ratio governing the FCFS queue length."""
        return self.lam * (1.0 - self.mu) / (self.mu * (1.0 - self.lam))

    @property
    def near_equal_rates(self) -> bool:
        """True when the LCFS closed forms are evaluated through their lam == mu limit."""
        return self.model is LCFS and abs(self.lam - self.mu) < EQUAL_RATES_TOL

    @property
    def delivery_rate(self) -> float:
        """Long-run rate of deliveries that reset the age."""
        lam = self.lam
        if self.model is FCFS:
            return lam
        if self.model is LCFS:
            return lam * self.mu / (lam + self.mu - lam * self.mu)
        return lam * self.p

    def decay_rate(self) -> float:
        """Largest geometric rate in the tails of the age and peak-age pmfs."""
        if self.model is FCFS:
            return max(1.0 - self.lam, 1.0 - self.mu, self.rho)
        if self.model is LCFS:
            return max(1.0 - self.lam, 1.0 - self.mu)
        return 1.0 - self.lam * self.p


# --- generating functions ---------------------------------------------------


def _lin(c0: float, c1: float) -> tuple[float, float]:
    return (c0, c1)


def paoi_gf(params: QueueParams) -> RationalGF:
    lam, mu, p = params.lam, params.mu, params.p
    if params.model is FCFS:
        b = 1.0 - mu
        num = (0.0, 0.0, lam * mu * (mu - lam), 0.0, -lam * mu * (mu - lam) * b)
        den = poly_mul(poly_mul(_lin(1.0, -(1.0 - lam)), poly_mul(_lin(1.0, -b), _lin(1.0, -b))), _lin(1.0 - lam, -b))
        return RationalGF(num, den)
    if params.model is LCFS:
        a, b = 1.0 - lam, 1.0 - mu
        num = (0.0, 0.0, lam * mu * (lam * b + mu))
        den = poly_mul(poly_mul(_lin(1.0, -a), _lin(1.0, -b)), _lin(1.0, -a * b))
        return RationalGF(num, den)
    return RationalGF.geometric(lam * p)


def aoi_gf(params: QueueParams) -> RationalGF:
    lam, mu = params.lam, params.mu
    if params.model is FCFS:
        b = 1.0 - mu
        # 1 - b z (2 - lam - (1 - lam - mu) z)
        inner = (1.0, -b * (2.0 - lam), b * (1.0 - lam - mu))
        num = tuple(lam * (mu - lam) * c for c in (0.0, 0.0) + inner)
        den = poly_mul(poly_mul(_lin(1.0, -(1.0 - lam)), poly_mul(_lin(1.0, -b), _lin(1.0, -b))), _lin(1.0 - lam, -b))
        return RationalGF(num, den)
    if params.model is LCFS:
        num = (0.0, 0.0, lam * mu)
        den = poly_mul(_lin(1.0, -(1.0 - lam)), _lin(1.0, -(1.0 - mu)))
        return RationalGF(num, den)
    return paoi_gf(params)


def fcfs_system_time_gf(params: QueueParams) -> RationalGF:
    _require_fcfs(params)
    return RationalGF.geometric(params.mu * (1.0 - params.rho_bar))


def fcfs_system_time_pmf(params: QueueParams, x):
    _require_fcfs(params)
    s = params.mu * (1.0 - params.rho_bar)
    x, scalar = _as_x(x)
    out = np.where(x >= 1, s * (1.0 - params.mu + params.mu * params.rho_bar) ** (x - 1), 0.0)
    return _ret(out, scalar)


def _require_fcfs(params: QueueParams) -> None:
    if params.model is not FCFS:
        raise InvalidInputError("system-time closed form is only available for the FCFS model")


# --- pmfs and cdfs ------------------------------------------------------------


def _as_x(x):
    arr = np.asarray(x)
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.mod(arr, 1) == 0):
            raise InvalidInputError("x must be an integer number of slots")
    return arr.astype(float), arr.ndim == 0


def _ret(out, scalar):
    return float(out) if scalar else out


def _pow(base: float, exponent):
    """``base ** exponent`` through logs, so huge x underflows cleanly to 0."""
    return np.exp(exponent * math.log(base))


def divided_power(a: float, b: float, n):
    """``(a**n - b**n) / (a - b)``, continuous through ``a == b`` where it equals ``n a**(n-1)``."""
    n = np.asarray(n, dtype=float)
    hi, lo = max(a, b), min(a, b)
    d = hi - lo
    if d == 0.0:
        return n * _pow(a, n - 1)
    # factor out the larger base so nothing overflows for large n
    return -_pow(hi, n) * np.expm1(n * math.log1p(-d / hi)) / d


def paoi_pmf(params: QueueParams, x):
    x, scalar = _as_x(x)
    lam, mu = params.lam, params.mu
    if params.model is FCFS:
        rho = params.rho
        out = mu * (
            (mu - lam) * _pow(rho, x - 1) / (lam * (1.0 - mu))
            + mu * (1.0 - x) * _pow(1.0 - mu, x - 2)
            + lam * _pow(1.0 - lam, x - 1) / (mu - lam)
            + (lam**2 * (mu - 2.0) + 2.0 * lam * mu - mu**2) * _pow(1.0 - mu, x - 2) / (lam * (mu - lam))
        )
    elif params.model is LCFS:
        a, b = 1.0 - lam, 1.0 - mu
        # (lam-mu)(ab)^{x-1} - lam a^{x-1} + mu b^{x-1}, divided by lam - mu, without the pole
        out = (lam * b + mu) * (_pow(a * b, x - 1) + divided_power(a, b, x - 1) - divided_power(a, b, x))
    else:
        q = lam * params.p
        out = q * _pow(1.0 - q, x - 1) if q < 1.0 else (x == 1).astype(float)
    return _ret(np.where(x >= 1, out, 0.0), scalar)


def aoi_pmf(params: QueueParams, x):
    x, scalar = _as_x(x)
    lam, mu = params.lam, params.mu
    if params.model is FCFS:
        rho = params.rho
        out = (
            (mu - lam) * _pow(rho, x - 1) / (1.0 - mu)
            + lam * mu * (1.0 - x) * _pow(1.0 - mu, x - 2)
            + lam * mu * _pow(1.0 - lam, x - 1) / (mu - lam)
            + (lam**2 - lam * mu * (mu + 1.0) + mu**2) * _pow(1.0 - mu, x - 2) / (lam - mu)
        )
        return _ret(np.where(x >= 1, out, 0.0), scalar)
    if params.model is LCFS:
        out = lam * mu * divided_power(1.0 - lam, 1.0 - mu, x - 1)
        return _ret(np.where(x >= 1, out, 0.0), scalar)
    return paoi_pmf(params, x if not scalar else int(x))


def _cumulative(pmf, params, x):
    top = int(np.max(x)) if np.size(x) else 0
    c = np.concatenate(([0.0], np.cumsum(pmf(params, np.arange(1, max(top, 1) + 1)))))
    return c[np.clip(x.astype(int), 0, None)]


def paoi_cdf(params: QueueParams, x):
    x, scalar = _as_x(x)
    lam, mu = params.lam, params.mu
    if params.model is FCFS:
        rho = params.rho
        out = mu * (lam - 1.0) * _pow(rho, x) / (lam * (1.0 - mu)) + (
            _pow(1.0 - mu, x) * (lam**2 * (1.0 - mu * x) + lam * mu * (mu * (x - 1.0) - 1.0) + mu**2)
            + lam * (mu - 1.0) * (mu * (_pow(1.0 - lam, x) - 1.0) + lam)
        ) / (lam * (1.0 - mu) * (mu - lam))
    elif params.model is LCFS:
        if abs(lam - mu) < 1e-6:
            out = _cumulative(paoi_pmf, params, x)
        else:
            a, b = 1.0 - lam, 1.0 - mu
            out = (
                (mu - lam) * _pow(a * b, x)
                - lam * _pow(b, x) + mu * _pow(a, x)
                + lam * mu * _pow(b, x) - lam * mu * _pow(a, x)
                + lam * _pow(a, x) + lam - mu * _pow(b, x) - mu
            ) / (lam - mu)
    else:
        q = lam * params.p
        out = 1.0 - _pow(1.0 - q, x) if q < 1.0 else np.ones_like(x)
    # the closed forms can land a few ulps outside [0, 1]
    return _ret(np.where(x >= 1, np.clip(out, 0.0, 1.0), 0.0), scalar)


def aoi_cdf(params: QueueParams, x):
    x, scalar = _as_x(x)
    lam, mu = params.lam, params.mu
    if params.model is FCFS:
        rho = params.rho
        # rho**x multiplied into the bracket so that rho**x * rho**-x never forms
        out = (
            _pow(rho, x) * (-mu - lam**2 + lam * (mu + 1.0))
            + lam**2 * (1.0 - x) * _pow(1.0 - mu, x)
            - mu * (mu - _pow(1.0 - mu, x) - 1.0)
            + (mu - 1.0) * mu * _pow(1.0 - lam, x)
            + lam * (mu * (x - 2.0) * _pow(1.0 - mu, x) + mu - 1.0)
        ) / ((1.0 - mu) * (mu - lam))
    elif params.model is LCFS:
        if abs(lam - mu) < 1e-6:
            out = _cumulative(aoi_pmf, params, x)
        else:
            out = (lam - lam * _pow(1.0 - mu, x) + mu * (_pow(1.0 - lam, x) - 1.0)) / (lam - mu)
    else:
        return paoi_cdf(params, x if not scalar else int(x))
    return _ret(np.where(x >= 1, np.clip(out, 0.0, 1.0), 0.0), scalar)


# --- truncated distributions --------------------------------------------------


def support_length(params: QueueParams, tail_tol: float = 1e-14, weight_power: int = 0) -> int:
    """Smallest N (a power of two, >= 64) past which ``sum_{x>N} x**weight_power P(x)`` is below ``tail_tol``.

    Uses the dominant decay rate ``r``: the tail is bounded by a few multiples
    of ``N**(k+1) r**N / (1 - r)`` with ``k`` the weight power plus pole
    multiplicity.
    """
    r = params.decay_rate()
    if r == 0.0:
        return 64
    k = weight_power + (1 if params.model is FCFS else 0) + 1
    n = 64
    while True:
        bound = math.exp((k + 1) * math.log(n) + n * math.log(r)) / (1.0 - r) ** (k + 1)
        if bound < tail_tol:
            return n
        n *= 2


def _distribution(pmf, params: QueueParams, x_max: Optional[int], tail_tol: float) -> DiscretePmf:
    if x_max is None:
        x_max = support_length(params, tail_tol)
    mass = np.clip(pmf(params, np.arange(1, x_max + 1)), 0.0, None)
    return DiscretePmf(mass, x_min=1)


def aoi_distribution(params: QueueParams, x_max: Optional[int] = None, tail_tol: float = 1e-14) -> DiscretePmf:
    return _distribution(aoi_pmf, params, x_max, tail_tol)


def paoi_distribution(params: QueueParams, x_max: Optional[int] = None, tail_tol: float = 1e-14) -> DiscretePmf:
    return _distribution(paoi_pmf, params, x_max, tail_tol)


def system_time_distribution(params: QueueParams, x_max: Optional[int] = None) -> DiscretePmf:
    """System time of the packets that reset the age.

    The bufferless model delivers within the generation slot, which in the
    age bookkeeping is a system time of zero.  For the preemptive queue the
    informative packets' system time is geometric with success ``1 - (1-lam)(1-mu)``.
    """
    if params.model is BUFFERLESS:
        return DiscretePmf.point_mass(0)
    if params.model is FCFS:
        success = params.mu * (1.0 - params.rho_bar)
    else:
        success = 1.0 - (1.0 - params.lam) * (1.0 - params.mu)
    if x_max is None:
        return DiscretePmf.geometric(success, tail_tol=1e-15)
    x = np.arange(x_max)
    return DiscretePmf(success * (1.0 - success) ** x, x_min=1)
