"""Rational generating functions and the special functions used by the age-cost means.

A :class:`RationalGF` is a ratio of two real polynomials in ``z`` stored as
coefficient tuples (constant term first).  Power-series coefficients are
extracted with the linear recurrence defined by the denominator, so repeated
poles need no special handling.

Only non-positive integer orders are supported for the polylogarithm and the
Lerch transcendent.  In that regime both reduce to rational functions of
``z``; the direct sums are kept as independent oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, InvalidInputError, PoleError

POLE_TOL = 1e-14


def _trim(coeffs: Sequence[float]) -> tuple[float, ...]:
    c = [float(v) for v in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return tuple(c) if c else (0.0,)


def poly_mul(a: Sequence[float], b: Sequence[float]) -> tuple[float, ...]:
    return _trim(np.convolve(np.asarray(a, float), np.asarray(b, float)))


def poly_add(a: Sequence[float], b: Sequence[float]) -> tuple[float, ...]:
    n = max(len(a), len(b))
    out = np.zeros(n)
    out[: len(a)] += a
    out[: len(b)] += b
    return _trim(out)


def poly_eval(c: Sequence[float], z: float) -> float:
    acc = 0.0
    for v in reversed(c):
        acc = acc * z + v
    return acc


@dataclass(frozen=True)
class SeriesAccuracy:
    """Truncation policy for infinite sums."""

    abs_tol: float = 1e-12
    max_terms: int = 10_000_000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise InvalidInputError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_terms < 1:
            raise InvalidInputError(f"max_terms must be >= 1, got {self.max_terms}")


@dataclass(frozen=True)
class RationalGF:
    """``numerator(z) / denominator(z)`` with coefficients listed from ``z**0`` up."""

    numerator: tuple[float, ...]
    denominator: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        num = _trim(self.numerator)
        den = _trim(self.denominator)
        if den[0] == 0.0:
            raise InvalidInputError("denominator must have a nonzero constant term")
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]) -> RationalGF:
        return cls(tuple(coeffs), (1.0,))

    @classmethod
    def geometric(cls, success: float) -> RationalGF:
        """pgf of the number of Bernoulli(success) trials up to the first success."""
        return cls((0.0, success), (1.0, -(1.0 - success)))

    def __mul__(self, other):
        if isinstance(other, RationalGF):
            return RationalGF(
                poly_mul(self.numerator, other.numerator),
                poly_mul(self.denominator, other.denominator),
            )
        return RationalGF(tuple(other * c for c in self.numerator), self.denominator)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __add__(self, other: RationalGF) -> RationalGF:
        if self.denominator == other.denominator:
            return RationalGF(poly_add(self.numerator, other.numerator), self.denominator)
        return RationalGF(
            poly_add(
                poly_mul(self.numerator, other.denominator),
                poly_mul(other.numerator, self.denominator),
            ),
            poly_mul(self.denominator, other.denominator),
        )

    def __sub__(self, other: RationalGF) -> RationalGF:
        return self + (-other)

    def scale_argument(self, a: float) -> RationalGF:
        """Return ``z -> self(a z)``."""
        num = tuple(c * a**k for k, c in enumerate(self.numerator))
        den = tuple(c * a**k for k, c in enumerate(self.denominator))
        return RationalGF(num, den)

    def evaluate(self, z: float) -> float:
        return evaluate(self, z)

    def coefficients(self, count: int) -> np.ndarray:
        return coefficients(self, count)

    def divide_by_one_minus_z(self, tol: float = 1e-9) -> RationalGF:
        """Exact ``self / (1 - z)`` for a function that vanishes at ``z = 1``.

        The numerator is divided synthetically by ``(z - 1)``; the remainder
        (the numerator's value at 1) is checked against ``tol`` relative to
        the denominator's value at 1, then dropped.
        """
        a = self.numerator
        d1 = poly_eval(self.denominator, 1.0)
        if abs(d1) < POLE_TOL:
            raise PoleError("function has a pole at z=1")
        if len(a) == 1:
            remainder = a[0]
            quotient = [0.0]
        else:
            b = [0.0] * (len(a) - 1)
            b[-1] = a[-1]
            for k in range(len(a) - 2, 0, -1):
                b[k - 1] = a[k] + b[k]
            remainder = a[0] + b[0]
            quotient = [-v for v in b]
        if abs(remainder / d1) > tol:
            raise InvalidInputError(
                f"numerator does not vanish at z=1 (value {remainder / d1:.3e}); "
                "cannot cancel the (1 - z) factor"
            )
        return RationalGF(tuple(quotient), self.denominator)


def coefficients(gf: RationalGF, count: int) -> np.ndarray:
    """First ``count`` power-series coefficients of ``gf`` by long division."""
    if count < 0:
        raise InvalidInputError("count must be non-negative")
    num, den = gf.numerator, gf.denominator
    d0 = den[0]
    if d0 == 0.0:
        raise InvalidInputError("denominator must have a nonzero constant term")
    span = [(k, dk) for k, dk in enumerate(den) if k > 0 and dk != 0.0]
    out = np.zeros(count)
    for n in range(count):
        acc = num[n] if n < len(num) else 0.0
        for k, dk in span:
            if k > n:
                break
            acc -= dk * out[n - k]
        out[n] = acc / d0
    return out


def evaluate(gf: RationalGF, z: float) -> float:
    den = poly_eval(gf.denominator, z)
    if abs(den) < POLE_TOL:
        raise PoleError(f"denominator vanishes at z={z}")
    return poly_eval(gf.numerator, z) / den


# --- polylogarithm / Lerch transcendent, non-positive integer order -------


@lru_cache(maxsize=None)
def eulerian_row(n: int) -> tuple[int, ...]:
    """Eulerian numbers A(n, 0..n-1); ``(1,)`` for n = 0."""
    if n == 0:
        return (1,)
    prev = eulerian_row(n - 1)
    row = []
    for k in range(n):
        left = prev[k] if k < len(prev) else 0
        right = prev[k - 1] if 0 <= k - 1 < len(prev) else 0
        row.append((k + 1) * left + (n - k) * right)
    return tuple(row)


def _check_order(s) -> int:
    if isinstance(s, float) and s.is_integer():
        s = int(s)
    if not isinstance(s, (int, np.integer)) or s > 0:
        raise DomainError(f"only non-positive integer orders are supported, got s={s}")
    return int(s)


def _check_unit_disc(z: float) -> None:
    if not abs(z) < 1.0:
        raise DomainError(f"|z| must be < 1, got z={z}")


def polylog(s: int, z: float) -> float:
    """``Li_s(z) = sum_{k>=1} z**k / k**s`` for integer ``s <= 0``.

    Uses ``Li_{-n}(z) = z * E_n(z) / (1 - z)**(n + 1)`` with the Eulerian
    polynomial ``E_n``.
    """
    n = -_check_order(s)
    _check_unit_disc(z)
    return z * poly_eval(eulerian_row(n), z) / (1.0 - z) ** (n + 1)


def polylog_series(s: int, z: float, accuracy: SeriesAccuracy = SeriesAccuracy()) -> float:
    """Direct summation of ``Li_s(z)``; kept as an oracle for :func:`polylog`."""
    n = -_check_order(s)
    _check_unit_disc(z)
    return _power_sum(z, n, 0.0, accuracy, start=1)


def lerch_phi(z: float, s: int, beta: float) -> float:
    """``Phi(z, s, beta) = sum_{k>=0} z**k / (k + beta)**s`` for integer ``s <= 0``.

    A term with ``k + beta == 0`` is excluded, so ``Phi(z, s, 0) == Li_s(z)``.
    Expanding ``(k + beta)**n`` binomially turns the sum into a combination
    of negative-order polylogarithms.
    """
    n = -_check_order(s)
    _check_unit_disc(z)
    total = 0.0
    for k in range(n + 1):
        weight = math.comb(n, k) * beta ** (n - k)
        if weight == 0.0:
            continue
        moment = 1.0 / (1.0 - z) if k == 0 else polylog(-k, z)
        total += weight * moment
    if n == 0 and float(beta).is_integer() and beta <= 0:
        # 0**0 was counted as 1 for the excluded term
        total -= z ** int(-beta)
    return total


def lerch_phi_series(
    z: float, s: int, beta: float, accuracy: SeriesAccuracy = SeriesAccuracy()
) -> float:
    """Direct summation of ``Phi(z, s, beta)``; oracle for :func:`lerch_phi`."""
    n = -_check_order(s)
    _check_unit_disc(z)
    return _power_sum(z, n, float(beta), accuracy, start=0)


def _power_sum(z: float, n: int, beta: float, accuracy: SeriesAccuracy, start: int) -> float:
    r = abs(z)
    if r == 0.0:
        # only the k=0 term survives
        return beta**n if start == 0 and beta != 0.0 else 0.0
    total = 0.0
    k = start
    while True:
        if k - start >= accuracy.max_terms:
            raise ConvergenceError(
                f"power sum did not reach abs_tol={accuracy.abs_tol} in {accuracy.max_terms} terms"
            )
        base = k + beta
        if base != 0.0:
            term = z**k * base**n
            total += term
            # past the peak of |k+beta|^n r^k the tail is bounded by a geometric series
            ratio = r * ((base + 1) / base) ** n if base > 0 else 1.0
            if ratio < 1.0 and abs(term) * ratio / (1.0 - ratio) < accuracy.abs_tol:
                return total
        k += 1
