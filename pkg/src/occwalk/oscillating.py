"""Constant-drift (oscillating) walk: stationary law, duration MGF, mixing bound."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np

from .exact import exact_tv  # noqa: F401  (re-exported companion check)


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"drift must lie in (0, 1), got {delta}")
    return delta


@dataclass(frozen=True)
class StationaryMeasure:
    """Stationary law of ``X_{2n}`` under constant drift ``delta`` (on 2Z)."""

    delta: float

    @property
    def ratio(self) -> float:
        return (1.0 - self.delta) / (1.0 + self.delta)

    @property
    def _head(self) -> float:
        d = self.delta
        return 2.0 * d * (1.0 - d) / (1.0 + d) ** 3

    def mass(self, i: int) -> float:
        """``mu(2i)``."""
        i = abs(int(i))
        if i == 0:
            return 2.0 * self.delta / (1.0 + self.delta)
        return self._head * self.ratio ** (2 * (i - 1))

    def pmf(self, x):
        """Mass at integer(s) ``x``; zero off the even lattice."""
        x = np.asarray(x, dtype=np.int64)
        i = np.abs(x) // 2
        out = np.where(i == 0, 2.0 * self.delta / (1.0 + self.delta),
                       self._head * self.ratio ** (2.0 * (i - 1)))
        out = np.where(x % 2 == 0, out, 0.0)
        return float(out) if out.ndim == 0 else out

    def _tail_from(self, i0: int) -> float:
        # sum_{i >= i0} mu(2i), i0 >= 1
        r2 = self.ratio ** 2
        return self._head * r2 ** (i0 - 1) / (1.0 - r2)

    def tail(self, y: float) -> float:
        """``mu((y, inf))``."""
        if y >= 0:
            return self._tail_from(math.floor(y / 2) + 1)
        # complement of mu((-inf, y]) = mu([-y, inf)) by symmetry
        i0 = math.ceil(-y / 2)
        upper = self._tail_from(i0) if i0 >= 1 else 1.0
        return 1.0 - upper

    def to_csv(self, dest, radius: int = 40) -> None:
        with open(dest, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "probability"])
            for x in range(-2 * (radius // 2), 2 * (radius // 2) + 1, 2):
                w.writerow([x, "%.17g" % self.pmf(x)])


def stationary_measure(delta: float) -> StationaryMeasure:
    return StationaryMeasure(_check_delta(delta))


def _kernel_step(p: np.ndarray, delta: float, off: int) -> np.ndarray:
    # one step of the constant-drift kernel on positions -off..off
    q = np.zeros_like(p)
    x = np.arange(-off, off + 1)
    up = np.where(x == 0, 0.5, 0.5 * (1.0 - np.sign(x) * delta))
    q[1:] += (up * p)[:-1]
    q[:-1] += ((1.0 - up) * p)[1:]
    return q


def verify_stationarity(delta: float, radius: int = 40,
                        mu: Callable[[np.ndarray], np.ndarray] | None = None) -> float:
    """``max_{|x| <= R} |(mu K^2)(x) - mu(x)|`` for the two-step kernel."""
    delta = _check_delta(delta)
    if radius < 2:
        raise ValueError("radius must be >= 2")
    mu = mu or stationary_measure(delta).pmf
    off = radius + 2
    x = np.arange(-off, off + 1)
    p = np.asarray(mu(x), dtype=np.float64)
    q = _kernel_step(_kernel_step(p, delta, off), delta, off)
    inner = slice(2, 2 * off - 1)
    return float(np.max(np.abs(q[inner] - p[inner])))


def mgf_tau(delta: float, s: float) -> float:
    """``E s**tau`` for an excursion under constant drift ``delta`` in [0, 1)."""
    delta = float(delta)
    if not 0.0 <= delta < 1.0:
        raise ValueError("drift must lie in [0, 1)")
    lim = 1.0 / math.sqrt(1.0 - delta * delta)
    if not 0.0 < s <= lim:
        raise ValueError(f"s = {s} outside (0, {lim}]")
    return (1.0 - math.sqrt(max(0.0, 1.0 - (1.0 - delta * delta) * s * s))) / (1.0 - delta)


def tau_moments(delta: float, h: float = 1e-5, dps: int = 40) -> tuple[float, float, float]:
    """First three moments of tau from central differences of the MGF at s = 1.

    Evaluated in extended precision so that the step ``h`` controls the error.
    """
    delta = _check_delta(delta)
    with mpmath.workdps(dps):
        d = mpmath.mpf(delta)

        def g(s):
            return (1 - mpmath.sqrt(1 - (1 - d * d) * s * s)) / (1 - d)

        one = mpmath.mpf(1)
        hh = mpmath.mpf(h)
        d1, d2, d3 = (mpmath.diff(g, one, k, h=hh, method="step", direction=0)
                      for k in (1, 2, 3))
        m1 = d1
        m2 = d2 + d1
        m3 = d3 + 3 * d2 + d1
        return float(m1), float(m2), float(m3)


def closed_form_moments(delta: float) -> tuple[float, float, float]:
    """Closed-form first three moments of tau."""
    e = 1.0 / delta
    return 1 + e, 1 + e + e ** 2 + e ** 3, 1 + e + 3 * e ** 4 + 3 * e ** 5


def tv_bound(delta: float, n: int) -> float:
    """``2 (1 + delta**2)**-n``, the mixing bound for ``X_{2n}``."""
    delta = _check_delta(delta)
    if int(n) < 1:
        raise ValueError("n must be >= 1")
    return 2.0 * (1.0 + delta * delta) ** (-int(n))
