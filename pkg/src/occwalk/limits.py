"""Limit laws and excursion-theory evaluators used as reference distributions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

SQRT2PI = math.sqrt(2.0 * math.pi)
QUAD_ABS = 1e-10


# -- Gaussian building blocks ---------------------------------------------

def Phi(x):
    """Standard normal CDF (Cephes ``ndtr``, accurate to ~1e-16 absolute)."""
    return special.ndtr(x)


def phi(x):
    return np.exp(-0.5 * np.square(x)) / SQRT2PI


# -- reference laws ---------------------------------------------------------

def laplace2_pdf(x):
    return np.exp(-2.0 * np.abs(x))


def laplace2_tail(x):
    """``P(L > x)`` for the law with density ``exp(-2|x|)``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x >= 0, 0.5 * np.exp(-2.0 * np.abs(x)), 1.0 - 0.5 * np.exp(-2.0 * np.abs(x)))
    return float(out) if out.ndim == 0 else out


def laplace2_cdf(x):
    return 1.0 - laplace2_tail(x)


def std_normal_cdf(x):
    return Phi(x)


def eta_variance(alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return (1.0 + alpha) / (1.0 + 3.0 * alpha)


def eta_normal_cdf(x, alpha: float):
    return Phi(np.asarray(x) / math.sqrt(eta_variance(alpha)))


def rayleigh_cdf(x):
    x = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
    return -np.expm1(-0.5 * x * x)


def rayleigh_pdf(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, x * np.exp(-0.5 * x * x), 0.0)


def sup_bm_cdf(x):
    """``P(sup_{[0,1]} B <= x) = 2 Phi(x) - 1`` for x >= 0."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, 2.0 * Phi(np.maximum(x, 0.0)) - 1.0, 0.0)


def levy_half_transform(lam):
    """``E exp(-lam H)`` for the hitting time H of level 1 by Brownian motion."""
    return np.exp(-np.sqrt(2.0 * np.asarray(lam, dtype=np.float64)))


# -- excursions of drifted Brownian motion -------------------------------

@dataclass(frozen=True)
class EntranceLaw:
    c: float

    def __post_init__(self):
        if self.c > 0:
            raise ValueError("entrance law defined here for drift c <= 0")

    def density(self, t, y):
        t = np.asarray(t, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return 2.0 * y / np.sqrt(2.0 * np.pi * t ** 3) * np.exp(-(y - self.c * t) ** 2 / (2.0 * t))


def _gauss_tail_beyond(c: float, t: float, ystar: float) -> float:
    # int_{y*}^inf 2y / sqrt(2 pi t^3) exp(-(y - ct)^2 / 2t) dy, exactly
    z = (ystar - c * t) / math.sqrt(t)
    return 2.0 * c * float(Phi(-z)) + 2.0 / math.sqrt(t) * float(phi(z))


def excursion_lifetime_tail(c: float, t: float, tol: float = QUAD_ABS) -> float:
    """``N^(c)(zeta > t)`` by adaptive quadrature of the entrance law.

    The integral runs over ``[0, y*]`` with ``y* = |c| t + 10 sqrt(t)``; the
    Gaussian remainder beyond ``y*`` is added in closed form.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if c > 0:
        raise ValueError("drift must be <= 0")
    law = EntranceLaw(c)
    ystar = abs(c) * t + 10.0 * math.sqrt(t)
    mode = max(math.sqrt(t), 1e-300)
    pts = [p for p in (mode, abs(c) * t) if 0 < p < ystar]
    val, _ = integrate.quad(lambda y: float(law.density(t, y)), 0.0, ystar,
                            epsabs=tol * 0.1, epsrel=1e-12, limit=200, points=pts or None)
    return val + _gauss_tail_beyond(c, t, ystar)


def scaling_residual(c: float, t: float, x: float = 1.0) -> float:
    """Largest residual of the Brownian scaling relation between drifts ``c`` and ``-1``.

    Two consequences are compared: entrance densities of ``|c| f(t / c^2)``
    at level ``x``, and lifetime tails ``N^(c)(zeta > t/c^2) = |c| N^(-1)(zeta > t)``
    (both sides by quadrature).
    """
    if c >= 0:
        raise ValueError("scaling relation stated for c < 0")
    a = abs(c)
    lhs = float(EntranceLaw(c).density(t / c ** 2, x / a)) / a
    rhs = a * float(EntranceLaw(-1.0).density(t, x))
    dens = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    life = abs(excursion_lifetime_tail(c, t / c ** 2) - a * excursion_lifetime_tail(-1.0, t))
    return max(dens, life / (a * lifetime_tail_closed(-1.0, t)))


def lifetime_tail_closed(c: float, t):
    """Closed form ``2 (phi(c sqrt t) / sqrt t + c Phi(c sqrt t))``."""
    t = np.asarray(t, dtype=np.float64)
    r = np.sqrt(t)
    return 2.0 * (phi(c * r) / r + c * Phi(c * r))


def age_cdf(x):
    """``int_0^x N^(-1)(zeta > u) du`` in closed form (a probability CDF)."""
    x = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
    s = np.sqrt(x)
    return 2.0 * (Phi(s) - 0.5) + 2.0 * s * phi(s) - 2.0 * s * s * Phi(-s)


def last_visit_cdf(x, stretch: float = 2.0):
    """Stated limit CDF ``int_0^{stretch x} N^(-1)(zeta > t) dt`` of (2n - V_{2n}) / b_{2n}^2.

    ``stretch=2`` is the statement as published; ``stretch=1`` is the form
    implied by the local limit and by the endpoint identity (see notes).
    """
    return age_cdf(stretch * np.asarray(x, dtype=np.float64))


def taboo_density(c: float, t: float, x, y):
    """Transition density of drift-``c`` Brownian motion killed at 0."""
    if t <= 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    pre = np.exp(c * (y - x) - 0.5 * c * c * t) / math.sqrt(2.0 * math.pi * t)
    out = pre * (np.exp(-(y - x) ** 2 / (2.0 * t)) - np.exp(-(y + x) ** 2 / (2.0 * t)))
    return np.where((x > 0) & (y > 0), out, 0.0)


def excursion_marginal_identity(x: float, c: float = -1.0, tol: float = 1e-12) -> tuple[float, float]:
    """Nested quadrature of ``int_x^inf dy int_0^inf dt R_t^(c)(y)`` against ``exp(-2x)``.

    The inner integral is computed for ``log`` of the integrand relative to
    its maximum over ``t`` so that large ``y`` does not underflow; the outer
    integral is accumulated as ``exp(-2x) * int_0^inf g(x + s) e^{2x} ds``.
    """
    if x < 0:
        raise ValueError("x must be >= 0")

    def log_inner(y: float) -> float:
        # log int_0^inf 2y (2 pi t^3)^{-1/2} exp(-(y - ct)^2 / 2t) dt
        def logf(t):
            return (math.log(2.0 * y) - 0.5 * math.log(2.0 * math.pi * t ** 3)
                    - (y - c * t) ** 2 / (2.0 * t))
        # maximiser of logf solves c^2 t^2 + 3t - y^2 = 0
        tm = (-3.0 + math.sqrt(9.0 + 4.0 * c * c * y * y)) / (2.0 * c * c) if c else y * y / 3
        lm = logf(tm)
        a, _ = integrate.quad(lambda t: math.exp(logf(t) - lm) if t > 0 else 0.0,
                              0.0, tm, epsabs=0, epsrel=tol, limit=400)
        b, _ = integrate.quad(lambda t: math.exp(logf(t) - lm), tm, math.inf,
                              epsabs=0, epsrel=tol, limit=400)
        return lm + math.log(a + b)

    def outer(s: float) -> float:
        y = x + s
        if y <= 0:
            return 0.0
        return math.exp(log_inner(y) + 2.0 * x)

    val, _ = integrate.quad(outer, 0.0, math.inf, epsabs=0, epsrel=1e-11, limit=400)
    return math.exp(-2.0 * x) * val, math.exp(-2.0 * x)


# -- tagged reference laws ----------------------------------------------------

@dataclass
class LimitLaw:
    tag: str
    cdf: Callable
    pdf: Callable | None
    support: tuple[float, float]

    def normalization(self) -> float:
        lo, hi = self.support
        if self.pdf is None:
            return float(self.cdf(hi) - self.cdf(lo))
        return integrate.quad(lambda v: float(self.pdf(v)), lo, hi, epsabs=1e-13,
                              epsrel=1e-12, limit=200)[0]


def limit_law(tag: str, alpha: float = 0.5, c: float = -1.0) -> LimitLaw:
    inf = math.inf
    if tag == "laplace2":
        return LimitLaw(tag, laplace2_cdf, laplace2_pdf, (-inf, inf))
    if tag == "std_normal":
        return LimitLaw(tag, Phi, phi, (-inf, inf))
    if tag == "eta_normal":
        sd = math.sqrt(eta_variance(alpha))
        return LimitLaw(tag, lambda v: eta_normal_cdf(v, alpha), lambda v: phi(v / sd) / sd,
                        (-inf, inf))
    if tag == "rayleigh":
        return LimitLaw(tag, rayleigh_cdf, rayleigh_pdf, (0.0, inf))
    if tag == "sup_bm":
        return LimitLaw(tag, sup_bm_cdf, lambda v: 2.0 * phi(v) if v > 0 else 0.0, (0.0, inf))
    if tag == "levy_half_transform":
        # law of the hitting time of 1: density t^{-3/2} phi(1/sqrt t)
        return LimitLaw(tag, lambda v: 2.0 * Phi(-1.0 / math.sqrt(v)) if v > 0 else 0.0,
                        lambda v: v ** -1.5 * float(phi(1.0 / math.sqrt(v))) if v > 0 else 0.0,
                        (0.0, inf))
    if tag == "excursion_lifetime":
        if c != -1.0:
            raise ValueError("age law implemented for c = -1")
        return LimitLaw(tag, age_cdf, lambda v: float(lifetime_tail_closed(c, v)) if v > 0 else 0.0,
                        (0.0, inf))
    raise ValueError(f"unknown limit law {tag!r}")
