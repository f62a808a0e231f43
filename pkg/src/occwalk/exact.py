"""Exact finite-horizon laws by forward recursion and convolution."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from . import _kernels as K
from .sequences import DriftSequence, compensated_sum, make_constant

DEFAULT_TRUNCATION = 1e-12
MAX_JOINT_CELLS = 120_000_000
MAX_TAU_HALF = 1 << 15


class CapacityError(ValueError):
    """Requested exact computation does not fit the configured state budget."""


@dataclass
class Pmf:
    """Probability mass on ``offset + step * i`` with weight ``weights[i]``.

    ``truncation_mass`` is the probability discarded beyond the stored
    support; ``approximate`` flags a truncation above the requested bound.
    """

    offset: int
    weights: np.ndarray
    truncation_mass: float = 0.0
    step: int = 1
    approximate: bool = False

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if np.any(self.weights < 0):
            raise ValueError("negative probability weight")

    @property
    def values(self) -> np.ndarray:
        return self.offset + self.step * np.arange(self.weights.size, dtype=np.int64)

    def total(self) -> float:
        return math.fsum(self.weights)

    def normalization_error(self) -> float:
        return abs(self.total() + self.truncation_mass - 1.0)

    def prob(self, v: int) -> float:
        i, r = divmod(int(v) - self.offset, self.step)
        if r or i < 0 or i >= self.weights.size:
            return 0.0
        return float(self.weights[i])

    def cdf(self, v: float) -> float:
        """P(value <= v) restricted to the stored support."""
        return math.fsum(self.weights[self.values <= v])

    def sf(self, v: float) -> float:
        """P(value > v), counting the truncated mass as lying above v."""
        return math.fsum(self.weights[self.values > v]) + self.truncation_mass

    def mean(self) -> float:
        return math.fsum(self.weights * self.values)

    def moment(self, k: int) -> float:
        return math.fsum(self.weights * self.values.astype(np.float64) ** k)

    def to_csv(self, dest=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "probability"])
        for v, p in zip(self.values.tolist(), self.weights.tolist()):
            w.writerow([v, "%.17g" % p])
        buf.write("# truncation_mass=%.17g\n" % self.truncation_mass)
        text = buf.getvalue()
        if dest is not None:
            with open(dest, "w", newline="") as fh:
                fh.write(text)
        return text


# -- walk with a drift sequence -------------------------------------------

@dataclass
class JointLaw:
    n: int
    table: np.ndarray    # table[x + n, eta - 1]

    def prob(self, x: int, eta: int) -> float:
        if abs(x) > self.n or not 1 <= eta <= self.table.shape[1]:
            return 0.0
        return float(self.table[x + self.n, eta - 1])

    def x_pmf(self) -> Pmf:
        return Pmf(-self.n, self.table.sum(axis=1))

    def eta_pmf(self) -> Pmf:
        return Pmf(1, self.table.sum(axis=0))


def joint_law(eps: DriftSequence, n: int, max_cells: int = MAX_JOINT_CELLS) -> JointLaw:
    """Exact law of ``(X_n, eta_n)`` from ``(0, 1)``."""
    n = int(n)
    if n < 0:
        raise ValueError("horizon must be >= 0")
    cells = (2 * n + 1) * (n // 2 + 2)
    if cells > max_cells:
        raise CapacityError(
            f"joint law at n={n} needs {cells} cells, budget is {max_cells}")
    arr = np.ascontiguousarray(eps.values(n // 2 + 2))
    return JointLaw(n, K.joint_forward(arr, n))


def zero_probabilities(eps: DriftSequence, n: int) -> np.ndarray:
    """``P(X_t = 0)`` for ``t = 0..n``."""
    n = int(n)
    if (n + 2) * (n // 2 + 2) > MAX_JOINT_CELLS:
        raise CapacityError(f"horizon {n} too large for the exact return curve")
    return K.zero_prob_curve(np.ascontiguousarray(eps.values(n // 2 + 2)), n)


# -- excursion durations ---------------------------------------------------

def _tau_tail_cap(delta: float, tol: float) -> int:
    # P(tau > 2k) <= (1 - delta^2)^k: enough half-lengths for tail <= tol
    if delta <= 0:
        return 500
    if delta >= 1:
        return 1
    need = math.ceil(math.log(tol) / math.log1p(-delta * delta)) + 1
    return int(min(max(8, need), MAX_TAU_HALF))


def tau_pmf(delta: float, K_cap: int | None = None, tol: float = DEFAULT_TRUNCATION) -> Pmf:
    """Exact law of an excursion duration under constant drift ``delta``.

    Support ``2, 4, ..., 2K``.  Without ``K_cap`` the support is chosen so that
    the discarded tail is below ``tol`` (500 half-lengths when ``delta = 0``,
    where the tail is heavy and the truncation mass stays visibly positive).
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError("drift must lie in [0, 1]")
    k = int(K_cap) if K_cap is not None else _tau_tail_cap(delta, tol)
    if k < 1:
        raise ValueError("support cap must be >= 1")
    w, alive = K.first_passage(float(delta), k)
    return Pmf(2, w, truncation_mass=float(alive), step=2, approximate=alive > tol)


def T_n_pmf(eps: DriftSequence, n: int, cap: int | None = None,
            tol: float = DEFAULT_TRUNCATION) -> Pmf:
    """Law of ``T_n = tau_1 + ... + tau_n`` by successive convolution.

    ``cap`` bounds the support (in time units).  The truncation masses of the
    factors and of the cut convolutions are accumulated.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    vals = eps.values(n)
    lost = 0.0
    acc = np.array([1.0])     # law of T_k / 2 - k on 0, 1, ...
    kcap = None if cap is None else max(int(cap) // 2, 1)
    for k in range(n):
        f = tau_pmf(float(vals[k]), tol=tol)
        lost += f.truncation_mass
        acc = np.convolve(acc, f.weights)
        if kcap is not None and acc.size > kcap - k:
            keep = max(kcap - k, 0)
            lost += math.fsum(acc[keep:])
            acc = acc[:keep]
        # drop negligible far tail to keep the sizes bounded
        if acc.size > 1:
            tail = np.cumsum(acc[::-1])[::-1]
            cut = np.flatnonzero(tail > tol * 1e-6)
            last = cut[-1] + 1 if cut.size else 1
            if last < acc.size:
                lost += math.fsum(acc[last:])
                acc = acc[:last]
    return Pmf(2 * n, acc, truncation_mass=lost, step=2, approximate=lost > tol * max(n, 1))


# -- constant drift ------------------------------------------------------

def stay_positive_prob(delta: float, n: int) -> float:
    """``P(X_1 > 0, ..., X_n > 0)`` under constant drift ``delta`` from 0."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    p = np.zeros(n + 2)
    p[1] = 0.5
    pa = 0.5 * (1.0 - delta)
    pt = 0.5 * (1.0 + delta)
    for _ in range(n - 1):
        q = np.zeros_like(p)
        q[2:] += pa * p[1:-1]
        q[1:-1] += pt * p[2:]   # moves to 0 are killed
        p = q
    return math.fsum(p)


def position_law(delta: float, n: int) -> Pmf:
    """Law of ``X_n`` under constant drift ``delta`` from 0."""
    return joint_law(make_constant(delta), n).x_pmf()


def ruin_prob(delta: float, x: int) -> float:
    """Closed-form P(excursion maximum of |X| is below x), x >= 1.

    With ``rho = 2 delta / (1 - delta)`` this is ``1 - rho / ((1+rho)^x - 1)``.
    """
    x = int(x)
    if x < 1:
        raise ValueError("level must be >= 1")
    if x == 1:
        return 0.0      # every excursion reaches 1
    if delta == 0:
        return 1.0 - 1.0 / x
    rho = 2.0 * delta / (1.0 - delta)
    return 1.0 - rho / math.expm1(x * math.log1p(rho))


def _hit_before_zero(delta: float, x: int) -> float:
    # P(reach x before 0 from 1): solve the harmonic equations on 1..x-1
    if x == 1:
        return 1.0
    m = x - 1
    pa = 0.5 * (1.0 - delta)
    pt = 0.5 * (1.0 + delta)
    ab = np.zeros((3, m))
    ab[1, :] = 1.0
    ab[0, 1:] = -pa      # superdiagonal: a -> a + 1
    ab[2, :-1] = -pt     # subdiagonal: a -> a - 1
    rhs = np.zeros(m)
    rhs[-1] = pa
    return float(solve_banded((1, 1), ab, rhs)[0])


def max_law(delta: float, x_max: int = 50, horizon: int | None = None) -> Pmf:
    """Law of the maximum of |X|.

    Per excursion (default): support ``1..x_max`` via absorbing-barrier
    equations, independent of the closed form.  With ``horizon`` the law of
    ``max_{i<=n} |X_i|`` from 0 on ``0..n``.
    """
    if horizon is None:
        surv = np.array([_hit_before_zero(delta, x) for x in range(1, x_max + 2)])
        w = surv[:-1] - surv[1:]
        return Pmf(1, np.clip(w, 0, None), truncation_mass=float(surv[-1]))
    n = int(horizon)
    below = np.array([_stay_below(delta, n, x) for x in range(1, n + 2)])
    w = np.diff(np.concatenate([[0.0], below]))
    return Pmf(0, np.clip(w, 0, None))


def _stay_below(delta: float, n: int, x: int) -> float:
    # P(max_{i<=n} |X_i| < x) on the folded chain
    p = np.zeros(x)
    p[0] = 1.0
    pa = 0.5 * (1.0 - delta)
    pt = 0.5 * (1.0 + delta)
    for _ in range(n):
        q = np.zeros_like(p)
        q[1:2] += p[0] if x > 1 else 0.0
        if x > 1:
            q[2:] += pa * p[1:-1]
            q[0] += pt * p[1]
            q[1:-1] += pt * p[2:] if x > 2 else 0.0
        p = q
    return math.fsum(p)


def exact_tv(delta: float, n: int) -> float:
    """Total variation between the law of X_{2n} from 0 and the stationary law."""
    from .oscillating import stationary_measure
    mu = stationary_measure(delta)
    law = position_law(delta, 2 * n)
    xs = law.values
    even = xs % 2 == 0
    p = law.weights[even]
    m = mu.pmf(xs[even])
    outside = mu.tail(2 * n) * 2.0     # mass of |x| > 2n
    return 0.5 * (compensated_sum(np.abs(p - m)) + outside)
