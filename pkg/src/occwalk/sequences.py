"""Drift sequences and their deterministic scaling sequences.

A drift sequence assigns to the ``m``-th excursion from the origin the drift
magnitude ``eps[m]`` (1-based).  From it we derive

* ``a_n = n + sum_{i<=n} 1/eps_i``          (mean of the n-th return time),
* ``c_n = min{i : a_i >= n}``               (inverse of ``a``),
* ``b_n = 1/eps_{c_n}``                     (scale of the walk at time n),
* ``g_n = sqrt(sum_{i<=n} eps_i^-3 - eps_i^-1)`` (std dev of the n-th return time),
* ``h_n = b_n log(c_n / b_n) / 2``          (scale of the running maximum).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numba import njit

BLOCK = 1 << 16
KINDS = ("constant", "power_law", "power_log", "table", "custom")


class ScalingUndefinedError(ValueError):
    """Raised when a scaling sequence needs 1/eps_i with eps_i = 0."""


@njit(cache=True)
def _neumaier_cumsum(x, s0, c0, out_s, out_c):
    # running compensated sum; (s, c) are carried across blocks
    s = s0
    c = c0
    for i in range(x.shape[0]):
        v = x[i]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out_s[i] = s
        out_c[i] = c
    return s, c


def compensated_sum(values) -> float:
    """Neumaier summation in plain Python (used to cross-check the cache)."""
    s = 0.0
    c = 0.0
    for v in values:
        v = float(v)
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


@dataclass(eq=False)
class DriftSequence:
    """Sequence ``n -> eps_n`` (n >= 1) with values in ``[0, 1]``.

    ``eps_1 = 1`` is admitted: the first excursion then returns after two
    steps, and the canonical examples ``n**-alpha`` start there.  A sequence
    identically equal to one is rejected.
    """

    kind: str
    alpha: float = 0.0
    coeff: float = 1.0
    log_exp: float = 0.0
    table: np.ndarray | None = None
    rule: Callable[[np.ndarray], np.ndarray] | None = None
    regime: str | None = None
    label: str = ""
    _cache: np.ndarray = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sequence kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "table":
            self.table = np.asarray(self.table, dtype=np.float64)
            if self.table.ndim != 1 or self.table.size == 0:
                raise ValueError("table sequence needs a non-empty 1-d array")
        if self.regime is None:
            self.regime = _infer_regime(self)
        if not self.label:
            self.label = self.spec()
        self._cache = np.empty(0, dtype=np.float64)

    # -- evaluation -------------------------------------------------------
    def _raw(self, n: np.ndarray) -> np.ndarray:
        n = n.astype(np.float64)
        if self.kind == "constant":
            return np.full(n.shape, self.coeff)
        if self.kind == "power_law":
            return self.coeff * n ** (-self.alpha)
        if self.kind == "power_log":
            return self.coeff * n ** (-self.alpha) * np.log(n + math.e) ** self.log_exp
        if self.kind == "table":
            idx = n.astype(np.int64)
            if idx.size and idx.max() > self.table.size:
                raise IndexError(
                    f"table sequence has {self.table.size} values, index {idx.max()} requested")
            return self.table[idx - 1]
        return np.asarray(self.rule(n.astype(np.int64)), dtype=np.float64)

    def values(self, n_max: int) -> np.ndarray:
        """Array ``[eps_1, ..., eps_{n_max}]`` (cached, read-only)."""
        n_max = int(n_max)
        if n_max > self._cache.size:
            start = self._cache.size + 1
            stop = max(n_max, 2 * self._cache.size)
            if self.kind == "table":
                stop = max(n_max, min(stop, self.table.size))
            fresh = self._raw(np.arange(start, stop + 1, dtype=np.int64))
            _check_range(fresh, start)
            cache = np.concatenate([self._cache, fresh])
            cache.setflags(write=False)
            self._cache = cache
        return self._cache[:n_max]

    def __call__(self, n):
        if np.isscalar(n):
            if int(n) < 1:
                raise ValueError("drift sequences are indexed from n = 1")
            return float(self.values(int(n))[int(n) - 1])
        n = np.asarray(n, dtype=np.int64)
        if n.size and n.min() < 1:
            raise ValueError("drift sequences are indexed from n = 1")
        return self.values(int(n.max()) if n.size else 0)[n - 1]

    def spec(self) -> str:
        """Compact textual form accepted by :func:`parse_sequence`."""
        if self.kind == "constant":
            return f"constant:{self.coeff:g}"
        if self.kind == "power_law":
            return f"power_law:{self.alpha:g}:{self.coeff:g}"
        if self.kind == "power_log":
            return f"power_log:{self.alpha:g}:{self.coeff:g}:{self.log_exp:g}"
        if self.kind == "table":
            return f"table[{self.table.size}]"
        return self.label or "custom"

    def __repr__(self):
        return f"DriftSequence({self.spec()}, regime={self.regime})"

    def is_constant(self) -> bool:
        return self.kind == "constant"


def _check_range(vals: np.ndarray, start: int) -> None:
    bad = np.flatnonzero(~((vals >= 0.0) & (vals <= 1.0)))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"drift value eps_{start + i} = {vals[i]!r} outside [0, 1]")


def _infer_regime(seq: DriftSequence) -> str | None:
    if seq.kind == "constant":
        return "null" if seq.coeff == 0 else "constant"
    if seq.kind == "power_law":
        if seq.alpha > 1:
            return "supercritical"
        if 0 < seq.alpha < 1:
            return "subcritical"
        return None
    if seq.kind == "power_log":
        if seq.alpha > 1:
            return "supercritical"
        if 0 < seq.alpha < 1 or (seq.alpha == 0 and seq.log_exp < 0) or (
                seq.alpha == 1 and seq.log_exp > 1):
            return "subcritical"
    return None


# -- constructors -----------------------------------------------------------

def make_constant(delta: float) -> DriftSequence:
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"constant drift must lie in [0, 1), got {delta}")
    return DriftSequence("constant", alpha=0.0, coeff=float(delta))


def make_power_law(alpha: float, coeff: float = 1.0) -> DriftSequence:
    """``eps_n = coeff * n**-alpha``.

    ``alpha`` above one gives the summable (supercritical) family.  Raises
    ``ValueError`` when ``eps_1 = coeff`` exceeds one, or when the sequence
    would be identically one.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if coeff <= 0:
        raise ValueError("coefficient must be positive")
    if coeff > 1.0:
        raise ValueError(
            f"eps_1 = coeff = {coeff:g} >= 1: a drift probability 1/2(1+eps) would exceed one")
    if alpha == 0:
        return make_constant(coeff)
    return DriftSequence("power_law", alpha=float(alpha), coeff=float(coeff))


def make_power_log(alpha: float, coeff: float, log_exp: float) -> DriftSequence:
    """``eps_n = coeff * n**-alpha * log(n + e)**log_exp``.

    ``(0, 1, -1)`` is the slowly varying ``1/log(n + e)``; ``(1, k, 2)``
    is the shipped boundary case ``k log(n+e)**2 / n`` (k <= 0.58 keeps eps_1 <= 1).
    """
    seq = DriftSequence("power_log", alpha=float(alpha), coeff=float(coeff),
                        log_exp=float(log_exp))
    # may increase initially when log_exp > 0: check a generous prefix
    seq.values(1 << 12)
    return seq


def make_table(values: Sequence[float], regime: str | None = None) -> DriftSequence:
    seq = DriftSequence("table", table=np.asarray(values, dtype=np.float64), regime=regime)
    _check_range(seq.table, 1)
    return seq


def make_custom(rule: Callable[[np.ndarray], np.ndarray], label: str = "custom",
                regime: str | None = None, alpha: float = 0.0) -> DriftSequence:
    return DriftSequence("custom", rule=rule, label=label, regime=regime, alpha=alpha)


def parse_sequence(text: str) -> DriftSequence:
    """Parse a sequence description.

    Two spellings are accepted::

        power_law:0.5:1              constant:0.3
        kind=power_law alpha=0.5 coeff=1.0
        kind=table file=eps.txt      table:eps.txt
    """
    text = text.strip()
    if "=" in text:
        fields = dict(tok.split("=", 1) for tok in text.split())
        kind = fields.pop("kind", None)
        if kind is None:
            raise ValueError(f"sequence spec {text!r} lacks kind=")
        if kind == "constant":
            return make_constant(float(fields.get("delta", fields.get("coeff", 0.0))))
        if kind == "power_law":
            return make_power_law(float(fields.get("alpha", 0.5)), float(fields.get("coeff", 1.0)))
        if kind == "power_log":
            return make_power_log(float(fields.get("alpha", 0.0)), float(fields.get("coeff", 1.0)),
                                  float(fields.get("log_exp", fields.get("beta", 0.0))))
        if kind == "table":
            return load_table(fields["file"])
        raise ValueError(f"unsupported sequence kind {kind!r}")
    kind, _, rest = text.partition(":")
    args = rest.split(":") if rest else []
    try:
        if kind == "constant":
            return make_constant(float(args[0]))
        if kind == "power_law":
            return make_power_law(float(args[0]), float(args[1]) if len(args) > 1 else 1.0)
        if kind == "power_log":
            return make_power_log(float(args[0]), float(args[1]), float(args[2]))
        if kind == "table":
            return load_table(rest)
    except IndexError:
        raise ValueError(f"sequence spec {text!r} is missing parameters") from None
    raise ValueError(f"unsupported sequence spec {text!r}")


def load_table(path) -> DriftSequence:
    vals = [float(line) for line in Path(path).read_text().split() if line.strip()]
    return make_table(vals)


# -- scaling sequences ------------------------------------------------------

@dataclass(frozen=True)
class ScalingBundle:
    n: int
    a_n: float
    c_n: int
    b_n: float
    g_n: float
    h_n: float | None


class Scaling:
    """Memoised partial sums behind the scaling sequences of one drift sequence.

    Partial sums of ``1/eps_i`` and ``eps_i^-3 - eps_i^-1`` are grown in blocks
    of ``2**16`` with compensated summation, so repeated queries at many
    horizons cost a binary search each.
    """

    def __init__(self, eps: DriftSequence):
        self.eps = eps
        self._inv = np.empty(0)        # a_i - i, as compensated (sum + carry)
        self._g2 = np.empty(0)
        self._state = (0.0, 0.0, 0.0, 0.0)

    @property
    def size(self) -> int:
        return self._inv.size

    def _grow(self, n: int) -> None:
        while self._inv.size < n:
            start = self._inv.size
            stop = start + BLOCK
            if self.eps.kind == "table":
                stop = min(stop, self.eps.table.size)
                if stop <= start:
                    raise IndexError("table sequence exhausted while extending scaling sums")
            e = self.eps.values(stop)[start:stop]
            if np.any(e == 0):
                i = start + int(np.flatnonzero(e == 0)[0]) + 1
                raise ScalingUndefinedError(
                    f"scaling undefined for vanishing drift (eps_{i} = 0)")
            inv = 1.0 / e
            g = inv ** 3 - inv
            s1, c1, s2, c2 = self._state
            o1s, o1c = np.empty_like(inv), np.empty_like(inv)
            o2s, o2c = np.empty_like(inv), np.empty_like(inv)
            s1, c1 = _neumaier_cumsum(inv, s1, c1, o1s, o1c)
            s2, c2 = _neumaier_cumsum(g, s2, c2, o2s, o2c)
            self._state = (s1, c1, s2, c2)
            self._inv = np.concatenate([self._inv, o1s + o1c])
            self._g2 = np.concatenate([self._g2, o2s + o2c])

    def inv_sum(self, n: int) -> float:
        """``sum_{i<=n} 1/eps_i``."""
        if n == 0:
            return 0.0
        self._grow(n)
        return float(self._inv[n - 1])

    def a(self, n):
        if np.isscalar(n):
            return n + self.inv_sum(int(n))
        n = np.asarray(n, dtype=np.int64)
        self._grow(int(n.max()))
        return n + self._inv[n - 1]

    def g(self, n: int) -> float:
        self._grow(n)
        return math.sqrt(max(float(self._g2[n - 1]), 0.0))

    def c(self, n):
        """``min{i : a_i >= n}`` by exponential bracketing and binary search."""
        if not np.isscalar(n):
            return np.array([self.c(int(k)) for k in np.asarray(n).ravel()]).reshape(np.shape(n))
        n = int(n)
        if n < 1:
            raise ValueError("horizon must be >= 1")
        hi = max(self.size, 1)
        while True:
            self._grow(hi)
            if hi + self._inv[hi - 1] >= n:
                break
            hi *= 2
        idx = np.arange(1, hi + 1, dtype=np.float64)
        # a_i is strictly increasing, so the first index with a_i >= n is unique
        return int(np.searchsorted(idx + self._inv[:hi], n, side="left")) + 1

    def b(self, n: int) -> float:
        return 1.0 / self.eps(self.c(n))

    def h(self, n: int) -> float | None:
        c = self.c(n)
        b = 1.0 / self.eps(c)
        if c <= b:
            return None
        return 0.5 * b * math.log(c / b)

    def bundle(self, n: int) -> ScalingBundle:
        return scaling_bundle(self.eps, n, scaling=self)


_SCALINGS: dict[int, Scaling] = {}


def scaling_for(eps: DriftSequence) -> Scaling:
    """Shared (per-sequence object) scaling cache."""
    sc = _SCALINGS.get(id(eps))
    if sc is None or sc.eps is not eps:
        sc = Scaling(eps)
        _SCALINGS[id(eps)] = sc
    return sc


def scaling_bundle(eps: DriftSequence, n: int, scaling: Scaling | None = None) -> ScalingBundle:
    """All five scaling quantities at horizon ``n``."""
    n = int(n)
    if n < 1:
        raise ValueError("horizon must be >= 1")
    sc = scaling or scaling_for(eps)
    c = sc.c(n)
    b = 1.0 / eps(c) if eps(c) > 0 else math.inf
    return ScalingBundle(n=n, a_n=sc.a(n), c_n=c, b_n=b, g_n=sc.g(n), h_n=sc.h(n))


# -- regular-variation diagnostics -----------------------------------------

@dataclass
class RVRow:
    n: int
    ratio_up: float          # r_{2n}/r_n
    ratio_down: float        # r_{[n/2]}/r_n
    karamata: float          # sum_{m<=n} r_m / (n r_n)
    inverse: float | None    # a_{c_n}/n (drift sequences only)


@dataclass
class RVReport:
    rho: float
    rtol: float
    rows: list[RVRow]
    targets: dict
    passed: dict

    @property
    def ok(self) -> bool:
        return all(self.passed.values())


def rv_diagnostics(seq, rho_claimed: float, n_grid: Sequence[int], rtol: float = 0.02,
                   scaling: Scaling | None = None) -> RVReport:
    """Finite-n checks that ``seq`` is regularly varying with index ``rho_claimed``.

    ``seq`` is a DriftSequence or any vectorised callable ``n -> r_n`` of
    positive values.  Verdicts are taken at the largest grid point.
    """
    grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    n_max = 2 * grid[-1]
    vals = np.asarray(seq(np.arange(1, n_max + 1)), dtype=np.float64)
    if np.any(vals <= 0):
        raise ValueError("regular-variation diagnostics need positive values")
    csum = np.empty_like(vals)
    o_c = np.empty_like(vals)
    _neumaier_cumsum(vals, 0.0, 0.0, csum, o_c)
    csum = csum + o_c
    sc = None
    if isinstance(seq, DriftSequence) and np.all(seq.values(n_max) > 0):
        sc = scaling or scaling_for(seq)
    rows = []
    for n in grid:
        r_n = vals[n - 1]
        inverse = None
        if sc is not None:
            inverse = float(sc.a(sc.c(n)) / n)
        rows.append(RVRow(
            n=n,
            ratio_up=float(vals[2 * n - 1] / r_n),
            ratio_down=float(vals[max(n // 2, 1) - 1] / r_n),
            karamata=float(csum[n - 1] / (n * r_n)),
            inverse=inverse,
        ))
    targets = {"ratio_up": 2.0 ** rho_claimed, "ratio_down": 2.0 ** -rho_claimed}
    if rho_claimed > -1:
        targets["karamata"] = 1.0 / (1.0 + rho_claimed)
    if sc is not None:
        targets["inverse"] = 1.0
    last = rows[-1]
    passed = {k: abs(getattr(last, k) / t - 1.0) <= rtol for k, t in targets.items()}
    return RVReport(rho=rho_claimed, rtol=rtol, rows=rows, targets=targets, passed=passed)
