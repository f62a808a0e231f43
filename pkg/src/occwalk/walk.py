"""Simulation of the occupation-driven walk, step by step or excursion by excursion."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from . import _kernels as K
from .rng import CounterStream, resolve_seed, stream_key
from .sequences import DriftSequence

MAX_HORIZON = 1 << 62


@dataclass(frozen=True)
class WalkState:
    x: int = 0
    eta: int = 1
    t: int = 0

    def __post_init__(self):
        if self.eta < 1:
            raise ValueError("occupation count must be positive")


@dataclass(frozen=True)
class ExcursionRecord:
    k: int
    sign: int
    tau: int
    max_abs: int
    end_time: int
    complete: bool = True


@dataclass
class WalkPath:
    """Outcome of :func:`simulate_path`.

    Summary fields are always filled; ``xs`` / ``etas`` only in path mode.
    """

    n: int
    x: int
    eta: int
    max_x: int
    max_abs: int
    last_zero: int
    seed: int
    replicate: int
    xs: np.ndarray | None = None
    etas: np.ndarray | None = None

    @property
    def at_zero(self) -> bool:
        return self.x == 0

    def summary(self) -> tuple[int, int, int, int, int]:
        return (self.x, self.eta, self.max_x, self.max_abs, self.last_zero)


def _check_horizon(n: int) -> int:
    n = int(n)
    if n < 1:
        raise ValueError("horizon must be >= 1")
    if n > MAX_HORIZON:
        raise ValueError("horizons above 2**62 are not supported")
    return n


def drift_array(eps: DriftSequence, length: int) -> np.ndarray:
    return np.ascontiguousarray(eps.values(int(length)), dtype=np.float64)


def _keys(seed: int, replicate: int) -> tuple[np.uint64, np.uint64]:
    o, g = stream_key(seed, replicate)
    return np.uint64(o), np.uint64(g)


def set_workers(workers: int | None) -> int:
    """Size the compiled thread pool; returns the count in use."""
    cap = numba.config.NUMBA_NUM_THREADS
    w = cap if workers is None else max(1, min(int(workers), cap))
    numba.set_num_threads(w)
    return w


# -- single steps (reference implementation) --------------------------------

def step(state: WalkState, eps: DriftSequence, rng: CounterStream) -> WalkState:
    """Advance one step, consuming one uniform from ``rng``."""
    u = rng.random()
    x, eta = state.x, state.eta
    if x == 0:
        return WalkState(1 if u >= 0.5 else -1, eta, state.t + 1)
    away = u < 0.5 * (1.0 - eps(eta))
    x = x + 1 if (x > 0) == away else x - 1
    return WalkState(x, eta + (x == 0), state.t + 1)


# -- trajectories ----------------------------------------------------------

def simulate_path(eps: DriftSequence, n: int, seed: int | None = None, replicate: int = 0,
                  mode: str = "summary", start: WalkState | None = None) -> WalkPath:
    """Simulate ``n`` steps from ``start`` (default: the origin with eta = 1).

    ``mode="summary"`` keeps O(1) memory; ``mode="path"`` also records
    ``xs`` and ``etas`` (length n + 1).  Both modes consume the same uniforms,
    so their summaries agree exactly.
    """
    n = _check_horizon(n)
    seed = resolve_seed(seed)
    start = start or WalkState()
    arr = drift_array(eps, start.eta + n // 2 + 1)
    o, g = _keys(seed, replicate)
    if mode == "summary":
        x, eta, mx, mabs, last0, _ = K.walk_summary(arr, n, o, g, start.x, start.eta)
        return WalkPath(n, int(x), int(eta), int(mx), int(mabs), int(last0), seed, replicate)
    if mode != "path":
        raise ValueError(f"unknown record mode {mode!r}")
    xs, etas, _ = K.walk_path(arr, n, o, g, start.x, start.eta)
    zeros = np.flatnonzero(xs == 0)
    return WalkPath(n, int(xs[-1]), int(etas[-1]), int(xs.max()), int(np.abs(xs).max()),
                    int(zeros[-1]) if zeros.size else -1, seed, replicate, xs, etas)


def simulate_excursions(eps: DriftSequence, count: int | None = None, budget: int | None = None,
                        seed: int | None = None, replicate: int = 0) -> list[ExcursionRecord]:
    """Excursions from 0, the k-th using drift ``eps_k``.

    Give ``count`` for a fixed number of excursions or ``budget`` for a time
    horizon; with a budget the last excursion is cut at the horizon and
    marked incomplete.
    """
    if (count is None) == (budget is None):
        raise ValueError("give exactly one of count or budget")
    if count is not None and count < 1:
        raise ValueError("count must be >= 1")
    if budget is not None:
        _check_horizon(budget)
    seed = resolve_seed(seed)
    c = int(count or 0)
    b = int(budget or 0)
    arr = drift_array(eps, c if c else b // 2 + 1)
    o, g = _keys(seed, replicate)
    sign, tau, mabs, end, done, _ = K.excursions(arr, c, b, o, g, 1)
    return [ExcursionRecord(k + 1, int(sign[k]), int(tau[k]), int(mabs[k]), int(end[k]),
                            bool(done[k])) for k in range(sign.size)]


@dataclass
class CoupledPaths:
    y1: np.ndarray
    y2: np.ndarray


def coupled_pair(eps1: DriftSequence, eps2: DriftSequence, x1: int, x2: int, n: int,
                 seed: int | None = None, replicate: int = 0, keep: bool = True) -> CoupledPaths:
    """Two walks sharing one uniform stream, the first with the stronger drift.

    Requires ``sup eps2 <= inf eps1`` (checked over the indices reachable by
    time ``n``) and ``x2 - x1`` a non-negative even integer.  The pathwise
    ordering ``|Y1| <= |Y2|`` is asserted at every step; a violation raises
    ``AssertionError``.
    """
    n = _check_horizon(n)
    if x2 - x1 < 0 or (x2 - x1) % 2:
        raise ValueError("starts must satisfy x2 - x1 in 2Z_+")
    if abs(x1) > abs(x2):
        raise ValueError("ordering |x1| <= |x2| fails at time 0")
    m = n // 2 + 2
    a1 = drift_array(eps1, m)
    a2 = drift_array(eps2, m)
    same = x1 == x2 and np.array_equal(a1, a2)   # then the two paths coincide
    if not same and a2.max() > a1.min():
        raise ValueError("coupling needs sup eps2 <= inf eps1")
    o, g = _keys(resolve_seed(seed), replicate)
    p1, p2, bad = K.coupled(a1, a2, int(x1), int(x2), n, o, g, keep)
    if bad >= 0:
        raise AssertionError(f"coupling order |Y1| <= |Y2| violated at step {bad}")
    return CoupledPaths(p1, p2)


# -- batches --------------------------------------------------------------

def replicate_keys(seed: int, replicates: int, start: int = 0):
    return K.stream_keys(np.uint64(seed & ((1 << 64) - 1)), start, int(replicates))


@dataclass
class SummaryBatch:
    x: np.ndarray
    eta: np.ndarray
    max_x: np.ndarray
    max_abs: np.ndarray
    last_zero: np.ndarray


def summary_batch(eps: DriftSequence, n: int, replicates: int, seed: int | None = None,
                  start: int = 0, workers: int | None = None) -> SummaryBatch:
    """Summary-mode runs for replicates ``start .. start + replicates - 1``."""
    n = _check_horizon(n)
    set_workers(workers)
    o, g = replicate_keys(resolve_seed(seed), replicates, start)
    out = K.summary_batch(drift_array(eps, n // 2 + 2), n, o, g)
    return SummaryBatch(*(out[:, j].copy() for j in range(5)))


@dataclass
class ReturnBatch:
    returns: np.ndarray     # number of returns to 0 by the horizon (eta - 1)
    last_zero: np.ndarray
    at_zero: np.ndarray


def return_batch(eps: DriftSequence, horizon: int, replicates: int, seed: int | None = None,
                 start: int = 0, workers: int | None = None) -> ReturnBatch:
    """Renewal clock per replicate, with excursion durations drawn directly.

    Valid for (X_n = 0, eta_n, V_n) only; positions away from 0 need
    :func:`summary_batch`.
    """
    horizon = _check_horizon(horizon)
    set_workers(workers)
    o, g = replicate_keys(resolve_seed(seed), replicates, start)
    out = K.returns_batch(drift_array(eps, horizon // 2 + 2), horizon, o, g)
    return ReturnBatch(out[:, 0].copy(), out[:, 1].copy(), out[:, 2].astype(bool))


def return_time_batch(eps: DriftSequence, count: int, replicates: int, seed: int | None = None,
                      start: int = 0, workers: int | None = None) -> np.ndarray:
    """``T_count`` per replicate (direct duration sampler; saturates near 2**61)."""
    set_workers(workers)
    o, g = replicate_keys(resolve_seed(seed), replicates, start)
    return K.T_batch(drift_array(eps, count), int(count), o, g)


def tau_batch(eps: DriftSequence, count: int, replicates: int, seed: int | None = None,
              start: int = 0, workers: int | None = None) -> np.ndarray:
    """Step-level durations of the first ``count`` excursions, shape (replicates, count)."""
    set_workers(workers)
    o, g = replicate_keys(resolve_seed(seed), replicates, start)
    return K.excursion_tau_batch(drift_array(eps, count), int(count), o, g)


def direct_tau_sample(delta: float, count: int, seed: int | None = None,
                      replicate: int = 0) -> np.ndarray:
    """IID durations under constant drift ``delta`` from the direct sampler."""
    o, g = _keys(resolve_seed(seed), replicate)
    return K.tau_sample(float(delta), int(count), o, g)


# -- dumps ---------------------------------------------------------------

def write_path_csv(path: WalkPath, dest) -> None:
    if path.xs is None:
        raise ValueError("trajectory dump needs mode='path'")
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "eta"])
        for t, (x, e) in enumerate(zip(path.xs.tolist(), path.etas.tolist())):
            w.writerow([t, x, e])


def write_excursions_csv(records: list[ExcursionRecord], dest) -> None:
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "sign", "tau", "max_abs", "end_time"])
        for r in records:
            w.writerow([r.k, r.sign, r.tau, r.max_abs, r.end_time])


def read_excursions_csv(src) -> list[ExcursionRecord]:
    rows = list(csv.DictReader(Path(src).read_text().splitlines()))
    return [ExcursionRecord(int(r["k"]), int(r["sign"]), int(r["tau"]), int(r["max_abs"]),
                            int(r["end_time"])) for r in rows]
