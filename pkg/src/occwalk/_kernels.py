"""Compiled inner loops.

All kernels draw uniforms from the counter-based stream of :mod:`occwalk.rng`:
the additive state starts at the stream origin and every draw does
``state += gamma; u = (mix64(state) >> 11) * 2**-53``.

Step rule (one uniform per step).  At 0 the walk moves to +1 iff ``u >= 1/2``.
Elsewhere it moves away from 0 iff ``u < (1 - eps)/2``.  Expressing the move in
terms of |x| (rather than of the signed position) makes the single-uniform
coupling of two walks monotone in |x|, so the strongly drifted walk stays
closer to 0 pathwise.
"""
from __future__ import annotations

import math

import numba
import numpy as np
from numba import njit, prange

# the TBB layer on this class of hosts is often too old and only warns
if numba.config.THREADING_LAYER == "default":
    numba.config.THREADING_LAYER = "workqueue"

U11 = np.uint64(11)
U27 = np.uint64(27)
U30 = np.uint64(30)
U31 = np.uint64(31)
U1 = np.uint64(1)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
GOLD = np.uint64(0x9E3779B97F4A7C15)
SALT = np.uint64(0xD1B54A32D192ED03)
ALT = np.uint64(0xAAAAAAAAAAAAAAAA)
INV53 = 1.0 / 9007199254740992.0

# first-passage survival of the simple walk, s_u = C(2u, u) / 4**u
S_TABLE_SIZE = 1024


def _survival_table(size: int) -> np.ndarray:
    out = np.empty(size + 1)
    for u in range(size + 1):
        out[u] = math.comb(2 * u, u) / 4 ** u
    return out


S_TABLE = _survival_table(S_TABLE_SIZE)
CENSORED = np.int64(1) << np.int64(61)
HUGE_U = np.int64(1) << np.int64(60)


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> U30)) * M1
    z = (z ^ (z >> U27)) * M2
    return z ^ (z >> U31)


@njit(cache=True, inline="always")
def to_unit(z):
    return float(mix64(z) >> U11) * INV53


@njit(cache=True)
def _popcount(z):
    c = 0
    while z != np.uint64(0):
        z &= z - U1
        c += 1
    return c


@njit(cache=True)
def stream_keys(base_seed, start, count):
    origins = np.empty(count, dtype=np.uint64)
    gammas = np.empty(count, dtype=np.uint64)
    head = mix64(np.uint64(base_seed) + GOLD)
    for i in range(count):
        o = mix64(head + np.uint64(start + i))
        g = mix64(o ^ SALT) | U1
        if _popcount(g ^ (g >> U1)) < 24:
            g ^= ALT
        origins[i] = o
        gammas[i] = g
    return origins, gammas


@njit(cache=True)
def uniforms(origin, gamma, count):
    out = np.empty(count)
    s = origin
    for i in range(count):
        s += gamma
        out[i] = to_unit(s)
    return out


# ---------------------------------------------------------------------------
# step-level simulation
# ---------------------------------------------------------------------------

@njit(cache=True)
def walk_summary(eps, n, origin, gamma, x0, eta0):
    """Run ``n`` steps; return (x, eta, max_x, max_abs, last_zero, state).

    Loops excursion by excursion with a constant threshold inside each.
    """
    s = origin
    x = x0
    eta = eta0
    t = 0
    mx = x0
    mabs = abs(x0)
    last0 = 0 if x0 == 0 else -1
    while t < n:
        if x == 0:
            s += gamma
            x = 1 if to_unit(s) >= 0.5 else -1
            t += 1
            if x > mx:
                mx = x
            if mabs < 1:
                mabs = 1
            continue
        q = 0.5 * (1.0 - eps[eta - 1])
        sg = 1 if x > 0 else -1
        a = abs(x)
        top = a
        while a > 0 and t < n:
            s += gamma
            if to_unit(s) < q:
                a += 1
                if a > top:
                    top = a
            else:
                a -= 1
            t += 1
        x = sg * a
        if top > mabs:
            mabs = top
        if sg > 0 and top > mx:
            mx = top
        if a == 0:
            eta += 1
            last0 = t
    return x, eta, mx, mabs, last0, s


@njit(cache=True)
def walk_path(eps, n, origin, gamma, x0, eta0):
    """Plain step loop recording the whole trajectory; same uniforms as walk_summary."""
    xs = np.empty(n + 1, dtype=np.int64)
    etas = np.empty(n + 1, dtype=np.int64)
    s = origin
    x = x0
    eta = eta0
    xs[0] = x
    etas[0] = eta
    for t in range(1, n + 1):
        s += gamma
        u = to_unit(s)
        if x == 0:
            x = 1 if u >= 0.5 else -1
        else:
            away = u < 0.5 * (1.0 - eps[eta - 1])
            if (x > 0) == away:
                x += 1
            else:
                x -= 1
            if x == 0:
                eta += 1
        xs[t] = x
        etas[t] = eta
    return xs, etas, s


@njit(cache=True)
def excursions(eps, count, budget, origin, gamma, eta0):
    """Simulate whole excursions from 0.

    Stops after ``count`` excursions (count > 0) or when the clock reaches
    ``budget``; in the latter case the last record may be incomplete.
    Returns sign, tau, max_abs, end_time, complete (as arrays) and the state.
    """
    cap = count if count > 0 else budget // 2 + 1
    sign = np.empty(cap, dtype=np.int64)
    tau = np.empty(cap, dtype=np.int64)
    mabs = np.empty(cap, dtype=np.int64)
    end = np.empty(cap, dtype=np.int64)
    done = np.empty(cap, dtype=np.bool_)
    s = origin
    t = 0
    k = 0
    while k < cap:
        if count <= 0 and t >= budget:
            break
        q = 0.5 * (1.0 - eps[eta0 + k - 1])
        s += gamma
        sg = 1 if to_unit(s) >= 0.5 else -1
        a = 1
        top = 1
        d = 1
        t += 1
        while a > 0:
            if count <= 0 and t >= budget:
                break
            s += gamma
            if to_unit(s) < q:
                a += 1
                if a > top:
                    top = a
            else:
                a -= 1
            d += 1
            t += 1
        sign[k] = sg
        tau[k] = d
        mabs[k] = top
        end[k] = t
        done[k] = a == 0
        k += 1
    return sign[:k], tau[:k], mabs[:k], end[:k], done[:k], s


@njit(cache=True)
def coupled(eps1, eps2, x1, x2, n, origin, gamma, keep):
    """Two walks driven by one uniform stream.

    Returns (paths or empty arrays, index of first violation of |Y1| <= |Y2|
    or -1).
    """
    m = n + 1 if keep else 0
    p1 = np.empty(m, dtype=np.int64)
    p2 = np.empty(m, dtype=np.int64)
    y1 = x1
    y2 = x2
    e1 = 1
    e2 = 1
    bad = -1
    if abs(y1) > abs(y2):
        bad = 0
    if keep:
        p1[0] = y1
        p2[0] = y2
    s = origin
    for t in range(1, n + 1):
        s += gamma
        u = to_unit(s)
        if y1 == 0:
            y1 = 1 if u >= 0.5 else -1
        else:
            away = u < 0.5 * (1.0 - eps1[e1 - 1])
            y1 += 1 if (y1 > 0) == away else -1
            if y1 == 0:
                e1 += 1
        if y2 == 0:
            y2 = 1 if u >= 0.5 else -1
        else:
            away = u < 0.5 * (1.0 - eps2[e2 - 1])
            y2 += 1 if (y2 > 0) == away else -1
            if y2 == 0:
                e2 += 1
        if keep:
            p1[t] = y1
            p2[t] = y2
        if bad < 0 and abs(y1) > abs(y2):
            bad = t
    return p1, p2, bad


@njit(cache=True, parallel=True)
def summary_batch(eps, n, origins, gammas):
    r = origins.shape[0]
    out = np.empty((r, 5), dtype=np.int64)
    for i in prange(r):
        x, eta, mx, mabs, last0, _ = walk_summary(eps, n, origins[i], gammas[i], 0, 1)
        out[i, 0] = x
        out[i, 1] = eta
        out[i, 2] = mx
        out[i, 3] = mabs
        out[i, 4] = last0
    return out


@njit(cache=True, parallel=True)
def excursion_tau_batch(eps, count, origins, gammas):
    """Step-level excursion durations, shape (replicates, count)."""
    r = origins.shape[0]
    out = np.empty((r, count), dtype=np.int64)
    for i in prange(r):
        _, tau, _, _, _, _ = excursions(eps, count, 0, origins[i], gammas[i], 1)
        out[i, :] = tau
    return out


# ---------------------------------------------------------------------------
# direct sampling of excursion durations
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _log_s(u):
    # asymptotic expansion of log(C(2u,u)/4**u), error O(u**-5)
    v = 1.0 / u
    corr = v * (-1.0 / 8 + v * (1.0 / 128 + v * (5.0 / 1024 - v * 21.0 / 32768)))
    return -0.5 * math.log(math.pi * u) + math.log1p(corr)


@njit(cache=True)
def srw_half_length(v):
    """``max{u >= 0 : s_u >= v}`` for ``v`` in (0, 1]."""
    if v > S_TABLE[1]:
        return 0
    est = 1.0 / (math.pi * v * v) - 0.25
    if v >= S_TABLE[S_TABLE_SIZE]:
        # s_u ~ (pi (u + 1/4))**-1/2, so the guess is off by at most a step or two
        u = min(max(int(est), 1), S_TABLE_SIZE)
        while S_TABLE[u] < v:
            u -= 1
        while u < S_TABLE_SIZE and S_TABLE[u + 1] >= v:
            u += 1
        return u
    if est > 1e18:
        return HUGE_U
    u = int(est)
    if est > 1e12:
        # adjacent s_u differ below double resolution here
        return u
    if u < S_TABLE_SIZE:
        u = S_TABLE_SIZE
    lv = math.log(v)
    while u > S_TABLE_SIZE and _log_s(u) < lv:
        u -= 1
    while _log_s(u + 1) >= lv:
        u += 1
    return u


@njit(cache=True)
def draw_tau(delta, logacc, s, gamma):
    """One excursion duration under constant drift ``delta``.

    Proposal: simple-walk duration ``2u + 2`` by inversion; accept with
    probability ``(1 - delta**2)**u``.  Returns (tau, state); tau equals
    CENSORED when the proposal exceeds about 2**61.
    """
    while True:
        s += gamma
        v = 1.0 - to_unit(s)
        u = srw_half_length(v)
        if u == 0:
            return 2, s
        s += gamma
        w = to_unit(s)
        x = u * logacc
        # squeeze 1 + x <= exp(x) <= 1 + x + x^2/2 (x <= 0) before calling exp
        if w < 1.0 + x or (w < 1.0 + x + 0.5 * x * x and w < math.exp(x)):
            if u >= HUGE_U:
                return CENSORED, s
            return 2 * u + 2, s


@njit(cache=True)
def _log_accept(eps):
    out = np.empty(eps.shape[0])
    for i in range(eps.shape[0]):
        e = eps[i]
        out[i] = math.log1p(-e * e) if e < 1.0 else -np.inf
    return out


@njit(cache=True)
def tau_sample(delta, count, origin, gamma):
    la = math.log1p(-delta * delta) if delta < 1.0 else -np.inf
    out = np.empty(count, dtype=np.int64)
    s = origin
    for i in range(count):
        out[i], s = draw_tau(delta, la, s, gamma)
    return out


@njit(cache=True, parallel=True)
def returns_batch(eps, horizon, origins, gammas):
    """Renewal clock up to ``horizon`` per replicate.

    Columns: number of returns T_k <= horizon, last such T_k (0 if none),
    indicator T_k == horizon for some k.
    """
    la = _log_accept(eps)
    r = origins.shape[0]
    out = np.empty((r, 3), dtype=np.int64)
    for i in prange(r):
        s = origins[i]
        g = gammas[i]
        t = 0
        k = 0
        while True:
            tau, s = draw_tau(eps[k], la[k], s, g)
            if t + tau > horizon:
                break
            t += tau
            k += 1
        out[i, 0] = k
        out[i, 1] = t
        out[i, 2] = 1 if t == horizon else 0
    return out


@njit(cache=True, parallel=True)
def T_batch(eps, count, origins, gammas):
    """T_count = tau_1 + ... + tau_count per replicate (saturating at CENSORED)."""
    la = _log_accept(eps)
    r = origins.shape[0]
    out = np.empty(r, dtype=np.int64)
    for i in prange(r):
        s = origins[i]
        g = gammas[i]
        t = 0
        for k in range(count):
            tau, s = draw_tau(eps[k], la[k], s, g)
            t += tau
            if t >= CENSORED:
                t = CENSORED
                break
        out[i] = t
    return out


# ---------------------------------------------------------------------------
# exact dynamic programming
# ---------------------------------------------------------------------------

@njit(cache=True)
def joint_forward(eps, n):
    """Exact law of (X_n, eta_n) from (0, 1).

    Returns a dense array P[x + n, eta - 1] of shape (2n+1, n//2 + 1).
    """
    w = 2 * n + 1
    h = n // 2 + 2
    cur = np.zeros((w, h))
    nxt = np.zeros((w, h))
    cur[n, 0] = 1.0
    for t in range(n):
        nxt[:, :] = 0.0
        lo = n - t
        hi = n + t
        for i in range(lo, hi + 1, 2):
            x = i - n
            for m in range(min(h - 1, t // 2 + 1)):
                p = cur[i, m]
                if p == 0.0:
                    continue
                if x == 0:
                    nxt[i + 1, m] += 0.5 * p
                    nxt[i - 1, m] += 0.5 * p
                else:
                    e = eps[m]
                    pa = 0.5 * (1.0 - e) * p
                    pt = 0.5 * (1.0 + e) * p
                    step = 1 if x > 0 else -1
                    nxt[i + step, m] += pa
                    if x - step == 0:
                        nxt[i - step, m + 1] += pt
                    else:
                        nxt[i - step, m] += pt
        cur, nxt = nxt, cur
    return cur[:, : h - 1]


@njit(cache=True)
def zero_prob_curve(eps, n):
    """P(X_t = 0) for t = 0..n from (0, 1), on the folded chain (|X|, eta)."""
    h = n // 2 + 2
    cur = np.zeros((n + 2, h))
    nxt = np.zeros((n + 2, h))
    out = np.zeros(n + 1)
    cur[0, 0] = 1.0
    out[0] = 1.0
    for t in range(n):
        nxt[: t + 2, : t // 2 + 2] = 0.0
        for a in range(t + 1):
            for m in range(min(h - 1, t // 2 + 1)):
                p = cur[a, m]
                if p == 0.0:
                    continue
                if a == 0:
                    nxt[1, m] += p
                else:
                    e = eps[m]
                    nxt[a + 1, m] += 0.5 * (1.0 - e) * p
                    if a == 1:
                        nxt[0, m + 1] += 0.5 * (1.0 + e) * p
                    else:
                        nxt[a - 1, m] += 0.5 * (1.0 + e) * p
        cur, nxt = nxt, cur
        s = 0.0
        for m in range(h):
            s += cur[0, m]
        out[t + 1] = s
    return out


@njit(cache=True)
def first_passage(delta, k):
    """P(tau = 2j), j = 1..k, for constant drift; forward DP on the excursion.

    Returns (pmf over j = 1..k, mass still alive after 2k steps).
    """
    pa = 0.5 * (1.0 - delta)
    pt = 0.5 * (1.0 + delta)
    # after the first step the walk sits at |x| = 1
    cur = np.zeros(2 * k + 2)
    nxt = np.zeros(2 * k + 2)
    cur[1] = 1.0
    out = np.zeros(k)
    for t in range(1, 2 * k):
        top = t
        nxt[: top + 2] = 0.0
        hit = 0.0
        for a in range(1, top + 1):
            p = cur[a]
            if p == 0.0:
                continue
            if a == 1:
                hit += pt * p
            else:
                nxt[a - 1] += pt * p
            nxt[a + 1] += pa * p
        if t % 2 == 1:
            out[(t + 1) // 2 - 1] = hit
        cur, nxt = nxt, cur
    alive = 0.0
    for a in range(2 * k + 2):
        alive += cur[a]
    return out, alive


@njit(cache=True, parallel=True)
def tau_matrix(eps, count, origins, gammas):
    """Directly sampled durations, shape (replicates, count)."""
    la = _log_accept(eps)
    r = origins.shape[0]
    out = np.empty((r, count), dtype=np.int64)
    for i in prange(r):
        s = origins[i]
        for k in range(count):
            out[i, k], s = draw_tau(eps[k], la[k], s, gammas[i])
    return out


@njit(cache=True)
def lil_sup(eps, n, n0, origin, gamma):
    """``max_{n0 <= t <= n} X_t / sqrt(2 t log log t)`` along one path."""
    s = origin
    x = 0
    eta = 1
    best = -np.inf
    for t in range(1, n + 1):
        s += gamma
        u = to_unit(s)
        if x == 0:
            x = 1 if u >= 0.5 else -1
        else:
            away = u < 0.5 * (1.0 - eps[eta - 1])
            x += 1 if (x > 0) == away else -1
            if x == 0:
                eta += 1
        if t >= n0 and x > 0:
            v = x / math.sqrt(2.0 * t * math.log(math.log(t)))
            if v > best:
                best = v
    return best
