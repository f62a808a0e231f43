"""Likelihood ratios against the simple walk and the equivalence/orthogonality verdict."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sequences import DriftSequence


def _log_factors(tau: np.ndarray, e: np.ndarray) -> np.ndarray:
    # (tau/2) log(1 - e^2) - log(1 - e), written to stay finite when e = 1, tau = 2
    half = tau / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.where(half - 1 == 0, 0.0, (half - 1) * np.log1p(-e))
    return half * np.log1p(e) + lo


def log_rn_derivative(taus, eps) -> float:
    """``log F_n`` for observed excursion durations ``tau_1..tau_n``.

    ``F_n`` is the density of the drifted law relative to the simple walk on
    the sigma-field generated by the first ``n`` durations.
    """
    tau = np.asarray(taus, dtype=np.float64)
    if tau.ndim != 1 or tau.size == 0:
        raise ValueError("need a non-empty list of durations")
    if np.any(tau < 2) or np.any(tau % 2):
        raise ValueError("durations must be even and >= 2")
    e = eps.values(tau.size) if isinstance(eps, DriftSequence) else np.asarray(eps, dtype=np.float64)
    return math.fsum(_log_factors(tau, e[: tau.size]))


def log_rn_batch(taus: np.ndarray, eps_values: np.ndarray) -> np.ndarray:
    """Row-wise ``log F_n`` for a (replicates, n) array of durations."""
    taus = np.asarray(taus, dtype=np.float64)
    return _log_factors(taus, eps_values[None, : taus.shape[1]]).sum(axis=1)


@dataclass
class LikelihoodLedger:
    eps: DriftSequence
    contributions: list = field(default_factory=list)

    def add(self, tau: int) -> float:
        k = len(self.contributions) + 1
        c = float(_log_factors(np.array([float(tau)]), np.array([self.eps(k)]))[0])
        self.contributions.append(c)
        return c

    @property
    def log_F(self) -> float:
        return math.fsum(self.contributions)


def log_hellinger_factors(e: np.ndarray) -> np.ndarray:
    """``log E sqrt(F_1)`` for single excursions with drifts ``e``.

    Equals ``log[(1 - sqrt(1 - sqrt(1 - e^2))) / sqrt(1 - e)]``, evaluated as
    ``log sqrt(1 + e) - log(1 + sqrt(1 - sqrt(1 - e^2)))``, which is stable
    for small ``e`` and finite at ``e = 1``.
    """
    e = np.asarray(e, dtype=np.float64)
    a = np.sqrt(1.0 - e * e)
    b = e / np.sqrt(1.0 + a)      # sqrt(1 - a) without cancellation
    return 0.5 * np.log1p(e) - np.log1p(b)


def hellinger_prefix(eps: DriftSequence, n: int) -> np.ndarray:
    """``log prod_{k<=m}`` of the Hellinger factors for ``m = 1..n``."""
    lf = log_hellinger_factors(eps.values(int(n)))
    if np.any(lf > 1e-15):
        raise AssertionError("Hellinger factor exceeds one")
    return np.cumsum(lf)


def hellinger_product(eps: DriftSequence, n: int) -> float:
    """``E sqrt(F_n) = prod_{k<=n} (1 - sqrt(1 - sqrt(1 - eps_k^2))) / sqrt(1 - eps_k)``."""
    return math.exp(math.fsum(log_hellinger_factors(eps.values(int(n)))))


@dataclass(frozen=True)
class EquivalenceConfig:
    n_max: int = 1 << 20
    summable_ratio: float = 0.8     # dyadic block ratio at or below: summable
    divergent_ratio: float = 0.95   # at or above: divergent
    plateau: float = 1e-3           # |change of log Hellinger| over the last block


@dataclass
class EquivalenceVerdict:
    verdict: str
    block_ratio: float
    block_test: str
    hellinger_log_change: float
    hellinger_test: str
    log_hellinger: float


def classify_equivalence(eps: DriftSequence, config: EquivalenceConfig = EquivalenceConfig()
                         ) -> EquivalenceVerdict:
    """Decide whether sum eps_k is finite (laws equivalent) or infinite (orthogonal).

    Two finite-horizon tests: the ratio of consecutive dyadic block sums
    ``B_j = sum_{2^j <= k < 2^{j+1}} eps_k`` (Cauchy condensation), and the
    drift of the Hellinger product over the last block.  Disagreement gives
    ``undecided``.
    """
    J = int(math.log2(config.n_max))
    e = eps.values(1 << (J + 1))
    blocks = np.array([math.fsum(e[(1 << j) - 1:(1 << (j + 1)) - 1]) for j in range(J + 1)])
    if blocks[-1] == 0.0:
        ratio = 0.0
    else:
        ratio = float(np.mean(blocks[-3:] / np.where(blocks[-4:-1] > 0, blocks[-4:-1], np.inf)))
        if not np.all(blocks[-4:-1] > 0):
            ratio = math.inf
    if ratio <= config.summable_ratio:
        block = "summable"
    elif ratio >= config.divergent_ratio:
        block = "divergent"
    else:
        block = "undecided"
    lf = log_hellinger_factors(e)
    change = abs(math.fsum(lf[(1 << J) - 1:(1 << (J + 1)) - 1]))
    hell = "plateau" if change < config.plateau else "decay"
    if block == "summable" and hell == "plateau":
        verdict = "equivalent"
    elif block == "divergent" and hell == "decay":
        verdict = "orthogonal"
    else:
        verdict = "undecided"
    return EquivalenceVerdict(verdict, ratio, block, change, hell, math.fsum(lf))
