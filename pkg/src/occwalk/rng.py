"""Counter-based random streams for reproducible, parallel replication.

Every replicate owns an independent stream derived from ``(base_seed,
replicate_index)``.  Draw ``i`` of a stream is a pure function of the stream
key and ``i``::

    out_i = mix64(origin + (i + 1) * gamma)

where ``mix64`` is the SplitMix64 finaliser and
``(origin, gamma)`` are derived from the seed pair by further mixing.  Distinct
replicates get distinct odd increments ``gamma``, so their streams are not
shifted copies of one another.  Only 64-bit integer arithmetic is involved,
so streams are bit-identical across platforms, and any replicate can be
regenerated without touching the others.

Uniforms are ``(out >> 11) * 2**-53`` in ``[0, 1)``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
_GAMMA_SALT = 0xD1B54A32D192ED03
INV_2_53 = 1.0 / 9007199254740992.0

DEFAULT_SEED = 20071127


def mix64(z: int) -> int:
    """SplitMix64 output function on a Python int (reference implementation)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def _mix_gamma(z: int) -> int:
    # same guard as java.util.SplittableRandom: avoid increments with few bit flips
    z = mix64(z) | 1
    if bin(z ^ (z >> 1)).count("1") < 24:
        z ^= 0xAAAAAAAAAAAAAAAA
    return z


def stream_key(base_seed: int, replicate: int) -> tuple[int, int]:
    """Return ``(origin, gamma)`` for the stream of one replicate."""
    if replicate < 0:
        raise ValueError("replicate index must be non-negative")
    head = mix64((base_seed & MASK64) + GOLDEN)
    origin = mix64((head + replicate) & MASK64)
    gamma = _mix_gamma(origin ^ _GAMMA_SALT)
    return origin, gamma


def stream_keys(base_seed: int, replicates) -> tuple[np.ndarray, np.ndarray]:
    """Vector of stream keys for a range (or list) of replicate indices."""
    pairs = [stream_key(base_seed, int(r)) for r in replicates]
    origins = np.array([p[0] for p in pairs], dtype=np.uint64)
    gammas = np.array([p[1] for p in pairs], dtype=np.uint64)
    return origins, gammas


def resolve_seed(seed: int | None) -> int:
    """Explicit seed, else ``$OCCWALK_SEED``, else the package default."""
    if seed is not None:
        return int(seed)
    env = os.environ.get("OCCWALK_SEED")
    if env:
        return int(env, 0)
    return DEFAULT_SEED


@dataclass(frozen=True)
class RngContract:
    base_seed: int
    replicate_index: int = 0

    def stream(self) -> "CounterStream":
        return CounterStream(self.base_seed, self.replicate_index)


class CounterStream:
    """Sequential view on a counter-based stream.

    The state is just the draw counter; ``state`` / ``counter`` can be read
    back and handed to the compiled kernels, which advance the same sequence.
    """

    def __init__(self, base_seed: int, replicate: int = 0, counter: int = 0):
        self.base_seed = int(base_seed)
        self.replicate = int(replicate)
        self.origin, self.gamma = stream_key(self.base_seed, self.replicate)
        self.counter = int(counter)

    @property
    def state(self) -> int:
        """Additive state as used by the kernels: ``origin + counter * gamma``."""
        return (self.origin + self.counter * self.gamma) & MASK64

    def advance_to_state(self, state: int) -> None:
        """Set the counter from a kernel-returned additive state."""
        # gamma is odd, hence invertible modulo 2**64
        delta = (int(state) - self.origin) & MASK64
        self.counter = (delta * pow(self.gamma, -1, 1 << 64)) & MASK64

    def next_u64(self) -> int:
        self.counter += 1
        return mix64(self.origin + self.counter * self.gamma)

    def random(self) -> float:
        return (self.next_u64() >> 11) * INV_2_53

    def uniforms(self, size: int) -> np.ndarray:
        # vectorised; identical to ``size`` calls of random()
        idx = np.arange(self.counter + 1, self.counter + 1 + size, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.origin) + idx * np.uint64(self.gamma)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
            z = z ^ (z >> np.uint64(31))
        self.counter += size
        return (z >> np.uint64(11)).astype(np.float64) * INV_2_53
