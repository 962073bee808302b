"""Seeded splittable randomness, the indicator-sum tail bound, and sampling.

Streams are counter-based (Philox keyed by (seed, stream_id)) and stateless:
a stream always replays the same draws, and derived streams are independent,
so per-vertex randomness can be indexed by (stream, vertex) independently of
scheduling order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import Graph

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    """splitmix64 finalizer; bijective on 64-bit ints."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngStream:
    """Stateless random stream; equal (seed, stream_id) means equal draws."""

    seed: int
    stream_id: int = 0

    def derive(self, k: int) -> "RngStream":
        child = _mix64((self.stream_id + _GAMMA) ^ _mix64(k + _GAMMA))
        return RngStream(self.seed, child)

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def uniform(self) -> float:
        return float(self.generator().random())


@dataclass(frozen=True)
class TailBound:
    """Two-sided deviation bound 2*exp(-mu^2 * expectation / 3)."""

    mu: float
    expectation: float
    bound: float


def chernoff_bound(mu: float, expectation: float) -> TailBound:
    """Tail bound for a sum of independent indicators, valid for 0 <= mu <= 3/2."""
    if not 0 <= mu <= 1.5:
        raise ValueError("Chernoff form invalid: mu must lie in [0, 3/2]")
    if expectation < 0:
        raise ValueError("Chernoff form invalid: expectation must be nonnegative")
    return TailBound(mu, expectation, 2.0 * math.exp(-(mu**2) * expectation / 3.0))


def bernoulli_subset(s, p: float, rng: RngStream) -> np.ndarray:
    """Keep each element independently with probability p; output sorted."""
    if not 0 <= p <= 1:
        raise ValueError("probability must lie in [0, 1]")
    arr = np.asarray(s, dtype=np.int64)
    if arr.size == 0:
        return arr.copy()
    keep = rng.generator().random(arr.size) < p
    return np.sort(arr[keep])


@dataclass(frozen=True)
class BalancedBipartition:
    """Equal halves of a vertex set plus per-vertex cross degrees."""

    a: np.ndarray
    b: np.ndarray
    deg_a: np.ndarray  # deg(v, A) indexed by vertex id
    deg_b: np.ndarray
    dropped: int | None  # vertex removed to make n even, if any
    moved: int  # vertices moved while rebalancing


def random_balanced_bipartition(g: Graph, rng: RngStream) -> BalancedBipartition:
    """Coin-flip split of V(G) into equal halves.

    Odd n drops the highest-indexed vertex first; the larger side then gives
    up its lowest-indexed surplus vertices, a deterministic tie-break.
    """
    if g.n <= 1:
        raise ValueError("degenerate graph: need at least 2 vertices")
    dropped = None
    verts = np.arange(g.n, dtype=np.int64)
    if g.n % 2 == 1:
        dropped = int(verts[-1])
        verts = verts[:-1]
    coins = rng.generator().random(verts.size) < 0.5
    side_a = verts[coins]
    side_b = verts[~coins]
    half = verts.size // 2
    moved = 0
    if side_a.size > half:
        surplus = side_a.size - half
        side_b = np.sort(np.concatenate([side_b, side_a[:surplus]]))
        side_a = side_a[surplus:]
        moved = surplus
    elif side_b.size > half:
        surplus = side_b.size - half
        side_a = np.sort(np.concatenate([side_a, side_b[:surplus]]))
        side_b = side_b[surplus:]
        moved = surplus
    from .graphs import make_mask, popcount

    mask_a = make_mask(side_a, g.n)
    mask_b = make_mask(side_b, g.n)
    deg_a = popcount(g._rows & mask_a[None, :]).sum(axis=1).astype(np.int64)
    deg_b = popcount(g._rows & mask_b[None, :]).sum(axis=1).astype(np.int64)
    return BalancedBipartition(np.sort(side_a), np.sort(side_b), deg_a, deg_b, dropped, moved)
