"""Seeded test-instance generators: pairing-model regular graphs, random
bipartite pairs, degree-exact planted bundles, and planted decompositions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import BipartitePair, Graph, build_graph
from .randomness import RngStream


def random_regular_graph(n: int, r: int, rng: RngStream, max_restarts: int = 64) -> Graph:
    """Uniform-ish r-regular simple graph via the pairing model.

    Stubs are shuffled and paired; colliding stubs (self-loops, repeated
    edges) are recycled and re-shuffled, with a full restart when recycling
    stalls.  The result has every degree exactly r.
    """
    if n * r % 2:
        raise ValueError("infeasible degree sequence: n * r is odd")
    if not 0 <= r < n:
        raise ValueError("need 0 <= r < n")
    if r == 0:
        return build_graph(n, [])
    for restart in range(max_restarts):
        gen = rng.derive(restart).generator()
        edges: set[tuple[int, int]] = set()
        stubs = np.repeat(np.arange(n, dtype=np.int64), r)
        stalls = 0
        while stubs.size and stalls <= 200:
            gen.shuffle(stubs)
            lo = np.minimum(stubs[0::2], stubs[1::2])
            hi = np.maximum(stubs[0::2], stubs[1::2])
            recycle: list[int] = []
            progress = False
            for a, b in zip(lo, hi):
                a, b = int(a), int(b)
                if a == b or (a, b) in edges:
                    recycle.extend((a, b))
                else:
                    edges.add((a, b))
                    progress = True
            stubs = np.array(recycle, dtype=np.int64)
            stalls = 0 if progress else stalls + 1
        if stubs.size == 0:
            return build_graph(n, list(edges))
    raise RuntimeError("pairing model failed to produce a simple graph")


def random_near_regular_graph(n: int, rho: int, rng: RngStream) -> Graph:
    """Erdos-Renyi graph with edge probability rho/(n-1); degrees
    concentrate around rho."""
    if n < 2:
        raise ValueError("need n >= 2")
    gen = rng.generator()
    p = rho / (n - 1)
    iu = np.triu_indices(n, k=1)
    keep = gen.random(iu[0].size) < p
    edges = np.stack([iu[0][keep], iu[1][keep]], axis=1)
    return build_graph(n, edges)


def random_bipartite_pair(na: int, nb: int, p: float, rng: RngStream) -> BipartitePair:
    """Each of the na*nb cross edges present independently with probability p."""
    gen = rng.generator()
    mask = gen.random((na, nb)) < p
    ai, bi = np.nonzero(mask)
    g = build_graph(na + nb, np.stack([ai, na + bi], axis=1))
    return BipartitePair(g, np.arange(na), na + np.arange(nb))


def planted_bundle(m: int, d: float, rng: RngStream) -> BipartitePair:
    """Degree-exact balanced pair: every vertex has exactly round(d*m)
    cross neighbors.

    Built as a circulant with a random offset set, so both sides are
    regular and the pair behaves like a random biregular graph.
    """
    k = int(round(d * m))
    if not 0 < k <= m:
        raise ValueError("need 0 < round(d*m) <= m")
    gen = rng.generator()
    offsets = gen.choice(m, size=k, replace=False)
    a = np.repeat(np.arange(m, dtype=np.int64), k)
    b = (a + np.tile(offsets, m)) % m
    g = build_graph(2 * m, np.stack([a, m + b], axis=1))
    return BipartitePair(g, np.arange(m), m + np.arange(m))


@dataclass(frozen=True)
class PlantedDecomposition:
    pair: BipartitePair
    blocks_a: list[np.ndarray]
    blocks_b: list[np.ndarray]
    block_edges: list[np.ndarray]
    background_edges: np.ndarray
    block_density: float
    background_density: float


def planted_decomposition(
    n: int,
    blocks: int,
    block_density: float,
    background_density: float,
    rng: RngStream,
) -> PlantedDecomposition:
    """Host pair of side n holding `blocks` disjoint dense square blocks plus
    sparse background noise off the blocks.

    The true block structure is returned so pipelines can be tested against
    a known decomposition.
    """
    if n % blocks:
        raise ValueError("blocks must divide n")
    m = n // blocks
    gen = rng.generator()
    edge_chunks = []
    blocks_a, blocks_b, block_edges = [], [], []
    for i in range(blocks):
        a0 = i * m
        sub = gen.random((m, m)) < block_density
        ai, bi = np.nonzero(sub)
        e = np.stack([a0 + ai, n + a0 + bi], axis=1)
        edge_chunks.append(e)
        blocks_a.append(np.arange(a0, a0 + m, dtype=np.int64))
        blocks_b.append(np.arange(n + a0, n + a0 + m, dtype=np.int64))
        block_edges.append(e)
    bg = gen.random((n, n)) < background_density
    for i in range(blocks):
        a0 = i * m
        bg[a0 : a0 + m, a0 : a0 + m] = False
    ai, bi = np.nonzero(bg)
    background = np.stack([ai, n + bi], axis=1)
    edge_chunks.append(background)
    g = build_graph(2 * n, np.concatenate(edge_chunks))
    pair = BipartitePair(g, np.arange(n), n + np.arange(n))
    return PlantedDecomposition(
        pair,
        blocks_a,
        blocks_b,
        block_edges,
        background,
        block_density,
        background_density,
    )
