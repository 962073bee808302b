"""Bitset-backed simple graphs and bipartite pair views.

Adjacency is stored as rows of 64-bit words so that neighborhood
intersections and degree counts reduce to bitwise AND plus popcount.
All vertex identities are dense 0-based indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

WORD = 64


def _n_words(n: int) -> int:
    return (n + WORD - 1) // WORD


def popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a)


def make_mask(indices: np.ndarray, n: int) -> np.ndarray:
    """Word array of length ceil(n/64) with the given bits set."""
    mask = np.zeros(_n_words(n), dtype=np.uint64)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size:
        np.bitwise_or.at(mask, idx >> 6, np.uint64(1) << (idx & 63).astype(np.uint64))
    return mask


def mask_to_indices(mask: np.ndarray, n: int) -> np.ndarray:
    bits = np.unpackbits(mask.view(np.uint8), bitorder="little")[:n]
    return np.flatnonzero(bits).astype(np.int64)


def pack_bool_rows(rows: np.ndarray) -> np.ndarray:
    """Pack a boolean matrix into rows of uint64 words (little bit order)."""
    k, m = rows.shape
    packed8 = np.packbits(rows, axis=1, bitorder="little")
    pad = (-packed8.shape[1]) % 8
    if pad:
        packed8 = np.pad(packed8, ((0, 0), (0, pad)))
    return np.ascontiguousarray(packed8).view(np.uint64)


class Graph:
    """Immutable simple undirected graph with bitset adjacency rows."""

    __slots__ = ("n", "edge_count", "_rows")

    def __init__(self, n: int, rows: np.ndarray, edge_count: int):
        self.n = n
        self._rows = rows
        self.edge_count = edge_count
        self._rows.setflags(write=False)

    def row(self, v: int) -> np.ndarray:
        return self._rows[v]

    def rows(self, vertices: np.ndarray) -> np.ndarray:
        return self._rows[np.asarray(vertices, dtype=np.int64)]

    def has_edge(self, u: int, v: int) -> bool:
        return bool((self._rows[u, v >> 6] >> np.uint64(v & 63)) & np.uint64(1))

    def degree(self, v: int) -> int:
        return int(popcount(self._rows[v]).sum())

    def degrees(self) -> np.ndarray:
        return popcount(self._rows).sum(axis=1).astype(np.int64)

    def degree_in(self, v: int, mask: np.ndarray) -> int:
        """deg(v, S) for S given as a word mask."""
        return int(popcount(self._rows[v] & mask).sum())

    def neighbors(self, v: int) -> np.ndarray:
        return mask_to_indices(self._rows[v], self.n)

    def bool_adjacency(self, rows_idx: np.ndarray, cols_idx: np.ndarray) -> np.ndarray:
        """Boolean adjacency submatrix rows_idx x cols_idx."""
        sub = self._rows[np.asarray(rows_idx, dtype=np.int64)]
        bits = np.unpackbits(sub.view(np.uint8), axis=1, bitorder="little")[:, : self.n]
        return bits[:, np.asarray(cols_idx, dtype=np.int64)].astype(bool)

    def edge_array(self) -> np.ndarray:
        """All edges as a (m, 2) array with u < v."""
        us, vs = [], []
        for u in range(self.n):
            nb = self.neighbors(u)
            nb = nb[nb > u]
            us.append(np.full(nb.shape, u, dtype=np.int64))
            vs.append(nb)
        if not us:
            return np.zeros((0, 2), dtype=np.int64)
        return np.stack([np.concatenate(us), np.concatenate(vs)], axis=1)


def build_graph(n: int, edges) -> Graph:
    """Build a deduplicated simple graph from an iterable of index pairs.

    Rejects self-loops and out-of-range indices, naming the offending entry.
    """
    if n < 0:
        raise ValueError("vertex count must be nonnegative")
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("edges must be pairs of vertex indices")
    u, v = arr[:, 0], arr[:, 1]
    loops = np.flatnonzero(u == v)
    if loops.size:
        raise ValueError(f"self-loop at {int(u[loops[0]])} (edge #{int(loops[0])})")
    bad = np.flatnonzero((u < 0) | (u >= n) | (v < 0) | (v >= n))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"vertex index out of range in edge #{i}: ({int(u[i])}, {int(v[i])})")
    rows = np.zeros((n, _n_words(n)), dtype=np.uint64)
    flat = rows.reshape(-1)
    for a, b in ((u, v), (v, u)):
        np.bitwise_or.at(
            flat,
            a * _n_words(n) + (b >> 6),
            np.uint64(1) << (b & 63).astype(np.uint64),
        )
    m = int(popcount(rows).sum()) // 2
    return Graph(n, rows, m)


def graph_from_rows(n: int, rows: np.ndarray) -> Graph:
    m = int(popcount(rows).sum()) // 2
    return Graph(n, rows, m)


def density(obj) -> float:
    """Density of a graph (e / C(n,2)) or of a bipartite pair (e / |A||B|)."""
    if isinstance(obj, Graph):
        if obj.n < 2:
            return 0.0
        return obj.edge_count / math.comb(obj.n, 2)
    return obj.density()


class BipartitePair:
    """View of the cross edges between two disjoint vertex sets of a graph.

    Pairs share the underlying graph; building one is O(|A| + |B|) and
    derived quantities (edge count, degrees, packed rows) are cached lazily.
    """

    def __init__(self, graph: Graph, part_a, part_b):
        self.graph = graph
        self.part_a = np.unique(np.asarray(part_a, dtype=np.int64))
        self.part_b = np.unique(np.asarray(part_b, dtype=np.int64))
        for part in (self.part_a, self.part_b):
            if part.size and (part[0] < 0 or part[-1] >= graph.n):
                raise ValueError("part index out of range")
        if np.intersect1d(self.part_a, self.part_b).size:
            raise ValueError("parts must be disjoint")

    @property
    def size_a(self) -> int:
        return int(self.part_a.size)

    @property
    def size_b(self) -> int:
        return int(self.part_b.size)

    @cached_property
    def mask_a(self) -> np.ndarray:
        return make_mask(self.part_a, self.graph.n)

    @cached_property
    def mask_b(self) -> np.ndarray:
        return make_mask(self.part_b, self.graph.n)

    @cached_property
    def degrees_a(self) -> np.ndarray:
        """deg(x, B) for every x in A, in part_a order."""
        rows = self.graph.rows(self.part_a)
        return popcount(rows & self.mask_b[None, :]).sum(axis=1).astype(np.int64)

    @cached_property
    def degrees_b(self) -> np.ndarray:
        rows = self.graph.rows(self.part_b)
        return popcount(rows & self.mask_a[None, :]).sum(axis=1).astype(np.int64)

    @cached_property
    def edge_count(self) -> int:
        return int(self.degrees_a.sum())

    def density(self) -> float:
        if self.size_a == 0 or self.size_b == 0:
            raise ValueError("empty side")
        return self.edge_count / (self.size_a * self.size_b)

    def density_fraction(self) -> Fraction:
        if self.size_a == 0 or self.size_b == 0:
            raise ValueError("empty side")
        return Fraction(self.edge_count, self.size_a * self.size_b)

    @cached_property
    def packed_a(self) -> np.ndarray:
        """Rows over A with columns compacted to part_b bit positions."""
        return pack_bool_rows(self.graph.bool_adjacency(self.part_a, self.part_b))

    @cached_property
    def packed_b(self) -> np.ndarray:
        return pack_bool_rows(self.graph.bool_adjacency(self.part_b, self.part_a))

    def induced(self, sub_a, sub_b) -> "BipartitePair":
        """Sub-pair on X x Y; X must lie in A and Y in B."""
        sub_a = np.unique(np.asarray(sub_a, dtype=np.int64))
        sub_b = np.unique(np.asarray(sub_b, dtype=np.int64))
        for sub, part, name in ((sub_a, self.part_a, "A"), (sub_b, self.part_b, "B")):
            missing = np.setdiff1d(sub, part, assume_unique=False)
            if missing.size:
                raise ValueError(f"vertex {int(missing[0])} not in part {name}")
        return BipartitePair(self.graph, sub_a, sub_b)

    def swapped(self) -> "BipartitePair":
        return BipartitePair(self.graph, self.part_b, self.part_a)

    def edge_array(self) -> np.ndarray:
        """Cross edges as (m, 2) array of (a, b) host vertex ids."""
        out = []
        mb = self.mask_b
        for a in self.part_a:
            nb = mask_to_indices(self.graph.row(int(a)) & mb, self.graph.n)
            if nb.size:
                out.append(np.stack([np.full(nb.shape, a, dtype=np.int64), nb], axis=1))

        if not out:
            return np.zeros((0, 2), dtype=np.int64)
        return np.concatenate(out, axis=0)


def induced_pair(pair: BipartitePair, sub_a, sub_b) -> BipartitePair:
    return pair.induced(sub_a, sub_b)


@dataclass(frozen=True)
class DegreeProfile:
    min_deg: int
    max_deg: int
    r: int
    lam: float
    holds: bool
    a: float
    b: float
    holds_pm: bool


def degree_profile(g: Graph, r: int, lam: float) -> DegreeProfile:
    """Check whether every degree lies in [r(1-lambda), r].

    Also evaluates the equivalent (a +- b) form with a = r(1 - lambda/2)
    and b = r*lambda/2.
    """
    if r < 1:
        raise ValueError("reference degree must be >= 1")
    if not 0 <= lam <= 1:
        raise ValueError("slack fraction must lie in [0, 1]")
    degs = g.degrees() if g.n else np.zeros(0, dtype=np.int64)
    mn = int(degs.min()) if degs.size else 0
    mx = int(degs.max()) if degs.size else 0
    lo = Fraction(r) * (1 - Fraction(lam))
    holds = Fraction(mn) >= lo and mx <= r
    a = r * (1 - lam / 2)
    b = r * lam / 2
    af, bf = Fraction(r) * (1 - Fraction(lam) / 2), Fraction(r) * Fraction(lam) / 2
    holds_pm = Fraction(mn) >= af - bf and Fraction(mx) <= af + bf
    return DegreeProfile(mn, mx, r, lam, bool(holds), a, b, bool(holds_pm))


def parse_edge_list(text: str) -> Graph:
    """Parse the `n m` + `u v` edge-list format; `#` starts a comment."""
    header, rows = _parse_numeric_lines(text, 2)
    if header is None:
        raise ValueError("missing header line `n m`")
    n, m = header
    if len(rows) != m:
        raise ValueError(f"expected {m} edges, found {len(rows)}")
    return build_graph(n, rows)


def parse_bipartite(text: str) -> BipartitePair:
    """Parse the `nA nB m` + `a b` bipartite format into a pair.

    B-side indices are offset by nA in the underlying graph.
    """
    header, rows = _parse_numeric_lines(text, 3)
    if header is None:
        raise ValueError("missing header line `nA nB m`")
    na, nb, m = header
    if len(rows) != m:
        raise ValueError(f"expected {m} edges, found {len(rows)}")
    for i, (a, b) in enumerate(rows):
        if not (0 <= a < na and 0 <= b < nb):
            raise ValueError(f"bipartite index out of range in edge #{i}: ({a}, {b})")
    g = build_graph(na + nb, [(a, na + b) for a, b in rows])
    return BipartitePair(g, np.arange(na), na + np.arange(nb))


def _parse_numeric_lines(text: str, header_width: int):
    header = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            nums = [int(p) for p in parts]
        except ValueError as exc:
            raise ValueError(f"line {lineno}: not an integer: {raw!r}") from exc
        if header is None:
            if len(nums) != header_width:
                raise ValueError(f"line {lineno}: header must have {header_width} fields")
            header = tuple(nums)
        else:
            if len(nums) != 2:
                raise ValueError(f"line {lineno}: expected `u v`")
            rows.append((nums[0], nums[1]))
    return header, rows


def format_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.edge_count}"]
    for u, v in g.edge_array():
        lines.append(f"{u} {v}")
    return "\n".join(lines) + "\n"


def format_bipartite(pair: BipartitePair) -> str:
    na, nb = pair.size_a, pair.size_b
    pos_a = {int(v): i for i, v in enumerate(pair.part_a)}
    pos_b = {int(v): i for i, v in enumerate(pair.part_b)}
    lines = [f"{na} {nb} {pair.edge_count}"]
    for a, b in pair.edge_array():
        lines.append(f"{pos_a[int(a)]} {pos_b[int(b)]}")
    return "\n".join(lines) + "\n"
