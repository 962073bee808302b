"""Bipartite pattern graphs for packing: 2-coloring, 1-subdivision, doubling."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .graphs import Graph


@dataclass
class PatternGraph:
    """Bipartite pattern with parts X (the larger side) and Y.

    Vertices are arbitrary nonnegative ids; every edge joins X to Y.
    """

    part_x: tuple[int, ...]
    part_y: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    doubled_from_balanced: bool = False

    def __post_init__(self):
        xs, ys = set(self.part_x), set(self.part_y)
        if xs & ys:
            raise ValueError("pattern parts must be disjoint")
        if len(self.part_x) < len(self.part_y):
            raise ValueError("part X must be the larger part")
        for u, v in self.edges:
            if not ((u in xs and v in ys) or (u in ys and v in xs)):
                raise ValueError(f"pattern edge ({u}, {v}) does not cross the parts")
        if self.h > 1 and not self.edges:
            raise ValueError("pattern with h > 1 must have at least one edge")

    @property
    def h(self) -> int:
        return len(self.part_x) + len(self.part_y)

    @property
    def delta_h(self) -> int:
        return len(self.part_x) - len(self.part_y)

    @property
    def balanced(self) -> bool:
        return self.delta_h == 0

    @cached_property
    def neighbors(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in self.part_x + self.part_y}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {v: tuple(sorted(nb)) for v, nb in adj.items()}

    @property
    def max_degree(self) -> int:
        if not self.edges:
            return 0
        return max(len(nb) for nb in self.neighbors.values())

    def vertices(self) -> tuple[int, ...]:
        return self.part_x + self.part_y

    def side_of(self, v: int) -> str:
        return "X" if v in set(self.part_x) else "Y"


def pattern_from_parts(part_x, part_y, edges) -> PatternGraph:
    px, py = tuple(part_x), tuple(part_y)
    if len(px) < len(py):
        px, py = py, px
    return PatternGraph(px, py, tuple((int(u), int(v)) for u, v in edges))


def pattern_from_graph(g: Graph) -> PatternGraph:
    """2-color a bipartite graph into a pattern; X is the larger color class."""
    color = np.full(g.n, -1, dtype=np.int64)
    for start in range(g.n):
        if color[start] >= 0:
            continue
        color[start] = 0
        queue = [start]
        while queue:
            u = queue.pop()
            for w in g.neighbors(u):
                w = int(w)
                if color[w] < 0:
                    color[w] = 1 - color[u]
                    queue.append(w)
                elif color[w] == color[u]:
                    raise ValueError("pattern is not bipartite")
    side0 = tuple(int(v) for v in np.flatnonzero(color == 0))
    side1 = tuple(int(v) for v in np.flatnonzero(color == 1))
    if len(side1) > len(side0):
        side0, side1 = side1, side0
    return PatternGraph(side0, side1, tuple((int(u), int(v)) for u, v in g.edge_array()))


def one_subdivision(g: Graph) -> PatternGraph:
    """Replace every edge by a length-2 path.

    Branch vertices keep ids 0..n-1; subdivision vertices get ids n..n+m-1
    in edge order.  The result is bipartite (branch vs subdivision side) and
    unbalanced exactly when e(H) != v(H); X is the larger part, with ties
    going to the subdivision side.
    """
    degs = g.degrees()
    if g.n and g.edge_count and int(degs.min()) == 0:
        raise ValueError("pattern has an isolated vertex")
    if g.edge_count == 0:
        raise ValueError("pattern must have at least one edge")
    branch = tuple(range(g.n))
    sub = tuple(range(g.n, g.n + g.edge_count))
    new_edges = []
    for i, (u, v) in enumerate(g.edge_array()):
        mid = g.n + i
        new_edges.append((int(u), mid))
        new_edges.append((int(v), mid))
    if len(sub) >= len(branch):
        return PatternGraph(sub, branch, tuple(new_edges))
    return PatternGraph(branch, sub, tuple(new_edges))


def balance_double(pattern: PatternGraph) -> PatternGraph:
    """Balanced version of a pattern for the balanced packing loop.

    Balanced inputs come back unchanged but tagged as logically doubled;
    unbalanced ones become two disjoint copies, the second with its parts
    swapped, so both sides have |X| + |Y| vertices.
    """
    if pattern.balanced:
        return PatternGraph(
            pattern.part_x, pattern.part_y, pattern.edges, doubled_from_balanced=True
        )
    offset = max(pattern.vertices()) + 1
    part_x = pattern.part_x + tuple(v + offset for v in pattern.part_y)
    part_y = pattern.part_y + tuple(v + offset for v in pattern.part_x)
    edges = list(pattern.edges) + [(u + offset, v + offset) for u, v in pattern.edges]
    return PatternGraph(part_x, part_y, tuple(edges))


def path_pattern(length: int = 2) -> PatternGraph:
    """Path with `length` edges as a pattern (P_3 is length 2)."""
    if length < 1:
        raise ValueError("length must be >= 1")
    evens = tuple(range(0, length + 1, 2))
    odds = tuple(range(1, length + 1, 2))
    edges = tuple((i, i + 1) for i in range(length))
    px, py = (evens, odds) if len(evens) >= len(odds) else (odds, evens)
    return PatternGraph(px, py, edges)


def cycle_pattern(length: int) -> PatternGraph:
    """Even cycle C_length as a pattern."""
    if length < 4 or length % 2:
        raise ValueError("cycle pattern needs an even length >= 4")
    evens = tuple(range(0, length, 2))
    odds = tuple(range(1, length, 2))
    edges = tuple((i, (i + 1) % length) for i in range(length))
    return PatternGraph(evens, odds, edges)


def complete_bipartite_pattern(a: int, b: int) -> PatternGraph:
    if a < b:
        a, b = b, a
    part_x = tuple(range(a))
    part_y = tuple(range(a, a + b))
    edges = tuple((x, y) for x in part_x for y in part_y)
    return PatternGraph(part_x, part_y, edges)
