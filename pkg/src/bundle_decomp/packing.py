"""Bipartite pattern packing: dense-pair embedding, the balanced packing
pipeline, exceptional absorption, greedy chain embedding, cluster balancing,
and the unbalanced pipeline with a greedy embedder in place of the blow-up
step.

Every embedding returned anywhere is re-verified (injective, edge
preserving) and packings assert pairwise disjointness and exact uncovered
accounting; soundness never rests on the heuristics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .decompose import DecomposeConfig, decompose_edges
from .graphs import BipartitePair, Graph, make_mask, mask_to_indices, popcount
from .partition import assign_probabilities, roll_partition, VertexPartition
from .patterns import PatternGraph, balance_double
from .randomness import RngStream, bernoulli_subset, random_balanced_bipartition
from .regularity import BundleCertificate


@dataclass
class Embedding:
    """Injective, edge-preserving map from pattern vertices to host vertices."""

    pattern: PatternGraph
    mapping: dict[int, int]

    def images(self) -> list[int]:
        return list(self.mapping.values())

    def verify(self, g: Graph) -> bool:
        vals = list(self.mapping.values())
        if len(set(vals)) != len(vals):
            return False
        if set(self.mapping) != set(self.pattern.vertices()):
            return False
        return all(g.has_edge(self.mapping[u], self.mapping[v]) for u, v in self.pattern.edges)


def _require_verified(emb: Embedding, g: Graph) -> Embedding:
    if not emb.verify(g):
        raise AssertionError("produced embedding failed re-verification")
    return emb


@dataclass
class EmbedAttempt:
    embedding: Embedding | None
    best_partial: int
    guarantee: bool
    trials_used: int

    @property
    def ok(self) -> bool:
        return self.embedding is not None


def _greedy_place(
    g: Graph,
    pattern: PatternGraph,
    pool_x: np.ndarray,
    pool_y: np.ndarray,
    gen: np.random.Generator,
    bt_budget: int,
) -> dict[int, int] | None:
    """Backtracking greedy embedding; X-vertices draw from pool_x, Y from pool_y.

    Pattern vertices are placed in decreasing-degree order; host candidates
    are the vacant pool members adjacent to every already-placed neighbor.
    Vacancy is tracked as a bitmask so candidate sets are a few word ops.
    """
    order = sorted(pattern.vertices(), key=lambda v: (-len(pattern.neighbors[v]), v))
    xs = set(pattern.part_x)
    mask_x = make_mask(pool_x, g.n)
    mask_y = make_mask(pool_y, g.n)
    free = mask_x | mask_y  # cleared as hosts are consumed
    pool_of = {v: (mask_x if v in xs else mask_y) for v in order}
    mapping: dict[int, int] = {}
    cand_stack: list[np.ndarray] = []
    ptr_stack: list[int] = []
    depth = 0
    backtracks = 0
    one = np.uint64(1)
    while depth < len(order):
        v = order[depth]
        if depth == len(cand_stack):
            mask = pool_of[v] & free
            for w in pattern.neighbors[v]:
                if w in mapping:
                    mask = mask & g.row(mapping[w])
            cands = mask_to_indices(mask, g.n)
            if cands.size:
                cands = cands[gen.permutation(cands.size)]
            cand_stack.append(cands)
            ptr_stack.append(0)
        cands, ptr = cand_stack[depth], ptr_stack[depth]
        if ptr < cands.size:
            host = int(cands[ptr])
            ptr_stack[depth] += 1
            mapping[v] = host
            free[host >> 6] &= ~(one << np.uint64(host & 63))
            depth += 1
        else:
            cand_stack.pop()
            ptr_stack.pop()
            depth -= 1
            backtracks += 1
            if depth < 0 or backtracks > bt_budget:
                return None
            prev = mapping.pop(order[depth])
            free[prev >> 6] |= one << np.uint64(prev & 63)
    return mapping


def _mrv_place(
    g: Graph,
    pattern: PatternGraph,
    pool_x: np.ndarray,
    pool_y: np.ndarray,
    gen: np.random.Generator,
    node_budget: int = 2000,
) -> dict[int, int] | None:
    """Exhaustive-leaning placement choosing the most constrained vertex first.

    Used in tight endgames where the static order of _greedy_place digs dead
    ends; the node budget caps worst-case blowup.
    """
    xs = set(pattern.part_x)
    mask_x = make_mask(pool_x, g.n)
    mask_y = make_mask(pool_y, g.n)
    pool_of = {v: (mask_x if v in xs else mask_y) for v in pattern.vertices()}
    order = pattern.vertices()
    free = mask_x | mask_y
    mapping: dict[int, int] = {}
    nodes = 0
    one = np.uint64(1)

    def candidates(v: int) -> np.ndarray:
        mask = pool_of[v] & free
        for w in pattern.neighbors[v]:
            if w in mapping:
                mask = mask & g.row(mapping[w])
        return mask_to_indices(mask, g.n)

    def rec() -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            return False
        unplaced = [v for v in order if v not in mapping]
        if not unplaced:
            return True
        best_v, best_c = None, None
        for v in unplaced:
            c = candidates(v)
            if best_c is None or c.size < best_c.size:
                best_v, best_c = v, c
                if c.size == 0:
                    return False
        for host in best_c[gen.permutation(best_c.size)]:
            host = int(host)
            mapping[best_v] = host
            free[host >> 6] &= ~(one << np.uint64(host & 63))
            if rec():
                return True
            del mapping[best_v]
            free[host >> 6] |= one << np.uint64(host & 63)
            if nodes > node_budget:
                return False
        return False

    return mapping if rec() else None


def embed_in_dense(
    pair: BipartitePair,
    pattern: PatternGraph,
    d_floor: float,
    rng: RngStream,
    drc_trials: int = 32,
    bt_factor: int = 10,
) -> EmbedAttempt:
    """Find one copy of the pattern in a dense pair via common-neighborhood
    sampling.

    Each trial samples D vertices from one side, intersects their
    neighborhoods to get the pool for X, and finishes greedily with a
    backtracking budget.  Success is always re-verified.  The size threshold
    n >= 8 D d^(-D) h under which a copy is guaranteed to exist is evaluated
    and reported, never enforced.
    """
    if d_floor <= 0:
        raise ValueError("density floor must be positive")
    dd = pattern.max_degree
    n_host = pair.size_a + pair.size_b
    guarantee = n_host >= 8 * dd * d_floor ** (-dd) * pattern.h
    best_partial = 0
    bt_budget = bt_factor * pattern.h
    for trial in range(drc_trials):
        gen = rng.derive(trial).generator()
        if trial % 2 == 0:
            sample_side, pool_side = pair.part_b, pair.part_a
        else:
            sample_side, pool_side = pair.part_a, pair.part_b
        if sample_side.size < dd or pool_side.size < len(pattern.part_x):
            continue
        anchors = sample_side[gen.choice(sample_side.size, size=dd, replace=False)]
        mask = make_mask(pool_side, pair.graph.n)
        for a in anchors:
            mask &= pair.graph.row(int(a))
        pool_x = mask_to_indices(mask, pair.graph.n)
        if pool_x.size < len(pattern.part_x):
            best_partial = max(best_partial, 0)
            continue
        mapping = _greedy_place(pair.graph, pattern, pool_x, sample_side, gen, bt_budget)
        if mapping is not None:
            emb = _require_verified(Embedding(pattern, mapping), pair.graph)
            return EmbedAttempt(emb, pattern.h, guarantee, trial + 1)
        best_partial = max(best_partial, len(pattern.part_x))
    return EmbedAttempt(None, best_partial, guarantee, drc_trials)


@dataclass
class PackConfig:
    decomp: DecomposeConfig = field(default_factory=DecomposeConfig)
    drc_trials: int = 32
    bt_factor: int = 10
    vacancy_frac: float = 0.02  # effective per-bundle stop fraction cap
    repair: int = 8
    clamp_tol: float = 0.1
    strict: bool = False
    r_policy: str = "max-mass"  # or "paper"
    rho: float | None = None
    embed_fail_limit: int = 2  # consecutive embedding failures before a bundle stops


@dataclass
class PackingResult:
    embeddings: list[Embedding]
    uncovered: np.ndarray
    stats: dict

    @property
    def covered(self) -> int:
        return sum(e.pattern.h for e in self.embeddings)


def _finalize_packing(g: Graph, embeddings: list[Embedding], stats: dict) -> PackingResult:
    """Disjointness, verification and exact uncovered accounting."""
    used: set[int] = set()
    for emb in embeddings:
        if not emb.verify(g):
            raise AssertionError("embedding failed re-verification")
        imgs = set(emb.images())
        if used & imgs:
            raise AssertionError("embeddings are not vertex-disjoint")
        used |= imgs
    uncovered = np.array(sorted(set(range(g.n)) - used), dtype=np.int64)
    stats["covered_vertices"] = len(used)
    stats["uncovered_vertices"] = int(uncovered.size)
    stats["coverage"] = len(used) / g.n if g.n else 0.0
    return PackingResult(embeddings, uncovered, stats)


def _bundle_mass(dec, epsilon: float) -> np.ndarray:
    mass = np.zeros(dec.host.graph.n)
    for p in dec.pairs:
        pm = max(p.density - epsilon, 0.0) * p.m
        mass[p.side_a] += pm
        mass[p.side_b] += pm
    return mass


def _choose_r(dec, epsilon: float, config: PackConfig, rho_hat: float) -> float:
    if config.r_policy == "paper":
        d = dec.d
        return max(1.0, (1.0 + d**4 / 4.0) * rho_hat / 2.0)
    mass = _bundle_mass(dec, epsilon)
    return max(1.0, float(mass.max()))


def _strict_gate_balanced(g: Graph, pattern: PatternGraph, epsilon: float, d: float, rho: float):
    problems = []
    if not 0 < epsilon < 0.1:
        problems.append("need 0 < eps < 1/10")
    if not 20 * epsilon**0.2 <= d < 1.0 / 3.0:
        problems.append("need 20 eps^(1/5) <= d < 1/3")
    if rho < 3 * d ** (1.0 / 3.0) * g.n:
        problems.append("need rho >= 3 d^(1/3) n")
    if g.n <= 2 * math.exp(min(700.0, 150.0 * math.log(1.0 / d) / epsilon**2)):
        problems.append("need n > 2 exp(150 ln(1/d)/eps^2)")
    dd = pattern.max_degree
    h_bound = (
        epsilon**0.2
        / (16 * dd)
        * math.exp(max(-700.0, -(dd + 101.0 / epsilon**2) * math.log(1.0 / d)))
        * 3.0 ** (-dd)
        * g.n
    )
    if pattern.h > h_bound:
        problems.append(f"h too large: h = {pattern.h} > {h_bound:.3g}")
    return problems


def pack_balanced(
    g: Graph,
    pattern: PatternGraph,
    epsilon: float,
    d: float,
    rng: RngStream,
    config: PackConfig | None = None,
) -> PackingResult:
    """Almost-perfect packing of a (balanced or doubled) pattern.

    Pipeline: random balanced bipartition, edge decomposition of the cross
    pair, probability assignment and dice-roll partition, then per bundle a
    repeat-embed loop into the vacant sub-pair until the vacancy floor or an
    embedding failure stops it.  Uncovered = exceptional clusters + leftover
    vacancies + the odd-n drop.
    """
    cfg = config or PackConfig()
    stats: dict = {"mode": "balanced", "phases": []}
    rho_hat = cfg.rho if cfg.rho is not None else (2.0 * g.edge_count / g.n if g.n else 0.0)
    gate = _strict_gate_balanced(g, pattern, epsilon, d, rho_hat)
    if cfg.strict and gate:
        raise ValueError("; ".join(gate))
    stats["hypothesis_gaps"] = gate

    split = random_balanced_bipartition(g, rng.derive(1))
    host = BipartitePair(g, split.a, split.b)
    stats["odd_drop"] = [] if split.dropped is None else [split.dropped]
    stats["phases"].append({"phase": "bipartition", "sizes": [int(split.a.size), int(split.b.size)]})

    dec = decompose_edges(host, epsilon, d, rng.derive(2), cfg.decomp)
    stats["phases"].append(
        {
            "phase": "edge-decomposition",
            "k": dec.k,
            "pair_sizes": [p.m for p in dec.pairs],
            "h0_density": dec.h0_density(),
        }
    )
    doubled = balance_double(pattern)
    embeddings: list[Embedding] = []
    per_bundle = []
    if dec.k:
        r = _choose_r(dec, epsilon, cfg, rho_hat)
        pa = assign_probabilities(dec, r, epsilon, clamp_tol=cfg.clamp_tol)
        vp = roll_partition(pa, rng.derive(3))
        stats["r"] = r
        stats["assign_diagnostics"] = pa.diagnostics
        exceptional = np.concatenate([vp.a0, vp.b0])
        eps_prime = (64.0 * epsilon) ** 0.2
        eps_eff = min(eps_prime, cfg.vacancy_frac)
        stats["eps_prime"] = eps_prime
        stats["eps_effective"] = eps_eff
        for i in range(vp.k):
            cluster_a, cluster_b = vp.clusters_a[i], vp.clusters_b[i]
            m_i = int(cluster_a.size)
            vac_a = set(int(v) for v in cluster_a)
            vac_b = set(int(v) for v in cluster_b)
            stop = "vacancy"
            fails = 0
            n_embedded = 0
            while min(len(vac_a), len(vac_b)) > eps_eff * m_i:
                if min(len(vac_a), len(vac_b)) < max(len(doubled.part_x), 1):
                    stop = "too small"
                    break
                sub = BipartitePair(g, sorted(vac_a), sorted(vac_b))
                if sub.edge_count == 0:
                    stop = "no edges"
                    break
                att = embed_in_dense(
                    sub,
                    doubled,
                    sub.density(),
                    rng.derive(10_000 + i * 1000 + n_embedded + fails),
                    drc_trials=cfg.drc_trials,
                    bt_factor=cfg.bt_factor,
                )
                if not att.ok:
                    fails += 1
                    if fails >= cfg.embed_fail_limit:
                        stop = "embed failure"
                        break
                    continue
                embeddings.append(att.embedding)
                n_embedded += 1
                fails = 0
                for v in att.embedding.images():
                    vac_a.discard(v)
                    vac_b.discard(v)
            leftover = len(vac_a) + len(vac_b)
            if stop == "vacancy" and not leftover < 3 * eps_prime * m_i:
                raise AssertionError("vacancy-rule leftover exceeds 3 eps' m_i")
            per_bundle.append(
                {
                    "bundle": i + 1,
                    "m": m_i,
                    "embedded": n_embedded,
                    "leftover": leftover,
                    "stop": stop,
                }
            )
    else:
        vp = None
        exceptional = np.concatenate([host.part_a, host.part_b])
    stats["per_bundle"] = per_bundle
    stats["exceptional_count"] = int(exceptional.size)
    stats["phases"].append({"phase": "packing", "embeddings": len(embeddings)})
    n_cov_bound = 5.0 * d ** (1.0 / 3.0) * g.n
    stats["uncovered_bound"] = {"formula": "5*d^(1/3)*n", "value": n_cov_bound}
    result = _finalize_packing(g, embeddings, stats)
    blame = int(exceptional.size) + sum(b["leftover"] for b in per_bundle) + len(stats["odd_drop"])
    if int(result.uncovered.size) != blame:
        raise AssertionError(
            f"uncovered accounting mismatch: {result.uncovered.size} != {blame}"
        )
    return result


@dataclass
class AbsorbResult:
    assigned_a: list[list[int]]  # exceptional vertices joining each A_i
    assigned_b: list[list[int]]
    unassigned: list[int]
    cap: dict[int, float]


def absorb_exceptional(
    vp: VertexPartition,
    g: Graph,
    rho: float,
    d: float,
    host: BipartitePair,
) -> AbsorbResult:
    """Distribute exceptional vertices among eligible clusters, least loaded
    first.

    An A-side vertex is eligible for A_i when deg(v, B_i) >= rho |B_i| /
    (3 n); intake per cluster is capped at 12 d^(2/9) m.  Vertices with no
    capacity anywhere stay exceptional.
    """
    if rho < 1:
        raise ValueError("rho must be >= 1")
    k = vp.k
    assigned_a: list[list[int]] = [[] for _ in range(k)]
    assigned_b: list[list[int]] = [[] for _ in range(k)]
    unassigned: list[int] = []
    caps = {}
    n = g.n
    masks_a = [make_mask(vp.clusters_a[i], n) for i in range(k)]
    masks_b = [make_mask(vp.clusters_b[i], n) for i in range(k)]
    for source, masks, sizes, sink, own_sizes in (
        (vp.a0, masks_b, [vp.clusters_b[i].size for i in range(k)], assigned_a,
         [vp.clusters_a[i].size for i in range(k)]),
        (vp.b0, masks_a, [vp.clusters_a[i].size for i in range(k)], assigned_b,
         [vp.clusters_b[i].size for i in range(k)]),
    ):
        for v in source:
            v = int(v)
            best = None
            for i in range(k):
                if sizes[i] == 0 or own_sizes[i] == 0:
                    continue
                cap = 12.0 * d ** (2.0 / 9.0) * own_sizes[i]
                caps[i] = cap
                if len(sink[i]) + 1 > cap:
                    continue
                if g.degree_in(v, masks[i]) >= rho * sizes[i] / (3.0 * n):
                    load = len(sink[i])
                    if best is None or load < best[0]:
                        best = (load, i)
            if best is None:
                unassigned.append(v)
            else:
                sink[best[1]].append(v)
    return AbsorbResult(assigned_a, assigned_b, unassigned, caps)


@dataclass
class ChainLog:
    embedded: int
    aborted: bool
    abort_reason: str = ""


def greedy_chain_embed(
    g: Graph,
    targets,
    chain_pool,
    pattern: PatternGraph,
    delta: float,
    floor: float | None = None,
) -> tuple[list[Embedding], list[int], ChainLog]:
    """Embed pattern copies with X on target vertices and Y on a greedy chain.

    Chain vertices are chosen from the pool by maximum degree into the
    running common neighborhood inside the vacant targets (ties to the
    lowest index); the chain aborts if that neighborhood drops below the
    delta^i |S'| guarantee line.  Stops when fewer than `floor` targets
    remain (default h / delta^h).
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    h = pattern.h
    t = len(pattern.part_y)
    x_count = len(pattern.part_x)
    if floor is None:
        floor = h / delta**h
    vacant_t = [int(v) for v in sorted(targets)]
    vacant_pool = [int(v) for v in sorted(chain_pool)]
    embeddings: list[Embedding] = []
    aborted = False
    reason = ""
    while len(vacant_t) >= max(floor, x_count):
        if len(vacant_pool) < t:
            aborted = True
            reason = "chain pool exhausted"
            break
        s_prime = len(vacant_t)
        c_mask = make_mask(np.array(vacant_t, dtype=np.int64), g.n)
        chain: list[int] = []
        ok = True
        for i in range(1, t + 1):
            best_u, best_deg = -1, -1
            for u in vacant_pool:
                if u in chain:
                    continue
                deg = g.degree_in(u, c_mask)
                if deg > best_deg:
                    best_u, best_deg = u, deg
            new_mask = c_mask & g.row(best_u)
            new_size = int(popcount(new_mask).sum())
            if new_size < (delta**i) * s_prime:
                aborted = True
                reason = f"common neighborhood fell below delta^{i} |S'| at chain step {i}"
                ok = False
                break
            chain.append(best_u)
            c_mask = new_mask
        if not ok:
            break
        common = mask_to_indices(c_mask, g.n)
        if common.size < x_count:
            aborted = True
            reason = "common neighborhood smaller than |X|"
            break
        mapping = {pv: int(hv) for pv, hv in zip(pattern.part_y, chain)}
        mapping.update({pv: int(hv) for pv, hv in zip(pattern.part_x, common[:x_count])})
        emb = _require_verified(Embedding(pattern, mapping), g)
        embeddings.append(emb)
        images = set(emb.images())
        vacant_t = [v for v in vacant_t if v not in images]
        vacant_pool = [v for v in vacant_pool if v not in images]
    return embeddings, vacant_t, ChainLog(len(embeddings), aborted, reason)


@dataclass
class AssignmentPlan:
    items: list[tuple[PatternGraph, str]]  # (pattern copy, side hosting X: "S"|"T")
    delta: int
    balancing_copies: int
    doubled_copies: int
    tail_copies: int
    assigned_total: int
    leftover: int
    capped: bool
    arith_target_met: bool  # assigned > |S u T| - h


def balance_assignment(s_size: int, t_size: int, pattern: PatternGraph) -> AssignmentPlan:
    """Plan pattern copies that consume two uneven clusters almost exactly.

    floor(Delta / Delta_H) copies of the pattern go X-to-the-larger-side,
    doubled copies fill the bulk, and a small exact search tops up the tail;
    the plan is a vertex-count plan only, embedding happens elsewhere.
    """
    if pattern.delta_h == 0:
        raise ValueError("use balanced pipeline")
    x_sz, y_sz = len(pattern.part_x), len(pattern.part_y)
    h = pattern.h
    doubled = balance_double(pattern)
    delta = abs(s_size - t_size)
    big_is_s = s_size >= t_size
    c_raw = delta // pattern.delta_h
    big, small = (s_size, t_size) if big_is_s else (t_size, s_size)
    c = min(c_raw, big // x_sz, small // y_sz)
    capped = c < c_raw
    big -= c * x_sz
    small -= c * y_sz
    items: list[tuple[PatternGraph, str]] = [
        (pattern, "S" if big_is_s else "T") for _ in range(c)
    ]
    bulk = max(0, min(big, small) // h - 3)
    big -= bulk * h
    small -= bulk * h
    items.extend((doubled, "S") for _ in range(bulk))
    s_rem, t_rem = (big, small) if big_is_s else (small, big)

    best = None  # (assigned, -copies, a, b, c2)
    for c2 in range(min(s_rem, t_rem) // h + 1):
        s_c, t_c = s_rem - c2 * h, t_rem - c2 * h
        for a in range(s_c // x_sz + 1):
            s_left = s_c - a * x_sz
            t_left = t_c - a * y_sz
            if t_left < 0:
                break
            b = min(s_left // y_sz, t_left // x_sz)
            assigned = (a + b) * h + 2 * h * c2
            cand = (assigned, -(a + b + c2), a, b, c2)
            if best is None or cand > best:
                best = cand
    assigned_tail, _, a_opt, b_opt, c2_opt = best
    items.extend((pattern, "S") for _ in range(a_opt))
    items.extend((pattern, "T") for _ in range(b_opt))
    items.extend((doubled, "S") for _ in range(c2_opt))
    assigned_total = c * h + bulk * 2 * h + assigned_tail
    leftover = s_size + t_size - assigned_total
    return AssignmentPlan(
        items=items,
        delta=delta,
        balancing_copies=c,
        doubled_copies=bulk + c2_opt,
        tail_copies=a_opt + b_opt,
        assigned_total=assigned_total,
        leftover=leftover,
        capped=capped,
        arith_target_met=assigned_total > s_size + t_size - h,
    )


def embed_super_regular(
    pair: BipartitePair,
    plan: AssignmentPlan,
    rng: RngStream,
    config: PackConfig | None = None,
    certificate: BundleCertificate | None = None,
    assume: bool = False,
) -> tuple[list[Embedding], int, dict]:
    """Greedily embed the planned copies into a (super-)regular pair.

    Copies are embedded in random order; a dead-ended vertex may steal an
    occupied host from an earlier copy when that copy can relocate
    (swap-repair, bounded by config.repair per copy).  Returns all or a
    partial list plus a phase log; every success is re-verified.
    """
    if certificate is None and not assume:
        raise ValueError("super-regular certificate required (pass assume=True to waive)")
    cfg = config or PackConfig()
    g = pair.graph
    gen = rng.generator()
    # larger copies first (random within equal sizes): endgame gaps are then
    # filled by the smallest, easiest pieces
    shuffled = gen.permutation(len(plan.items))
    order = sorted((int(i) for i in shuffled), key=lambda i: -plan.items[i][0].h)
    side_s = set(int(v) for v in pair.part_a)
    vacant = {"S": set(side_s), "T": set(int(v) for v in pair.part_b)}
    placed: list[Embedding | None] = [None] * len(plan.items)
    owner: dict[int, tuple[int, int]] = {}  # host -> (copy index, pattern vertex)
    failures = 0
    log = {"copies": len(plan.items), "repairs": 0, "failed_copies": []}

    def pools(pat_x_side: str) -> tuple[np.ndarray, np.ndarray]:
        xs = vacant["S"] if pat_x_side == "S" else vacant["T"]
        ys = vacant["T"] if pat_x_side == "S" else vacant["S"]
        return (
            np.array(sorted(xs), dtype=np.int64),
            np.array(sorted(ys), dtype=np.int64),
        )

    def place_once(pat, pool_x, pool_y) -> dict[int, int] | None:
        mapping = _greedy_place(g, pat, pool_x, pool_y, gen, cfg.bt_factor * pat.h)
        if mapping is None:
            # most-constrained-first search recovers what static order missed
            mapping = _mrv_place(g, pat, pool_x, pool_y, gen)
        return mapping

    def try_place(idx: int) -> bool:
        pat, x_side = plan.items[idx]
        pool_x, pool_y = pools(x_side)
        mapping = place_once(pat, pool_x, pool_y)
        repairs_left = cfg.repair
        while mapping is None and repairs_left > 0:
            if not _relocate_one(g, vacant, side_s, placed, owner, gen):
                break
            repairs_left -= 1
            log["repairs"] += 1
            pool_x, pool_y = pools(x_side)
            mapping = place_once(pat, pool_x, pool_y)
        if mapping is None:
            return False
        emb = _require_verified(Embedding(pat, mapping), g)
        placed[idx] = emb
        for pv, hv in mapping.items():
            owner[hv] = (idx, pv)
            vacant["S"].discard(hv)
            vacant["T"].discard(hv)
        return True

    retry = [idx for idx in order if not try_place(idx)]
    still_failed = [idx for idx in retry if not try_place(idx)]
    failures = len(still_failed)
    log["failed_copies"] = still_failed
    embeddings = [e for e in placed if e is not None]
    return embeddings, failures, log


def _strict_gate_unbalanced(g: Graph, epsilon: float, d: float, rho: float):
    problems = []
    if not 0 < epsilon < 0.1:
        problems.append("need 0 < eps < 1/10")
    if not 10 * epsilon**0.2 <= d < 0.01:
        problems.append("need 10 eps^(1/5) <= d < 1/100")
    if rho < 10 * d ** (1.0 / 9.0) * g.n:
        problems.append("need rho >= 10 d^(1/9) n")
    if g.n <= math.exp(min(700.0, 150.0 * math.log(1.0 / d) / epsilon**2)):
        problems.append("need n > exp(150 ln(1/d)/eps^2)")
    return problems


def pack_unbalanced(
    g: Graph,
    pattern: PatternGraph,
    epsilon: float,
    d: float,
    rng: RngStream,
    config: PackConfig | None = None,
) -> PackingResult:
    """Packing pipeline for an unbalanced pattern with exceptional absorption.

    Pipeline: bipartition, edge decomposition, dice-roll partition, then the
    exceptional vertices are absorbed into eligible clusters; per cluster
    pair the absorbed vertices are covered by greedy chain embeddings into
    random half-clusters, the remaining vacancies are balanced by an
    assignment plan and filled by the greedy super-regular embedder.  The
    uncovered count reconciles exactly with per-pair leftovers plus the
    unassigned exceptional residue plus the odd-n drop.
    """
    if pattern.delta_h == 0:
        raise ValueError("use pack_balanced")
    cfg = config or PackConfig()
    stats: dict = {"mode": "unbalanced", "phases": []}
    rho_hat = cfg.rho if cfg.rho is not None else (2.0 * g.edge_count / g.n if g.n else 0.0)
    gate = _strict_gate_unbalanced(g, epsilon, d, rho_hat)
    if cfg.strict and gate:
        raise ValueError("; ".join(gate))
    stats["hypothesis_gaps"] = gate

    split = random_balanced_bipartition(g, rng.derive(1))
    host = BipartitePair(g, split.a, split.b)
    stats["odd_drop"] = [] if split.dropped is None else [split.dropped]
    dec = decompose_edges(host, epsilon, d, rng.derive(2), cfg.decomp)
    stats["phases"].append(
        {"phase": "edge-decomposition", "k": dec.k, "pair_sizes": [p.m for p in dec.pairs]}
    )
    embeddings: list[Embedding] = []
    per_pair = []
    unassigned: list[int] = []
    if dec.k:
        r = _choose_r(dec, epsilon, cfg, rho_hat)
        pa = assign_probabilities(dec, r, epsilon, clamp_tol=cfg.clamp_tol)
        vp = roll_partition(pa, rng.derive(3))
        stats["r"] = r
        absorb = absorb_exceptional(vp, g, max(1.0, rho_hat), d, host)
        unassigned = list(absorb.unassigned)
        stats["phases"].append(
            {
                "phase": "absorb",
                "assigned": sum(len(x) for x in absorb.assigned_a)
                + sum(len(x) for x in absorb.assigned_b),
                "unassigned": len(unassigned),
            }
        )
        delta_greedy = d ** (1.0 / 9.0)
        for i in range(vp.k):
            s_own = [int(v) for v in vp.clusters_a[i]]
            t_own = [int(v) for v in vp.clusters_b[i]]
            s0 = list(absorb.assigned_a[i])
            t0 = list(absorb.assigned_b[i])
            if not s_own or not t_own:
                leftover = len(s_own) + len(t_own) + len(s0) + len(t0)
                per_pair.append({"pair": i + 1, "leftover": leftover, "skipped": True})
                continue
            s1 = [int(v) for v in bernoulli_subset(np.array(s_own), 0.5, rng.derive(40 + i))]
            t1 = [int(v) for v in bernoulli_subset(np.array(t_own), 0.5, rng.derive(80 + i))]
            emb1, res_s0, log1 = greedy_chain_embed(g, s0, t1, pattern, delta_greedy)
            used1 = set(v for e in emb1 for v in e.images())
            emb2, res_t0, log2 = greedy_chain_embed(
                g, t0, [v for v in s1 if v not in used1], pattern, delta_greedy
            )
            used2 = used1 | set(v for e in emb2 for v in e.images())
            s2 = sorted(v for v in s_own + s0 if v not in used2)
            t2 = sorted(v for v in t_own + t0 if v not in used2)
            embeddings.extend(emb1)
            embeddings.extend(emb2)
            plan = balance_assignment(len(s2), len(t2), pattern)
            emb3, failed, log3 = embed_super_regular(
                BipartitePair(g, s2, t2),
                plan,
                rng.derive(120 + i),
                cfg,
                assume=True,
            )
            embeddings.extend(emb3)
            placed3 = sum(e.pattern.h for e in emb3)
            leftover = len(s2) + len(t2) - placed3
            per_pair.append(
                {
                    "pair": i + 1,
                    "s0": len(s0),
                    "t0": len(t0),
                    "chain_embedded": len(emb1) + len(emb2),
                    "chain_aborts": int(log1.aborted) + int(log2.aborted),
                    "plan_leftover": plan.leftover,
                    "failed_copies": failed,
                    "leftover": leftover,
                    "balanced_target_met": plan.arith_target_met,
                }
            )
    else:
        vp = None
        per_pair = []
        unassigned = [int(v) for v in np.concatenate([host.part_a, host.part_b])]
    stats["per_pair"] = per_pair
    stats["unassigned_exceptional"] = len(unassigned)
    k = dec.k
    c_bound_ln = math.log(8 * pattern.h / d) + (100.0 / epsilon**2) * math.log(1.0 / d)
    stats["uncovered_bound"] = {
        "formula": "8h/d * d^(-100/eps^2)",
        "ln_value": c_bound_ln,
        "achieved_k_times_h": k * pattern.h,
    }
    result = _finalize_packing(g, embeddings, stats)
    blame = (
        sum(p["leftover"] for p in per_pair)
        + len(unassigned)
        + len(stats["odd_drop"])
    )
    if int(result.uncovered.size) != blame:
        raise AssertionError(
            f"uncovered accounting mismatch: {result.uncovered.size} != {blame}"
        )
    return result


def _relocate_one(g, vacant, side_s, placed, owner, gen) -> bool:
    """Move one previously placed vertex to an alternative vacant host.

    Hosts most adjacent to the current vacancies are freed first: those are
    the ones whose release is most likely to complete a stuck copy.  The
    relocated vertex keeps its own copy valid by construction.
    """
    hosts = list(owner.keys())
    if not hosts:
        return False
    vac_all = make_mask(
        np.array(sorted(vacant["S"] | vacant["T"]), dtype=np.int64), g.n
    )
    scores = [g.degree_in(h, vac_all) for h in hosts]
    ranked = sorted(range(len(hosts)), key=lambda i: (-scores[i], hosts[i]))
    hosts = [hosts[i] for i in ranked]
    for host in hosts[:64]:
        copy_idx, pv = owner[host]
        emb = placed[copy_idx]
        if emb is None:
            continue
        pat = emb.pattern
        pool = vacant["S"] if host in side_s else vacant["T"]
        if not pool:
            continue
        alt_mask = make_mask(np.array(sorted(pool), dtype=np.int64), g.n)
        for w in pat.neighbors[pv]:
            alt_mask &= g.row(emb.mapping[w])
        alts = mask_to_indices(alt_mask, g.n)
        if alts.size == 0:
            continue
        new_host = int(alts[int(gen.integers(alts.size))])
        emb.mapping[pv] = new_host
        del owner[host]
        owner[new_host] = (copy_idx, pv)
        pool.discard(new_host)
        pool.add(host)
        return True
    return False
