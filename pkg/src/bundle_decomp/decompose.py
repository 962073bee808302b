"""Edge decomposition of a balanced bipartite host into certified regular
pairs plus an exceptional residual, with the feasibility calculators for the
underlying bounds.

The construction itself is an engineered sample-extract-certify heuristic:
candidates are grown from a random pivot by codegree thresholding, cleaned by
a bundle-style degree trim, gated on density, and emitted only with a
regularity certificate.  Extracted edges leave the residual, so the output
is an exact edge partition by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .graphs import BipartitePair, Graph, graph_from_rows, make_mask, popcount
from .randomness import RngStream
from .regularity import (
    RegularityVerdict,
    assumed_verdict,
    codegree_certify,
    extract_bundle,
)


@dataclass(frozen=True)
class DecompositionParams:
    """Evaluated bound formulas and feasibility flags for given (eps, d, n)."""

    epsilon: float
    d: float
    n: int
    d_g: float
    m_min: float  # (1/2) d^(50/eps^2) n
    ln_m_min: float
    k_max: float  # 8 (d_g/d) d^(-100/eps^2)
    ln_k_max: float
    n_min_edge: float  # exp(50 ln(1/d) / eps^2)
    ln_n_min_edge: float
    n_min_vertex: float  # exp(150 ln(1/d) / eps^2)
    ln_n_min_vertex: float
    eps_floor: float  # (ln ln n / ln n)^(1/2)
    d_floor: float  # 10 (ln ln n / ln n)^(1/10)
    epszd_ok: bool
    feasible_edge: bool
    feasible_vertex: bool


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def params_and_feasibility(epsilon: float, d: float, n: int, d_g: float = 0.0) -> DecompositionParams:
    """Evaluate the decomposition bound formulas; purely advisory.

    All logarithms are natural.  Desk-scale inputs are expected to be
    infeasible; the flags exist so strict mode can gate and relaxed mode can
    report.
    """
    if epsilon <= 0 or d <= 0:
        raise ValueError("eps and d must be positive")
    if n < 3:
        raise ValueError("need n >= 3")
    e2 = epsilon * epsilon
    ln_d = math.log(d)
    ln_m_min = math.log(0.5) + (50.0 / e2) * ln_d + math.log(n)
    ln_n_min_edge = 50.0 * math.log(1.0 / d) / e2
    ln_n_min_vertex = 150.0 * math.log(1.0 / d) / e2
    if d_g > 0:
        ln_k_max = math.log(8.0 * d_g / d) + (100.0 / e2) * math.log(1.0 / d)
        k_max = _safe_exp(ln_k_max)
    else:
        ln_k_max = -math.inf
        k_max = 0.0
    lln = math.log(math.log(n))
    ratio = lln / math.log(n)
    eps_floor = math.sqrt(ratio) if ratio > 0 else 0.0
    d_floor = 10.0 * ratio ** 0.1 if ratio > 0 else 0.0
    return DecompositionParams(
        epsilon=epsilon,
        d=d,
        n=n,
        d_g=d_g,
        m_min=_safe_exp(ln_m_min),
        ln_m_min=ln_m_min,
        k_max=k_max,
        ln_k_max=ln_k_max,
        n_min_edge=_safe_exp(ln_n_min_edge),
        ln_n_min_edge=ln_n_min_edge,
        n_min_vertex=_safe_exp(ln_n_min_vertex),
        ln_n_min_vertex=ln_n_min_vertex,
        eps_floor=eps_floor,
        d_floor=d_floor,
        epszd_ok=epsilon >= eps_floor and d >= d_floor,
        feasible_edge=n > _safe_exp(ln_n_min_edge),
        feasible_vertex=n > _safe_exp(ln_n_min_vertex),
    )


@dataclass
class DecomposeConfig:
    m_floor: int = 64
    max_pairs: int = 64
    patience: int = 8
    grow_frac: float = 0.5  # codegree growth threshold as a fraction of d
    eta_noise_factor: float = 2.0  # degree-noise margin multiplier for eta
    assume_regular: bool = False  # skip certification, mark pairs assumed


@dataclass(frozen=True)
class DecompositionPair:
    index: int
    side_a: np.ndarray
    side_b: np.ndarray
    edges: np.ndarray  # (k, 2) host vertex ids, extraction-time residual edges
    density: float
    eta: float | None
    verdict: RegularityVerdict

    @property
    def m(self) -> int:
        return int(self.side_a.size)


@dataclass
class EdgeDecomposition:
    host: BipartitePair
    pairs: list[DecompositionPair]
    h0_edges: np.ndarray
    epsilon: float
    d: float
    params: DecompositionParams
    rounds: int = 0
    rejected_rounds: int = 0

    @property
    def k(self) -> int:
        return len(self.pairs)

    def h0_density(self) -> float:
        na, nb = self.host.size_a, self.host.size_b
        return self.h0_edges.shape[0] / (na * nb) if na and nb else 0.0

    def h0_degrees(self) -> np.ndarray:
        """deg(v, H0) indexed by host vertex id."""
        degs = np.zeros(self.host.graph.n, dtype=np.int64)
        if self.h0_edges.size:
            np.add.at(degs, self.h0_edges[:, 0], 1)
            np.add.at(degs, self.h0_edges[:, 1], 1)
        return degs


def _auto_eta(epsilon: float, part_size: int, dens: float, noise_factor: float) -> float:
    """Smallest workable certification eta at this candidate size.

    The codegree criterion needs |A| >= 2/eta, and random degree noise of
    order sqrt(d(1-d)/s) must fit inside the degree condition, so the
    requested eps^5/16 is raised to a size-aware floor when necessary.
    """
    noise = noise_factor * math.sqrt(max(dens * (1.0 - dens), 1e-9) / part_size)
    return max(epsilon**5 / 16.0, 2.0 / part_size, noise)


def _grow_candidate(
    res: BipartitePair,
    size: int,
    d: float,
    grow_frac: float,
    rng: RngStream,
    member_count: np.ndarray,
) -> tuple[np.ndarray, np.ndarray] | None:
    """Pivot-and-codegree candidate proposal on the residual pair.

    Trimming to the requested size prefers vertices that belong to fewer
    already-extracted pairs (then higher degree), which evens out the
    per-vertex bundle mass the downstream dice rolls depend on.
    """
    degs_a = res.degrees_a
    eligible = np.flatnonzero(degs_a >= max(1, int(d * size * 0.5)))
    if eligible.size == 0:
        return None
    pivot_pos = int(rng.generator().integers(eligible.size))
    pivot = int(res.part_a[eligible[pivot_pos]])
    g = res.graph
    y0_mask = g.row(pivot) & res.mask_b
    y0_size = int(popcount(y0_mask).sum())
    if y0_size == 0:
        return None
    thr = grow_frac * d
    rows_a = g.rows(res.part_a)
    deg_to_y0 = popcount(rows_a & y0_mask[None, :]).sum(axis=1)
    x_sel = res.part_a[deg_to_y0 >= max(1, math.ceil(thr * y0_size))]
    if x_sel.size == 0:
        return None
    x_mask = make_mask(x_sel, g.n)
    rows_b = g.rows(res.part_b)
    deg_to_x = popcount(rows_b & x_mask[None, :]).sum(axis=1)
    y_sel = res.part_b[deg_to_x >= max(1, math.ceil(thr * x_sel.size))]
    if y_sel.size == 0:
        return None
    y_mask = make_mask(y_sel, g.n)
    deg_to_y = popcount(rows_a & y_mask[None, :]).sum(axis=1)
    x_sel = res.part_a[deg_to_y >= max(1, math.ceil(thr * y_sel.size))]
    if x_sel.size < size or y_sel.size < size:
        return None
    x_fin = x_sel[np.lexsort((x_sel, member_count[x_sel]))[:size]]
    y_fin = y_sel[np.lexsort((y_sel, member_count[y_sel]))[:size]]
    return np.sort(x_fin), np.sort(y_fin)


def _size_ladder(n_half: int, m_floor: int) -> list[int]:
    sizes = []
    s = n_half
    while s >= m_floor:
        sizes.append(s)
        s //= 2
    if not sizes:
        sizes.append(n_half)
    return sizes


def decompose_edges(
    host: BipartitePair,
    epsilon: float,
    d: float,
    rng: RngStream,
    config: DecomposeConfig | None = None,
) -> EdgeDecomposition:
    """Greedy extraction of certified dense regular pairs from the host.

    Within each round the candidate ladder is walked from the largest size
    down; the first candidate that survives the degree cleanup, meets the
    density target (1 - eps/3) * max(d, residual density) and certifies wins
    the round.  Rounds without a winner count toward the patience budget.
    The remaining residual becomes the exceptional graph.
    """
    if host.size_a != host.size_b:
        raise ValueError("host pair must be balanced")
    if not 0 < d < 1 or not 0 < epsilon < 0.5:
        raise ValueError("need 0 < d < 1 and 0 < eps < 1/2")
    cfg = config or DecomposeConfig()
    n_part = host.size_a
    n = host.graph.n
    host_density = host.density()
    params = params_and_feasibility(epsilon, d, n_part, host_density)

    # When d > d_G the guarantee is vacuous and K = 0 with H_0 = E is legal;
    # the loop still runs so that dense planted regions are extracted anyway.
    res_rows = np.zeros((n, host.graph._rows.shape[1]), dtype=np.uint64)
    cross_a = host.graph.rows(host.part_a) & host.mask_b[None, :]
    cross_b = host.graph.rows(host.part_b) & host.mask_a[None, :]
    res_rows[host.part_a] = cross_a
    res_rows[host.part_b] = cross_b

    pairs: list[DecompositionPair] = []
    member_count = np.zeros(n, dtype=np.int64)
    fails = 0
    rounds = 0
    target_base = 1.0 - epsilon / 3.0
    ladder = _size_ladder(n_part // 2, cfg.m_floor)
    while len(pairs) < cfg.max_pairs and fails < cfg.patience:
        snapshot = graph_from_rows(n, res_rows.copy())
        res_pair = BipartitePair(snapshot, host.part_a, host.part_b)
        res_e = res_pair.edge_count
        if res_e == 0:
            break
        res_density = res_e / (n_part * n_part)
        target = target_base * max(d, res_density)
        found = None
        for attempt, s in enumerate(ladder):
            cand = _grow_candidate(
                res_pair, s, d, cfg.grow_frac, rng.derive(rounds * 1000 + attempt),
                member_count,
            )
            if cand is None:
                continue
            cand_pair = BipartitePair(snapshot, cand[0], cand[1])
            if cand_pair.edge_count == 0:
                continue
            cleaned, _ = extract_bundle(cand_pair, epsilon, cand_pair.density(), relaxed=True)
            sc = cleaned.size_a
            if sc < cfg.m_floor or cleaned.edge_count == 0:
                continue
            dens = cleaned.density()
            if dens < target:
                continue
            if cfg.assume_regular:
                verdict = assumed_verdict(cleaned, epsilon)
                eta = None
            else:
                eta = _auto_eta(epsilon, sc, dens, cfg.eta_noise_factor)
                if eta >= 1.0:
                    continue
                verdict = codegree_certify(cleaned, eta)
                if not verdict.certified:
                    continue
            found = (cleaned, verdict, eta)
            break
        if found is None:
            fails += 1
            rounds += 1
            continue
        cleaned, verdict, eta = found
        edges = cleaned.edge_array()
        pairs.append(
            DecompositionPair(
                index=len(pairs) + 1,
                side_a=cleaned.part_a.copy(),
                side_b=cleaned.part_b.copy(),
                edges=edges,
                density=cleaned.density(),
                eta=eta,
                verdict=verdict,
            )
        )
        not_b = ~make_mask(cleaned.part_b, n)
        not_a = ~make_mask(cleaned.part_a, n)
        res_rows[cleaned.part_a] &= not_b[None, :]
        res_rows[cleaned.part_b] &= not_a[None, :]
        member_count[cleaned.part_a] += 1
        member_count[cleaned.part_b] += 1
        fails = 0
        rounds += 1

    snapshot = graph_from_rows(n, res_rows.copy())
    h0_edges = BipartitePair(snapshot, host.part_a, host.part_b).edge_array()
    dec = EdgeDecomposition(
        host,
        pairs,
        h0_edges,
        epsilon,
        d,
        params,
        rounds=rounds,
        rejected_rounds=fails,
    )
    total = sum(p.edges.shape[0] for p in pairs) + h0_edges.shape[0]
    if total != host.edge_count:
        raise AssertionError(
            f"edge conservation broken: {total} != {host.edge_count}"
        )
    return dec


def _edge_keys(edges: np.ndarray, n: int) -> np.ndarray:
    if edges.size == 0:
        return np.zeros(0, dtype=np.int64)
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    return lo * np.int64(n) + hi


@dataclass
class DecompositionReport:
    ok: bool
    checks: dict
    failures: list[str]


def verify_edge_decomposition(
    host: BipartitePair,
    dec: EdgeDecomposition,
    epsilon: float,
    d: float,
    recheck_certificates: bool = True,
    brute_cap: int = 12,
) -> DecompositionReport:
    """Independently re-check a decomposition against its contract.

    Verifies the exact edge partition, per-pair balancedness and density
    target, the residual density target, and (optionally) that every stored
    certificate re-verifies; accepts externally supplied decompositions.
    """
    from .regularity import brute_force_regular

    n = host.graph.n
    failures: list[str] = []
    all_keys = [_edge_keys(p.edges, n) for p in dec.pairs]
    all_keys.append(_edge_keys(dec.h0_edges, n))
    cat = np.concatenate(all_keys) if all_keys else np.zeros(0, dtype=np.int64)
    cat_sorted = np.sort(cat)
    dupes = cat_sorted[:-1][cat_sorted[1:] == cat_sorted[:-1]]
    if dupes.size:
        u, v = divmod(int(dupes[0]), n)
        failures.append(f"edge-disjoint violated: edge ({u}, {v}) assigned twice")
    host_keys = np.sort(_edge_keys(host.edge_array(), n))
    coverage_ok = cat_sorted.size == host_keys.size and np.array_equal(cat_sorted, host_keys)
    if not coverage_ok:
        failures.append("coverage violated: assigned edges do not partition E(G)")

    eps_f = Fraction(epsilon)
    target = (1 - eps_f / 3) * Fraction(d)
    for p in dec.pairs:
        if p.side_a.size != p.side_b.size:
            failures.append(f"pair {p.index} unbalanced: {p.side_a.size} vs {p.side_b.size}")
            continue
        m = int(p.side_a.size)
        if m and Fraction(int(p.edges.shape[0]), m * m) < target:
            failures.append(
                f"pair {p.index} density {p.edges.shape[0] / (m * m):.4f} below target {float(target):.4f}"
            )
    h0_d = dec.h0_density()
    h0_ok = h0_d < d
    h0_ok_2d = h0_d < 2 * d
    if not h0_ok_2d:
        failures.append(f"residual density {h0_d:.4f} not below 2d = {2 * d:.4f}")

    cert_fail = 0
    if recheck_certificates:
        for p in dec.pairs:
            pair_graph = _pair_as_graph(p, n)
            if p.verdict.via == "codegree" and p.eta is not None:
                v = codegree_certify(pair_graph, p.eta)
                if v.kind != "certified":
                    cert_fail += 1
                    failures.append(f"pair {p.index} certificate does not re-verify")
            if p.side_a.size <= brute_cap and p.side_b.size <= brute_cap:
                v = brute_force_regular(pair_graph, p.verdict.epsilon, cap=brute_cap)
                if v.kind == "refuted":
                    cert_fail += 1
                    failures.append(f"pair {p.index} refuted by exhaustive oracle")

    checks = {
        "edge_disjoint": not dupes.size,
        "coverage": bool(coverage_ok),
        "pairs_balanced": all(p.side_a.size == p.side_b.size for p in dec.pairs),
        "h0_density_below_d": bool(h0_ok),
        "h0_density_below_2d": bool(h0_ok_2d),
        "h0_density": h0_d,
        "k": dec.k,
        "min_m": min((p.m for p in dec.pairs), default=0),
        "certificates_reverified": cert_fail == 0,
    }
    return DecompositionReport(ok=not failures, checks=checks, failures=failures)


def _pair_as_graph(p: DecompositionPair, n: int) -> BipartitePair:
    """Materialize a stored decomposition pair as a standalone pair view."""
    from .graphs import build_graph

    g = build_graph(n, p.edges)
    return BipartitePair(g, p.side_a, p.side_b)
