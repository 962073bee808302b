"""Randomized vertex partition over an edge decomposition: probability
assignment, per-vertex dice rolls, the partition verifier, exceptional-set
accounting, and the random-subset bundle trial harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .decompose import EdgeDecomposition
from .graphs import BipartitePair
from .randomness import RngStream, bernoulli_subset
from .regularity import BundleCertificate, BundleCheck, check_bundle


@dataclass
class ProbabilityAssignment:
    """Per-bundle selection probabilities and per-vertex leftover mass.

    For vertex v, membership[v] lists the bundles containing v; the dice for
    v picks bundle i with probability p[i] * scale[v] and the exceptional
    outcome with p0[v].  scale[v] < 1 only for clamped vertices whose raw
    mass exceeded 1.
    """

    dec: EdgeDecomposition
    r: float
    epsilon: float
    p: np.ndarray  # (K,)
    membership: list[np.ndarray]  # host vertex id -> bundle indices (0-based)
    p0: np.ndarray  # (n,)
    scale: np.ndarray  # (n,)
    clamped: list[int]
    diagnostics: dict


def assign_probabilities(
    dec: EdgeDecomposition,
    r: float,
    epsilon: float,
    clamp_tol: float = 0.15,
) -> ProbabilityAssignment:
    """Assign p(H_i) = (d(H_i) - eps) m_i / r and the leftover mass p0(v).

    Vertices whose bundle mass exceeds 1 by at most clamp_tol are clamped
    (p0 = 0, bundle probabilities renormalized proportionally) and logged;
    beyond the tolerance the degrees are inconsistent with r and the call
    fails.  The two-sided mass bound implied by near-regular degrees is
    asserted when the hypotheses hold and recorded as a diagnostic count
    otherwise.
    """
    if r < 1:
        raise ValueError("reference degree r must be >= 1")
    n = dec.host.graph.n
    k = dec.k
    p = np.zeros(k)
    for j, pr in enumerate(dec.pairs):
        p[j] = (pr.density - epsilon) * pr.m / r
        if p[j] > 1.0:
            raise ValueError(
                f"degrees inconsistent with r: p(H_{pr.index}) = {p[j]:.4f} > 1"
            )
        if p[j] < 0.0:
            p[j] = 0.0
    membership: list[list[int]] = [[] for _ in range(n)]
    for j, pr in enumerate(dec.pairs):
        for v in pr.side_a:
            membership[int(v)].append(j)
        for v in pr.side_b:
            membership[int(v)].append(j)
    member_arr = [np.array(m, dtype=np.int64) for m in membership]

    mass = np.array([p[m].sum() for m in member_arr])
    over = mass - 1.0
    worst = int(np.argmax(over))
    if over[worst] > clamp_tol:
        raise ValueError(
            f"degrees inconsistent with r: vertex {worst} has bundle mass "
            f"{mass[worst]:.4f} > 1 + {clamp_tol}"
        )
    clamped = [int(v) for v in np.flatnonzero(over > 0)]
    scale = np.ones(n)
    p0 = 1.0 - mass
    for v in clamped:
        scale[v] = 1.0 / mass[v]
        p0[v] = 0.0

    h0_deg = dec.h0_degrees()
    d = dec.d
    host_degs = np.zeros(n, dtype=np.int64)
    host_degs[dec.host.part_a] = dec.host.degrees_a
    host_degs[dec.host.part_b] = dec.host.degrees_b
    part_vertices = np.concatenate([dec.host.part_a, dec.host.part_b])
    min_deg = int(host_degs[part_vertices].min()) if part_vertices.size else 0
    max_deg = int(host_degs[part_vertices].max()) if part_vertices.size else 0
    lam = 1.0 - min_deg / r if r > 0 else 1.0
    hyp_ok = (
        max_deg <= r
        and lam <= d**4 / 2
        and epsilon <= d**5 / 10
        and r >= d ** (1.0 / 3.0) * dec.host.size_a
    )
    lower = 1.0 - h0_deg[part_vertices] / r - d**4
    upper = 1.0 - h0_deg[part_vertices] / r
    sandwich_violations = int(
        ((mass[part_vertices] < lower - 1e-9) | (mass[part_vertices] > upper + 1e-9)).sum()
    )
    if hyp_ok and sandwich_violations:
        raise AssertionError(
            f"probability mass bound violated on {sandwich_violations} vertices "
            "although the degree hypotheses hold"
        )
    diagnostics = {
        "hypotheses_hold": bool(hyp_ok),
        "lambda_observed": lam,
        "min_degree": min_deg,
        "max_degree": max_deg,
        "sandwich_violations": sandwich_violations,
        "clamped": len(clamped),
        "mean_p0": float(p0[part_vertices].mean()) if part_vertices.size else 0.0,
    }
    return ProbabilityAssignment(
        dec, r, epsilon, p, member_arr, p0, scale, clamped, diagnostics
    )


@dataclass
class VertexPartition:
    """Clusters A_1..A_K, B_1..B_K plus exceptional clusters A_0, B_0."""

    clusters_a: list[np.ndarray]
    clusters_b: list[np.ndarray]
    a0: np.ndarray
    b0: np.ndarray
    k: int
    epsilon: float
    d: float
    r: float
    certificates: list[BundleCertificate | None] = field(default_factory=list)

    def exceptional_count(self) -> int:
        return int(self.a0.size + self.b0.size)


def roll_partition(pa: ProbabilityAssignment, rng: RngStream) -> VertexPartition:
    """Independently roll each vertex's dice and collect the clusters.

    The randomness for vertex v comes from the (stream, v) substream, so the
    outcome is independent of iteration order; outcomes use the inverse CDF
    over the vertex's bundles sorted ascending, exceptional outcome last.
    """
    dec = pa.dec
    k = dec.k
    host = dec.host
    out_a: list[list[int]] = [[] for _ in range(k)]
    out_b: list[list[int]] = [[] for _ in range(k)]
    a0: list[int] = []
    b0: list[int] = []
    in_a = set(int(v) for v in host.part_a)
    for v in np.concatenate([host.part_a, host.part_b]):
        v = int(v)
        members = pa.membership[v]
        u = rng.derive(v).uniform()
        outcome = 0  # 0 encodes the exceptional cluster
        acc = 0.0
        for j in members:
            acc += pa.p[j] * pa.scale[v]
            if u < acc:
                outcome = int(j) + 1
                break
        target = (out_a, a0) if v in in_a else (out_b, b0)
        if outcome == 0:
            target[1].append(v)
        else:
            target[0][outcome - 1].append(v)
    return VertexPartition(
        clusters_a=[np.array(sorted(c), dtype=np.int64) for c in out_a],
        clusters_b=[np.array(sorted(c), dtype=np.int64) for c in out_b],
        a0=np.array(sorted(a0), dtype=np.int64),
        b0=np.array(sorted(b0), dtype=np.int64),
        k=k,
        epsilon=pa.epsilon,
        d=dec.d,
        r=pa.r,
        certificates=[None] * k,
    )


@dataclass
class ClauseResult:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class PartitionReport:
    clauses: list[ClauseResult]
    certificates: list[BundleCheck | None]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.clauses)

    def clause(self, name: str) -> ClauseResult:
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)


def verify_partition(
    host: BipartitePair,
    vp: VertexPartition,
    epsilon: float,
    d: float,
    relaxed_exceptional_bound: float | None = None,
    relaxed_cluster_floor: int | None = None,
    certify_mode: str = "kr",
) -> PartitionReport:
    """Check the five partition conditions independently.

    Structural violations (cluster overlap, cover mismatch) raise; bound
    misses become failed report clauses.  Clause (v) re-certifies each pair
    as a ((64 eps)^{1/5}, d - 2 eps) bundle, by default through the codegree
    criterion at eta = 4 eps so the certified epsilon matches.
    """
    n_part = host.size_a
    eps_f = Fraction(epsilon)

    for side, clusters, exc, part in (
        ("A", vp.clusters_a, vp.a0, host.part_a),
        ("B", vp.clusters_b, vp.b0, host.part_b),
    ):
        seen: dict[int, int] = {}
        for idx, cluster in enumerate([exc] + list(clusters)):
            for v in cluster:
                v = int(v)
                if v in seen:
                    raise ValueError(
                        f"clusters not disjoint: vertex {v} in {side}_{seen[v]} and {side}_{idx}"
                    )
                seen[v] = idx
        if set(seen) != set(int(v) for v in part):
            raise ValueError(f"cluster cover mismatch on side {side}")
    clauses = [ClauseResult("(i) disjoint cover", True)]

    exc_count = vp.exceptional_count()
    paper_bound = 8.0 * d ** (1.0 / 3.0) * n_part
    ok_paper = exc_count < paper_bound
    detail = f"|A0 u B0| = {exc_count}, 8 d^(1/3) n = {paper_bound:.1f} (n = part size)"
    if relaxed_exceptional_bound is not None:
        ok2 = exc_count < relaxed_exceptional_bound
        detail += f", relaxed bound {relaxed_exceptional_bound:.1f}: {'ok' if ok2 else 'miss'}"
        clauses.append(ClauseResult("(ii) exceptional size", ok_paper and ok2, detail))
    else:
        clauses.append(ClauseResult("(ii) exceptional size", ok_paper, detail))

    floor_paper = d ** (101.0 / epsilon**2) * n_part / 4.0
    floor = relaxed_cluster_floor if relaxed_cluster_floor is not None else floor_paper
    bad = [
        i + 1
        for i in range(vp.k)
        if vp.clusters_a[i].size < floor or vp.clusters_b[i].size < floor
    ]
    clauses.append(
        ClauseResult(
            "(iii) cluster floor",
            not bad,
            f"floor = {floor:.3g} (formula {floor_paper:.3g}); undersized: {bad}",
        )
    )

    bad_balance = []
    for i in range(vp.k):
        na, nb = int(vp.clusters_a[i].size), int(vp.clusters_b[i].size)
        if Fraction(abs(na - nb)) > 2 * eps_f * eps_f * na:
            bad_balance.append((i + 1, na, nb))
    clauses.append(
        ClauseResult(
            "(iv) cluster balance",
            not bad_balance,
            f"||A_i|-|B_i|| <= 2 eps^2 |A_i|; violations: {bad_balance}",
        )
    )

    eps_prime = (64.0 * epsilon) ** 0.2
    delta = d - 2.0 * epsilon
    eta = 4.0 * epsilon
    certs: list[BundleCheck | None] = []
    bad_pairs = []
    for i in range(vp.k):
        if vp.clusters_a[i].size == 0 or vp.clusters_b[i].size == 0:
            certs.append(None)
            bad_pairs.append((i + 1, "empty cluster"))
            continue
        sub = BipartitePair(host.graph, vp.clusters_a[i], vp.clusters_b[i])
        try:
            res = check_bundle(sub, eps_prime, delta, mode=certify_mode, eta=eta)
        except ValueError as exc:
            certs.append(None)
            bad_pairs.append((i + 1, str(exc)))
            continue
        certs.append(res)
        if not res.ok:
            bad_pairs.append((i + 1, res.reason))
        else:
            vp.certificates[i] = res.certificate
    clauses.append(
        ClauseResult(
            "(v) bundle certificates",
            not bad_pairs,
            f"eps' = {eps_prime:.4f}, delta = {delta:.4f}, eta = {eta:.4f}; failures: {bad_pairs}",
        )
    )
    return PartitionReport(clauses, certs)


@dataclass(frozen=True)
class ExceptionalReport:
    psi: float
    n: int
    heavy_vertices: np.ndarray  # L = {v : deg(v, H0) >= psi n}
    heavy_bound: float  # 2 e(H0) / (psi n)
    expectation_bound: float  # 2 d^4 n + 2 psi n^2 / r + 5 d n / psi
    observed_exceptional: int
    paper_bound: float  # 8 d^(1/3) n
    within_paper_bound: bool


def exceptional_report(
    dec: EdgeDecomposition,
    vp: VertexPartition,
    d: float,
    psi: float | None = None,
) -> ExceptionalReport:
    """Exceptional-set accounting: heavy-residual-degree vertices and bounds.

    |L| <= 2 e(H0) / (psi n) is a counting identity and is asserted exactly
    on every input.
    """
    if psi is None:
        psi = d ** (2.0 / 3.0)
    if not 0 < psi < 1:
        raise ValueError("psi must lie in (0, 1)")
    n_part = dec.host.size_a
    h0_deg = dec.h0_degrees()
    cut = Fraction(psi) * n_part
    cut_ceil = -((-cut.numerator) // cut.denominator)
    heavy = np.flatnonzero(h0_deg >= cut_ceil)
    e_h0 = int(dec.h0_edges.shape[0])
    if Fraction(int(heavy.size)) * cut > 2 * e_h0:
        raise AssertionError("heavy-vertex counting identity violated")
    heavy_bound = 2 * e_h0 / (psi * n_part) if n_part else 0.0
    r = vp.r
    expectation_bound = 2 * d**4 * n_part + 2 * psi * n_part**2 / r + 5 * d * n_part / psi
    observed = vp.exceptional_count()
    paper_bound = 8 * d ** (1.0 / 3.0) * n_part
    return ExceptionalReport(
        psi=psi,
        n=n_part,
        heavy_vertices=heavy,
        heavy_bound=heavy_bound,
        expectation_bound=expectation_bound,
        observed_exceptional=observed,
        paper_bound=paper_bound,
        within_paper_bound=observed < paper_bound,
    )


@dataclass
class TrialReport:
    trials: int
    k: int
    p: float
    epsilon: float
    d: float
    pass_size: int
    pass_degree: int
    pass_density: int
    pass_certificate: int
    warnings: list[str]
    failures: list[tuple[int, str]]

    def clause_counts(self) -> dict:
        return {
            "size_window": self.pass_size,
            "degree_window": self.pass_degree,
            "density_window": self.pass_density,
            "bundle_certificate": self.pass_certificate,
        }


def sampled_bundle_trial(
    bundle: BipartitePair,
    epsilon: float,
    d: float,
    p: float,
    rng: RngStream,
    trials: int,
    relaxed: bool = False,
) -> TrialReport:
    """Monte Carlo harness for random vertex subsets of a bundle.

    Per trial both sides are Bernoulli(p)-sampled and four clauses are
    scored: the (1 +- eps^2) p k size window, the (d +- 2 eps) degree
    window, the density window, and a ((64 eps)^{1/5}, d - 2 eps) bundle
    certificate through the codegree criterion at eta = 4 eps.
    """
    if bundle.size_a != bundle.size_b:
        raise ValueError("bundle must be balanced")
    k = bundle.size_a
    warnings = []
    ln_k = math.log(k) if k > 1 else 1.0
    gates = [
        (0 < d < 1.0 / 3.0, f"need 0 < d < 1/3, got d = {d}"),
        (epsilon > 1.0 / math.sqrt(ln_k), f"eps = {epsilon} below floor 1/sqrt(ln k) = {1.0 / math.sqrt(ln_k):.4f}"),
        (epsilon <= d / 10.0, f"eps = {epsilon} above d/10 = {d / 10.0}"),
        (p >= 30.0 * ln_k**3 / k, f"p = {p} below floor 30 (ln k)^3 / k = {30.0 * ln_k**3 / k:.4f}"),
        (p <= 1.0, f"p = {p} > 1"),
    ]
    for ok, msg in gates:
        if not ok:
            if not relaxed:
                raise ValueError(f"sampling hypothesis violated: {msg}")
            warnings.append(msg)

    eps_prime = (64.0 * epsilon) ** 0.2
    delta = d - 2.0 * epsilon
    eta = 4.0 * epsilon
    lo_sz = (1.0 - epsilon**2) * p * k
    hi_sz = (1.0 + epsilon**2) * p * k
    n_size = n_deg = n_dens = n_cert = 0
    failures: list[tuple[int, str]] = []
    for t in range(trials):
        stream = rng.derive(t)
        x_r = bernoulli_subset(bundle.part_a, p, stream.derive(1))
        y_r = bernoulli_subset(bundle.part_b, p, stream.derive(2))
        if lo_sz <= x_r.size <= hi_sz and lo_sz <= y_r.size <= hi_sz:
            n_size += 1
        else:
            failures.append((t, f"size {x_r.size}/{y_r.size} outside [{lo_sz:.1f}, {hi_sz:.1f}]"))
        if x_r.size == 0 or y_r.size == 0:
            failures.append((t, "empty sample"))
            continue
        sub = bundle.induced(x_r, y_r)
        lo_a, hi_a = (d - 2 * epsilon) * y_r.size, (d + 2 * epsilon) * y_r.size
        lo_b, hi_b = (d - 2 * epsilon) * x_r.size, (d + 2 * epsilon) * x_r.size
        da, db = sub.degrees_a, sub.degrees_b
        deg_ok = (
            bool((da >= lo_a).all() and (da <= hi_a).all())
            and bool((db >= lo_b).all() and (db <= hi_b).all())
        )
        if deg_ok:
            n_deg += 1
        else:
            failures.append((t, "degree outside (d +- 2 eps) window"))
        dens = sub.density()
        if d - 2 * epsilon <= dens <= d + 2 * epsilon:
            n_dens += 1
        else:
            failures.append((t, f"density {dens:.4f} outside window"))
        try:
            res = check_bundle(sub, eps_prime, delta, mode="kr", eta=eta)
            if res.ok:
                n_cert += 1
            else:
                failures.append((t, f"certificate: {res.reason}"))
        except ValueError as exc:
            failures.append((t, f"certificate: {exc}"))
    return TrialReport(
        trials=trials,
        k=k,
        p=p,
        epsilon=epsilon,
        d=d,
        pass_size=n_size,
        pass_degree=n_deg,
        pass_density=n_dens,
        pass_certificate=n_cert,
        warnings=warnings,
        failures=failures,
    )
