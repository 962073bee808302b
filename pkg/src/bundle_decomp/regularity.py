"""Quasirandomness checks: exhaustive regularity oracle, codegree certifier,
degree-outlier sets, slicing, bundle checks and bundle extraction.

Every threshold comparison against a rational bound (degree windows, codegree
caps, pair-count thresholds) is done in exact integer arithmetic; floats only
appear in reported values, never in decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .graphs import BipartitePair, popcount

BRUTE_CAP_DEFAULT = 16


@dataclass(frozen=True)
class RegularityVerdict:
    """Outcome of a regularity check.

    kind is one of "certified", "refuted", "inconclusive".  The codegree
    criterion is one-directional, so it can never refute; the exhaustive
    oracle never returns inconclusive.
    """

    kind: str
    epsilon: float
    density: float
    via: str
    witness: tuple | None = None
    deviation: float | None = None
    eta: float | None = None
    qualified_pairs: int | None = None
    pair_threshold: float | None = None

    @property
    def certified(self) -> bool:
        return self.kind == "certified"


def assumed_verdict(pair: BipartitePair, epsilon: float) -> RegularityVerdict:
    return RegularityVerdict("certified", epsilon, pair.density(), via="assumed")


def _ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _floor_frac(x: Fraction) -> int:
    return x.numerator // x.denominator


def brute_force_regular(pair: BipartitePair, epsilon: float, cap: int = BRUTE_CAP_DEFAULT) -> RegularityVerdict:
    """Exhaustively test the regularity condition over all eligible sub-pairs.

    Enumerates every X x Y with |X| >= eps|A| and |Y| >= eps|B| (subset pairs
    of nonempty sets) and compares sub-densities exactly.  Refutations carry
    the maximal-deviation witness, earliest in scan order on ties.
    """
    a, b = pair.size_a, pair.size_b
    if a == 0 or b == 0:
        raise ValueError("empty side")
    if a > cap or b > cap:
        raise ValueError(f"use KR certifier: parts {a}x{b} exceed cap {cap}")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    e_ab = pair.edge_count
    dens = e_ab / (a * b)
    eps = Fraction(epsilon)
    min_xs = max(1, _ceil_frac(eps * a))
    min_ys = max(1, _ceil_frac(eps * b))
    if min_xs > a or min_ys > b:
        # no eligible sub-pairs: the condition is vacuously satisfied
        return RegularityVerdict("certified", epsilon, dens, via="brute-force")

    rows = pair.packed_a[:, 0]  # b <= 64 always holds under the cap
    ymasks = np.arange(1 << b, dtype=np.uint64)
    degmat = np.bitwise_count(rows[:, None] & ymasks[None, :]).astype(np.float32)
    xmasks = np.arange(1 << a, dtype=np.uint64)
    xsizes = np.bitwise_count(xmasks).astype(np.int64)
    ysizes = np.bitwise_count(ymasks).astype(np.int64)
    xbits = ((xmasks[:, None] >> np.arange(a, dtype=np.uint64)[None, :]) & np.uint64(1)).astype(np.float32)

    # integer thresholds per (|X|, |Y|): scaled deviation |e(X,Y)*ab - e*|X||Y||
    # exceeds eps*|X||Y|*ab  iff  it is >= thr[|X|,|Y|]
    big = np.int64(1) << 40
    thr = np.full((a + 1, b + 1), big, dtype=np.int64)
    for xs in range(min_xs, a + 1):
        for ys in range(min_ys, b + 1):
            t = eps * xs * ys * a * b
            thr[xs, ys] = _floor_frac(t) + 1

    best = None  # (deviation, xmask, ymask, dev_scaled, xs, ys)
    chunk = max(1, min(1 << b, (1 << 22) // (1 << a)))
    scale = np.float32(a * b)
    for lo in range(0, 1 << b, chunk):
        hi = min(lo + chunk, 1 << b)
        e_sub = xbits @ degmat[:, lo:hi]
        dev_scaled = np.abs(e_sub * scale - np.float32(e_ab) * (xsizes[:, None] * ysizes[None, lo:hi]).astype(np.float32))
        bad = dev_scaled >= thr[xsizes][:, ysizes[lo:hi]].astype(np.float32)
        if bad.any():
            xi, yi = np.nonzero(bad)
            denom = (xsizes[xi] * ysizes[lo + yi]).astype(np.float64) * (a * b)
            devs = dev_scaled[xi, yi].astype(np.float64) / denom
            k = int(np.argmax(devs))
            cand = (float(devs[k]), int(xi[k]), int(lo + yi[k]))
            if best is None or cand[0] > best[0]:
                best = cand

    if best is None:
        return RegularityVerdict("certified", epsilon, dens, via="brute-force")
    _, xm, ym = best
    wit_x = pair.part_a[[i for i in range(a) if (xm >> i) & 1]]
    wit_y = pair.part_b[[j for j in range(b) if (ym >> j) & 1]]
    return RegularityVerdict(
        "refuted",
        epsilon,
        dens,
        via="brute-force",
        witness=(wit_x.tolist(), wit_y.tolist()),
        deviation=best[0],
    )


def codegree_certify(pair: BipartitePair, eta: float) -> RegularityVerdict:
    """One-sided regularity certificate from degree and codegree conditions.

    Counts unordered pairs {x, x'} of A-vertices whose degrees reach
    (rho - eta)|B| and whose codegree stays below (rho + eta)^2 |B|.  When
    more than (1 - 5 eta)|A|^2 / 2 pairs qualify, the pair is certified
    (16 eta)^(1/5)-regular; otherwise the check is inconclusive, never a
    refutation.
    """
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    a, b = pair.size_a, pair.size_b
    if a == 0 or b == 0:
        raise ValueError("empty side")
    etaf = Fraction(eta)
    if Fraction(a) < 2 / etaf:
        raise ValueError(f"KR hypothesis violated: |A| = {a} < 2/eta = {float(2 / etaf):.3f}")
    rho = Fraction(pair.edge_count, a * b)
    eps_out = float((16 * eta) ** 0.2)
    deg_cut = _ceil_frac((rho - etaf) * b)  # deg >= (rho - eta)|B|
    codeg_cut = _floor_frac((rho + etaf) ** 2 * b)  # codeg <= (rho + eta)^2 |B|

    degs = pair.degrees_a
    ok = degs >= deg_cut
    idx = np.flatnonzero(ok)
    rows = pair.packed_a[idx]
    qualified = 0
    for i in range(len(idx) - 1):
        codeg = popcount(rows[i + 1 :] & rows[i][None, :]).sum(axis=1)
        qualified += int((codeg <= codeg_cut).sum())

    threshold = (1 - 5 * etaf) * a * a / 2
    kind = "certified" if Fraction(qualified) > threshold else "inconclusive"
    return RegularityVerdict(
        kind,
        eps_out,
        float(rho),
        via="codegree",
        eta=eta,
        qualified_pairs=qualified,
        pair_threshold=float(threshold),
    )


@dataclass(frozen=True)
class DegreeOutliers:
    a_low: np.ndarray
    a_high: np.ndarray
    b_low: np.ndarray
    b_high: np.ndarray

    def all_empty(self) -> bool:
        return not (len(self.a_low) or len(self.a_high) or len(self.b_low) or len(self.b_high))


def degree_outliers(pair: BipartitePair, epsilon: float) -> DegreeOutliers:
    """Vertices whose degree leaves the (d +- eps) window around the density.

    For a certified eps-regular pair each of the four sets has size at most
    eps times its part; for arbitrary pairs they are just reported.
    """
    d = pair.density_fraction()
    eps = Fraction(epsilon)
    out = []
    for degs, part, opp in (
        (pair.degrees_a, pair.part_a, pair.size_b),
        (pair.degrees_b, pair.part_b, pair.size_a),
    ):
        low_cut = (d - eps) * opp  # deg < low_cut
        high_cut = (d + eps) * opp  # deg > high_cut
        low = part[degs <= _ceil_frac(low_cut) - 1]
        high = part[degs >= _floor_frac(high_cut) + 1]
        out.extend([low, high])
    return DegreeOutliers(out[0], out[1], out[2], out[3])


def slice_pair(
    pair: BipartitePair, sub_a, sub_b, epsilon: float, alpha: float
) -> tuple[BipartitePair, float]:
    """Induced sub-pair of an eps-regular pair together with its eps'.

    Requires alpha > eps and both slices to contain at least an alpha
    fraction of their part; eps' = max(eps/alpha, 2 eps).
    """
    if not alpha > epsilon:
        raise ValueError("slicing hypothesis violated: need alpha > eps")
    sub = pair.induced(sub_a, sub_b)
    if Fraction(sub.size_a) < Fraction(alpha) * pair.size_a or Fraction(sub.size_b) < Fraction(alpha) * pair.size_b:
        raise ValueError("slicing hypothesis violated: slice smaller than alpha fraction")
    eps_prime = max(epsilon / alpha, 2 * epsilon)
    return sub, eps_prime


@dataclass(frozen=True)
class BundleCertificate:
    epsilon: float
    delta: float
    density: float
    degree_window_a: tuple[int, int]
    degree_window_b: tuple[int, int]
    regular_via: str
    super_regular: tuple[float, float]  # (eps, delta - eps)
    eta: float | None = None


@dataclass(frozen=True)
class BundleCheck:
    ok: bool
    certificate: BundleCertificate | None = None
    reason: str | None = None
    failing_vertex: int | None = None
    verdict: RegularityVerdict | None = None


def check_bundle(
    pair: BipartitePair,
    epsilon: float,
    delta: float,
    mode: str = "brute",
    eta: float | None = None,
    cap: int = BRUTE_CAP_DEFAULT,
) -> BundleCheck:
    """Verify the two degree windows and regularity of a candidate bundle.

    mode selects how regularity is established: "brute" (exhaustive, small
    parts only), "kr" (codegree certificate at the given eta) or "assume".
    """
    eps = Fraction(epsilon)
    dlt = Fraction(delta)
    for degs, part, opp, side in (
        (pair.degrees_a, pair.part_a, pair.size_b, "A"),
        (pair.degrees_b, pair.part_b, pair.size_a, "B"),
    ):
        lo = _ceil_frac((dlt - eps) * opp)
        hi = _floor_frac((dlt + eps) * opp)
        bad = np.flatnonzero((degs < lo) | (degs > hi))
        if bad.size:
            v = int(part[bad[0]])
            return BundleCheck(
                False,
                reason=f"degree window: vertex {v} on side {side} has degree "
                f"{int(degs[bad[0]])} outside [{lo}, {hi}]",
                failing_vertex=v,
            )

    if mode == "brute":
        verdict = brute_force_regular(pair, epsilon, cap=cap)
    elif mode == "kr":
        if eta is None:
            raise ValueError("mode kr requires eta")
        verdict = codegree_certify(pair, eta)
    elif mode == "assume":
        verdict = assumed_verdict(pair, epsilon)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if not verdict.certified:
        return BundleCheck(False, reason=f"regularity not certified ({verdict.kind})", verdict=verdict)

    cert = BundleCertificate(
        epsilon=epsilon,
        delta=delta,
        density=pair.density(),
        degree_window_a=(int(pair.degrees_a.min()), int(pair.degrees_a.max())),
        degree_window_b=(int(pair.degrees_b.min()), int(pair.degrees_b.max())),
        regular_via=verdict.via,
        super_regular=(epsilon, delta - epsilon),
        eta=eta if mode == "kr" else None,
    )
    return BundleCheck(True, certificate=cert, verdict=verdict)


@dataclass(frozen=True)
class BundleExtraction:
    m: int
    m1: int
    discarded_low_a: int
    discarded_high_a: int
    discarded_low_b: int
    discarded_high_b: int
    rebalance_dropped: int
    edges_before: int
    edges_after: int
    density_before: float
    density_after: float
    kov_applicable: bool
    bound_violations: tuple[str, ...] = ()

    @property
    def bounds_ok(self) -> bool:
        return not self.bound_violations


def extract_bundle(
    pair: BipartitePair, epsilon: float, d: float, relaxed: bool = False
) -> tuple[BipartitePair, BundleExtraction]:
    """Trim degree outliers from a balanced regular pair to obtain a bundle.

    Discards vertices with degree below (d - eps)m, then those above
    (d + eps)m (degrees and thresholds taken from the original pair), then
    rebalances by dropping lowest-indexed surplus vertices.  The returned
    pair satisfies m1 >= (1 - 2 eps)m and e(H) >= e(F) - 4 eps m^2; both are
    asserted and a violation means the input was not eps-regular.

    relaxed waives the hypothesis gates on eps and d (desk-scale parameters
    routinely sit outside them); the trimming and bound checks are unchanged.
    """
    if not relaxed:
        if not 0 < epsilon < 0.1:
            raise ValueError("lemma hypothesis violated: need 0 < eps < 1/10")
    elif not 0 < epsilon < 1:
        raise ValueError("eps must lie in (0, 1)")
    eps = Fraction(epsilon)
    dd = Fraction(d)
    if not relaxed and not 3 * eps <= dd <= Fraction(1, 2):
        raise ValueError("lemma hypothesis violated: need 3*eps <= d <= 1/2")
    if pair.size_a != pair.size_b:
        raise ValueError("pair must be balanced")
    m = pair.size_a
    low_cut = _ceil_frac((dd - eps) * m) - 1  # deg <= this means deg < (d-eps)m
    high_cut = _floor_frac((dd + eps) * m) + 1  # deg >= this means deg > (d+eps)m

    keeps = []
    stats = {}
    for degs, part, side in ((pair.degrees_a, pair.part_a, "a"), (pair.degrees_b, pair.part_b, "b")):
        low = degs <= low_cut
        high = degs >= high_cut
        stats[f"low_{side}"] = int(low.sum())
        stats[f"high_{side}"] = int(high.sum())
        keeps.append(part[~(low | high)])
    keep_a, keep_b = keeps
    dropped = 0
    if keep_a.size > keep_b.size:
        dropped = keep_a.size - keep_b.size
        keep_a = keep_a[dropped:]
    elif keep_b.size > keep_a.size:
        dropped = keep_b.size - keep_a.size
        keep_b = keep_b[dropped:]
    bundle = pair.induced(keep_a, keep_b)
    m1 = bundle.size_a
    e_f, e_h = pair.edge_count, bundle.edge_count

    violations = []
    if Fraction(m1) < (1 - 2 * eps) * m:
        violations.append(
            f"m1 = {m1} < (1-2*eps)*m = {float((1 - 2 * eps) * m):.2f}"
        )
    if Fraction(e_h) < Fraction(e_f) - 4 * eps * m * m:
        violations.append(f"e(H) = {e_h} < e(F) - 4*eps*m^2 = {float(e_f - 4 * eps * m * m):.2f}")
    kov = 4 * eps <= dd * dd
    if kov and Fraction(e_h) < (1 - dd) * e_f:
        violations.append(f"e(H) = {e_h} < (1-d)*e(F) = {float((1 - dd) * e_f):.2f}")
    if violations and not relaxed:
        raise ValueError(
            f"bundle extraction bound violated: {violations[0]}; input pair is not eps-regular"
        )
    info = BundleExtraction(
        m=m,
        m1=m1,
        discarded_low_a=stats["low_a"],
        discarded_high_a=stats["high_a"],
        discarded_low_b=stats["low_b"],
        discarded_high_b=stats["high_b"],
        rebalance_dropped=int(dropped),
        edges_before=e_f,
        edges_after=e_h,
        density_before=pair.density(),
        density_after=bundle.density() if m1 else 0.0,
        kov_applicable=bool(kov),
        bound_violations=tuple(violations),
    )
    return bundle, info
