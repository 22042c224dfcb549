"""Random partitions: data model, validation, ball-carving schemes, and
Monte-Carlo estimators for separation and padding.

A :class:`Partition` is an ordered list of disjoint index clusters covering
an index universe, tagged with the scale it is bounded at and the bound mode:
diameter-bounded (every cluster diameter <= delta) or radially bounded
(every cluster inside some ambient ball of radius delta; the certifying
center may lie outside the point set and is stored as a witness when known).
Validation is exact, never sampled.

A :class:`PartitionSampler` is the computational stand-in for a random
partition: a deterministic function of (seed, index) whose every draw passes
its bound-mode validation.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from metriclab import kernels
from metriclab.errors import DomainError, StructuralError
from metriclab.metric import (
    AmbientMode,
    PointSet,
    greedy_net,
    greedy_net_subset,
    lp_norm,
    radius_center,
)
from metriclab.reporting import wilson_interval
from metriclab.rngutil import rng_from


class BoundMode(enum.Enum):
    DIAMETER = "diameter"
    RADIAL = "radial"


@dataclass(frozen=True)
class Partition:
    clusters: tuple
    delta: float
    mode: BoundMode
    ambient: AmbientMode | None = None
    witnesses: tuple | None = None  # per-cluster certified centers (coords)
    radii: tuple | None = None      # per-cluster certified radius around the witness

    def universe(self) -> np.ndarray:
        return np.sort(np.concatenate([np.asarray(c, dtype=np.int64) for c in self.clusters]))

    def label_array(self, n: int) -> np.ndarray:
        """Cluster id per index, -1 where not covered."""
        lab = np.full(n, -1, dtype=np.int64)
        for cid, cluster in enumerate(self.clusters):
            lab[np.asarray(cluster, dtype=np.int64)] = cid
        return lab

    def validate(self, S: PointSet, universe=None) -> None:
        """Exact disjoint-cover and bound checks; raises on any failure."""
        if not self.clusters:
            raise StructuralError("a partition needs at least one cluster")
        seen: set[int] = set()
        total = 0
        for cluster in self.clusters:
            if len(cluster) == 0:
                raise StructuralError("empty cluster")
            total += len(cluster)
            seen.update(int(i) for i in cluster)
        if len(seen) != total:
            raise StructuralError("clusters overlap")
        if max(seen) >= len(S) or min(seen) < 0:
            raise StructuralError("cluster indices escape the point set")
        expected = set(range(len(S))) if universe is None else {int(i) for i in universe}
        if seen != expected:
            raise StructuralError("clusters do not cover the universe")
        if self.mode is BoundMode.DIAMETER:
            dist = S.dist
            for cluster in self.clusters:
                idx = np.asarray(cluster, dtype=np.int64)
                if idx.size > 1 and float(dist[np.ix_(idx, idx)].max()) > self.delta:
                    raise StructuralError("cluster diameter exceeds delta")
        else:
            for cid, cluster in enumerate(self.clusters):
                idx = np.asarray(cluster, dtype=np.int64)
                if self.witnesses is not None and self.witnesses[cid] is not None:
                    w = np.asarray(self.witnesses[cid], dtype=np.float64)
                    d = lp_norm(S.coords[idx] - w, S.weights, S.p)
                    if float(np.max(d)) > self.delta:
                        raise StructuralError("cluster escapes its radius witness ball")
                else:
                    amb = self.ambient or AmbientMode.WITHIN_SET
                    if radius_center(idx, S, amb)[0] > self.delta:
                        raise StructuralError("cluster radius exceeds delta")

    def to_json(self) -> str:
        return json.dumps(
            {
                "delta": self.delta,
                "mode": self.mode.value,
                "clusters": [list(map(int, c)) for c in self.clusters],
            }
        )

    @classmethod
    def from_json(cls, text: str, ambient: AmbientMode | None = None) -> "Partition":
        obj = json.loads(text)
        return cls(
            tuple(tuple(c) for c in obj["clusters"]),
            obj["delta"],
            BoundMode(obj["mode"]),
            ambient,
        )


@dataclass
class PartitionSampler:
    """Seedable generator of partitions of a fixed point set.

    ``fn(rng)`` produces one draw; ``draw`` derives the generator from
    (seed, index) so draws are deterministic and order-independent, and
    validates every emitted partition.
    """

    S: PointSet
    delta: float
    mode: BoundMode
    fn: Callable[[np.random.Generator], Partition]
    name: str = "sampler"
    params: dict = field(default_factory=dict)
    ambient: AmbientMode | None = None
    universe: np.ndarray | None = None
    validate_draws: bool = True

    def draw(self, seed: int, index: int) -> Partition:
        P = self.fn(rng_from(seed, index))
        if self.validate_draws:
            P.validate(self.S, self.universe)
        return P


# -- carving schemes --------------------------------------------------------


def _carve(S: PointSet, centers: np.ndarray, delta: float, rng) -> Partition:
    """Random-order, random-radius first-capture ball carving."""
    order = rng.permutation(centers.size)
    rho = rng.uniform(delta / 4.0, delta / 2.0)
    labels = kernels.ckr_assign(S.dist[:, centers], order, rho)
    if labels.min() < 0:
        raise StructuralError("carving centers fail to cover the set")
    clusters = []
    witnesses = []
    radii = []
    for rank in range(centers.size):
        members = np.nonzero(labels == rank)[0]
        if members.size:
            center = centers[order[rank]]
            clusters.append(tuple(int(i) for i in members))
            witnesses.append(S.coords[center].copy())
            radii.append(float(S.dist[center, members].max()))
    return Partition(
        tuple(clusters), delta, BoundMode.DIAMETER, None, tuple(witnesses), tuple(radii)
    )


def carve_subset(
    S: PointSet, members: np.ndarray, delta: float, rng, net_granularity: float | None = None
) -> Partition:
    """Ball-carve a subset of S (global indices); clusters cover exactly
    ``members``.  Centers form a net of the subset at ``net_granularity``
    (default delta/8)."""
    members = np.asarray(members, dtype=np.int64)
    gran = delta / 8.0 if net_granularity is None else net_granularity
    net = np.asarray(greedy_net_subset(S, members, gran), dtype=np.int64)
    order = rng.permutation(net.size)
    rho = rng.uniform(delta / 4.0, delta / 2.0)
    labels = kernels.ckr_assign(S.dist[np.ix_(members, net)], order, rho)
    if labels.min() < 0:
        raise StructuralError("carving centers fail to cover the subset")
    clusters, witnesses, radii = [], [], []
    for rank in range(net.size):
        sel = members[labels == rank]
        if sel.size:
            center = net[order[rank]]
            clusters.append(tuple(int(i) for i in sel))
            witnesses.append(S.coords[center].copy())
            radii.append(float(S.dist[center, sel].max()))
    return Partition(
        tuple(clusters), delta, BoundMode.DIAMETER, None, tuple(witnesses), tuple(radii)
    )


def ckr_partition(S: PointSet, delta: float, rng: np.random.Generator) -> Partition:
    """Delta-bounded separating partition of a Euclidean point set.

    Carving centers form a delta/8 net, visited in uniformly random order
    with one shared radius rho ~ U[delta/4, delta/2]; each point joins the
    first center within rho.  Cluster diameters are at most 2*rho <= delta.
    """
    if S.p != 2:
        raise DomainError("ball carving at the sqrt(k) rate needs a Euclidean set")
    if delta <= 0:
        raise DomainError("delta must be positive")
    net = np.asarray(greedy_net(S, delta / 8.0), dtype=np.int64)
    return _carve(S, net, delta, rng)


def ckr_sampler(S: PointSet, delta: float) -> PartitionSampler:
    return PartitionSampler(
        S, delta, BoundMode.DIAMETER, lambda rng: ckr_partition(S, delta, rng), "ckr",
        {"delta": delta},
    )


def padded_partition(S: PointSet, delta0: float, rng: np.random.Generator) -> Partition:
    """Ball carving with every point a candidate center; delta0-bounded.

    Each point's inner ball of radius delta0/(kappa log n) stays inside its
    cluster with probability bounded below by a universal constant; the
    estimators below measure that probability instead of assuming it.
    """
    if delta0 <= 0:
        raise DomainError("delta0 must be positive")
    return _carve(S, np.arange(len(S), dtype=np.int64), delta0, rng)


def padded_sampler(S: PointSet, delta0: float) -> PartitionSampler:
    return PartitionSampler(
        S, delta0, BoundMode.DIAMETER, lambda rng: padded_partition(S, delta0, rng),
        "padded", {"delta0": delta0},
    )


# -- Bernoulli subsets -------------------------------------------------------


def bernoulli_subset(S: PointSet, prob: float, rng: np.random.Generator) -> np.ndarray:
    """Indices of an i.i.d. inclusion-probability-``prob`` random subset."""
    if not (0.0 <= prob <= 1.0):
        raise DomainError("inclusion probability must lie in [0, 1]")
    return np.nonzero(rng.random(len(S)) < prob)[0]


def bernoulli_event_bound(S: PointSet, x: int, prob: float, r: float, R: float) -> float:
    """Closed-form lower bound min{(1-p)^|B(x,R)|, 1-(1-p)^|B(x,r)|}."""
    big = int((S.dist[x] <= R).sum())
    small = int((S.dist[x] <= r).sum())
    return min((1.0 - prob) ** big, 1.0 - (1.0 - prob) ** small)


def bernoulli_event_probability(
    S: PointSet,
    x: int,
    y: int,
    prob: float,
    r: float,
    R: float,
    trials: int,
    rng: np.random.Generator,
) -> float:
    """Empirical probability of a nonempty draw whose distances to x and y
    differ by more than (R - r)/2; requires d(x,y) > r/2 + 3R/2."""
    if not (0 < r < R):
        raise DomainError("need 0 < r < R")
    if not S.dist[x, y] > r / 2.0 + 1.5 * R:
        raise DomainError("need d(x,y) > r/2 + 3R/2")
    dx_row, dy_row = S.dist[x], S.dist[y]
    hits = 0
    batch = max(1, min(trials, 2_000_000 // max(1, len(S))))
    done = 0
    thr = (R - r) / 2.0
    while done < trials:
        b = min(batch, trials - done)
        mask = rng.random((b, len(S))) < prob
        nonempty = mask.any(axis=1)
        big = dx_row.max() + dy_row.max() + 1.0
        dx = np.where(mask, dx_row, big).min(axis=1)
        dy = np.where(mask, dy_row, big).min(axis=1)
        hits += int(np.count_nonzero(nonempty & (np.abs(dx - dy) > thr)))
        done += b
    return hits / trials


# -- estimators --------------------------------------------------------------


@dataclass
class SeparationReport:
    """Empirical separation constant sigma_hat = max over pairs of
    p_hat(x,y) * delta / d(x,y), with Wilson 95% intervals."""

    delta: float
    trials: int
    sigma_hat: float
    argmax_pair: tuple  # (i, j, dist, phat, lo, hi)
    sigma_lo: float
    sigma_hi: float
    pairs: dict | None = None  # arrays i, j, dist, phat, lo, hi (small sets)

    def rows(self):
        if self.pairs is None:
            i, j, d, ph, lo, hi = self.argmax_pair
            return [(i, j, d, ph, lo, hi)]
        P = self.pairs
        return list(zip(P["i"], P["j"], P["dist"], P["phat"], P["lo"], P["hi"]))


def separation_report_from_counts(
    counts: np.ndarray, dist: np.ndarray, delta: float, trials: int,
    store_pairs: bool | None = None,
) -> SeparationReport:
    n = counts.shape[0]
    if n < 2:
        return SeparationReport(delta, trials, 0.0, (0, 0, 0.0, 0.0, 0.0, 0.0), 0.0, 0.0)
    iu, ju = np.triu_indices(n, k=1)
    d = dist[iu, ju]
    c = counts[iu, ju].astype(np.float64)
    pos = d > 0
    ratio = np.zeros_like(d)
    ratio[pos] = (c[pos] / trials) * delta / d[pos]
    k = int(np.argmax(ratio))
    i, j = int(iu[k]), int(ju[k])
    phat = c[k] / trials
    lo, hi = wilson_interval(int(c[k]), trials)
    sigma = float(ratio[k])
    report = SeparationReport(
        delta, trials, sigma,
        (i, j, float(d[k]), float(phat), lo, hi),
        lo * delta / float(d[k]) if d[k] > 0 else 0.0,
        hi * delta / float(d[k]) if d[k] > 0 else 0.0,
    )
    if store_pairs is None:
        store_pairs = n <= 512
    if store_pairs:
        lohi = np.array([wilson_interval(int(x), trials) for x in c])
        report.pairs = {
            "i": iu, "j": ju, "dist": d, "phat": c / trials,
            "lo": lohi[:, 0], "hi": lohi[:, 1],
        }
    return report


def estimate_separation(
    sampler: PartitionSampler, S: PointSet, trials: int, seed: int,
    store_pairs: bool | None = None,
) -> SeparationReport:
    n = len(S)
    counts = np.zeros((n, n), dtype=np.uint32)
    for t in range(trials):
        P = sampler.draw(seed, t)
        kernels.pair_sep_accumulate(P.label_array(n), counts)
    return separation_report_from_counts(counts, S.dist, sampler.delta, trials, store_pairs)


@dataclass
class PaddingStats:
    p_hat: float        # min over points of the empirical padding probability
    kappa_hat: float    # depth parameter: inner_radius = delta / (kappa log n)
    trials: int
    per_point: np.ndarray | None = None


def estimate_padding(
    sampler: PartitionSampler, S: PointSet, inner_radius: float, trials: int, seed: int
) -> PaddingStats:
    """Empirical probability that each point's inner ball stays inside its
    own cluster, minimized over points."""
    if inner_radius < 0:
        raise DomainError("inner radius must be nonnegative")
    n = len(S)
    balls = [np.nonzero(S.dist[i] <= inner_radius)[0] for i in range(n)]
    padded = np.zeros(n, dtype=np.int64)
    for t in range(trials):
        lab = sampler.draw(seed, t).label_array(n)
        for i in range(n):
            if np.all(lab[balls[i]] == lab[i]):
                padded[i] += 1
    per_point = padded / trials
    logn = np.log(n) if n > 1 else np.nan
    kappa = sampler.delta / (inner_radius * logn) if inner_radius > 0 and n > 1 else np.inf
    return PaddingStats(float(per_point.min()), float(kappa), trials, per_point)


def fit_padding_constants(
    S: PointSet, delta0: float, trials: int, seed: int,
    kappa_grid=(1.0, 2.0, 4.0, 8.0, 16.0), target: float = 0.5,
) -> tuple[float, float]:
    """Smallest depth parameter kappa on the grid whose inner radius
    delta0/(kappa log n) is padded with probability >= target; returns
    (p_hat at that kappa, kappa)."""
    sampler = padded_sampler(S, delta0)
    n = len(S)
    logn = np.log(max(n, 2))
    best = None
    for kappa in kappa_grid:
        stats = estimate_padding(sampler, S, delta0 / (kappa * logn), trials, seed)
        best = (stats.p_hat, kappa)
        if stats.p_hat >= target:
            return best
    return best


# -- extension to supersets ---------------------------------------------------


def extend_partition(P: Partition, S: PointSet, far_threshold: float) -> Partition:
    """Extend a partition of C (global indices of S) to all of S.

    Points within ``far_threshold`` of C join the cluster of their nearest
    C-point (ties to the lowest cluster index); farther points become
    singletons.  Keeps the bound mode, at delta + 2*far (diameter) or
    delta + far (radial).
    """
    if far_threshold < 0:
        raise DomainError("far threshold must be nonnegative")
    cover = P.universe()
    if cover.size and (cover.max() >= len(S) or cover.min() < 0):
        raise StructuralError("partition indices are not contained in the superset")
    in_cover = np.zeros(len(S), dtype=bool)
    in_cover[cover] = True
    lab = P.label_array(len(S))
    new_members: list[list[int]] = [list(map(int, c)) for c in P.clusters]
    singles: list[int] = []
    outside = np.nonzero(~in_cover)[0]
    if outside.size:
        sub = S.dist[np.ix_(outside, cover)]
        nearest_d = sub.min(axis=1)
        for row, s in enumerate(outside):
            if nearest_d[row] <= far_threshold:
                ties = cover[sub[row] == nearest_d[row]]
                cid = int(min(lab[t] for t in ties))
                new_members[cid].append(int(s))
            else:
                singles.append(int(s))
    clusters = tuple(tuple(sorted(c)) for c in new_members) + tuple((s,) for s in singles)
    if P.mode is BoundMode.DIAMETER:
        new_delta = P.delta + 2.0 * far_threshold
        witnesses = None
    else:
        new_delta = P.delta + far_threshold
        witnesses = None
        if P.witnesses is not None:
            witnesses = tuple(P.witnesses) + tuple(S.coords[s].copy() for s in singles)
    return Partition(clusters, new_delta, P.mode, P.ambient, witnesses)
