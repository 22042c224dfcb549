"""Single-scale and multiscale embedding constructions.

All maps here are finite-dimensional feature maps attached to a fixed
:class:`~metriclab.metric.PointSet` and evaluated on point indices; image
distances are plain Euclidean on the feature vectors.  The constructions:

* partition features: one orthonormal coordinate per cluster per sampled
  partition, so squared image distance is exactly twice the empirical
  separation frequency times the amplitude squared;
* a norm-constant truncation map G with
  ||G(x) - G(y)|| = delta * sqrt(1 - exp(-(||x-y||/delta)^2 / 2)), realized
  by phase-paired random cosine features (the exact kernel distance sits
  between min(delta, d)/2 and min(delta, d) for every d);
* distance-to-random-subset features at geometric inclusion rates (the
  classical 1-Lipschitz coordinate construction), with the empty-set
  convention d(x, {}) = diam + 1 truncated at the diameter;
* net-anchor maps appending a distance-to-net coordinate to a base map;
* spatially localized maps built from padded partitions, a cutoff
  weight min(1, d(z, outside-cluster)/delta)/2, and per-cluster sub-maps
  passed through the truncation map;
* weighted block direct sums for multiscale gluing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from metriclab.errors import DomainError, StructuralError
from metriclab.metric import PointSet
from metriclab.partitions import (
    BoundMode,
    Partition,
    extend_partition,
    fit_padding_constants,
    padded_partition,
)


class EmbeddingMap:
    """Feature map on the indices of a fixed point set."""

    def __init__(self, S: PointSet, eval_fn, out_dim: int, lip_witness: float, metadata=None):
        self.S = S
        self._eval = eval_fn
        self.out_dim = out_dim
        self.lip_witness = lip_witness
        self.metadata = metadata or {}

    def evaluate(self, idx=None) -> np.ndarray:
        idx = np.arange(len(self.S)) if idx is None else np.asarray(idx, dtype=np.int64)
        out = self._eval(idx)
        if out.shape != (idx.size, self.out_dim):
            raise StructuralError("evaluator returned the wrong shape")
        return out

    @classmethod
    def from_features(cls, S: PointSet, features: np.ndarray, lip_witness: float, metadata=None):
        features = np.asarray(features, dtype=np.float64)
        return cls(S, lambda idx: features[idx], features.shape[1], lip_witness, metadata)

    @classmethod
    def identity_into_l2(cls, S: PointSet):
        """Coordinates folded by sqrt(weights): plain Euclidean image distance
        equals the weighted l_2 distance of the source coordinates.

        With probability weights the norms increase with the exponent, so the
        witness is 1 for p >= 2 and w_min^(1/2 - 1/p) below (attained on a
        single-coordinate difference).
        """
        feats = S.coords * np.sqrt(S.weights)
        if S.p >= 2:
            lip = 1.0
        else:
            lip = float(S.weights.min()) ** (0.5 - 1.0 / S.p)
        return cls.from_features(S, feats, lip, {"construction": "identity_l2"})


@dataclass
class DistortionReport:
    lip_hat: float
    colip_hat: float
    distortion: float
    witness_up: tuple
    witness_down: tuple
    degenerate: bool
    window: tuple | None = None
    n_pairs: int = 0


def distortion_report(emb: EmbeddingMap, window: tuple | None = None) -> DistortionReport:
    """Exact max/min image-to-domain distance ratios over (windowed) pairs."""
    S = emb.S
    img = emb.evaluate()
    iu, ju = np.triu_indices(len(S), k=1)
    dd = S.dist[iu, ju]
    keep = dd > 0
    if window is not None:
        keep &= (dd >= window[0]) & (dd <= window[1])
    iu, ju, dd = iu[keep], ju[keep], dd[keep]
    if dd.size == 0:
        raise DomainError("no pairs in the requested window")
    di = np.linalg.norm(img[iu] - img[ju], axis=1)
    ratio = di / dd
    hi, lo = int(np.argmax(ratio)), int(np.argmin(ratio))
    degenerate = bool(np.all(di == 0.0))
    lip, colip = float(ratio[hi]), float(ratio[lo])
    return DistortionReport(
        lip, colip, math.inf if (degenerate or colip == 0) else lip / colip,
        (int(iu[hi]), int(ju[hi])), (int(iu[lo]), int(ju[lo])),
        degenerate, window, int(dd.size),
    )


# -- partition features ------------------------------------------------------


def psi_feature_embedding(S: PointSet, partitions, amplitude: float) -> EmbeddingMap:
    """One amplitude/sqrt(T)-weighted one-hot block per sampled partition;
    squared image distances equal 2 * amplitude^2 * (separation frequency)."""
    T = len(partitions)
    if T == 0:
        raise DomainError("need at least one sampled partition")
    blocks = []
    for P in partitions:
        lab = P.label_array(len(S))
        if lab.min() < 0:
            raise StructuralError("partition does not cover the point set")
        width = int(lab.max()) + 1
        block = np.zeros((len(S), width))
        block[np.arange(len(S)), lab] = amplitude / math.sqrt(T)
        blocks.append(block)
    feats = np.hstack(blocks)
    return EmbeddingMap.from_features(
        S, feats, amplitude, {"construction": "partition_features", "trials": T}
    )


def partition_feature_map(a: int, S: PointSet, partitions, amplitude: float) -> np.ndarray:
    return psi_feature_embedding(S, partitions, amplitude).evaluate([a])[0]


# -- truncation map ------------------------------------------------------------


class TruncationMap:
    """Norm-constant kernel feature map at scale delta.

    Features are phase-paired cosines over orthogonalized Gaussian
    frequencies, so every image has norm exactly delta and expected squared
    distances follow the Gaussian kernel.  ``feature_count`` counts the
    cos/sin feature coordinates (one constant padding coordinate is added).
    """

    def __init__(self, delta: float, feature_count: int, input_dim: int, rng):
        if feature_count < 64:
            raise DomainError("need at least 64 features")
        if feature_count % 2:
            raise DomainError("feature_count must be even (cos/sin pairs)")
        if delta <= 0:
            raise DomainError("delta must be positive")
        self.delta = delta
        self.input_dim = input_dim
        m = feature_count // 2
        freqs = []
        while sum(f.shape[0] for f in freqs) < m:
            g = rng.standard_normal((input_dim, input_dim))
            q, _ = np.linalg.qr(g)
            norms = np.linalg.norm(rng.standard_normal((input_dim, input_dim)), axis=1)
            freqs.append(q * norms[:, None])
        W = np.vstack(freqs)[:m]
        # exact second moment: sum of squared radii = m * input_dim
        self.freqs = W * math.sqrt(m * input_dim / float((W**2).sum()))
        self.out_dim = feature_count + 1

    def features(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if X.shape[1] != self.input_dim:
            raise StructuralError("input dimension mismatch")
        U = (X / self.delta) @ self.freqs.T
        m = self.freqs.shape[0]
        z = np.hstack([np.cos(U), np.sin(U)]) / math.sqrt(m)
        pad = np.ones((X.shape[0], 1))
        return (self.delta / math.sqrt(2.0)) * np.hstack([z, pad])

    @staticmethod
    def exact_distance(d, delta: float):
        """Closed-form image distance delta*sqrt(1 - exp(-(d/delta)^2/2))."""
        t = np.asarray(d, dtype=np.float64) / delta
        return delta * np.sqrt(1.0 - np.exp(-0.5 * t * t))


def truncation_map(
    x: np.ndarray, delta: float, feature_count: int, rng
) -> np.ndarray:
    """One-shot feature vector for a single Euclidean point."""
    x = np.atleast_2d(x)
    return TruncationMap(delta, feature_count, x.shape[1], rng).features(x)[0]


# -- distance-to-random-subset embedding ---------------------------------------


def bourgain_embed(S: PointSet, rng, trials: int = 64) -> EmbeddingMap:
    """1-Lipschitz embedding from distances to random subsets at geometric
    inclusion rates e^-1, ..., e^-L with L = ceil(log n)."""
    n = len(S)
    L = max(1, math.ceil(math.log(n))) if n > 1 else 1
    diam = float(S.dist.max())
    feats = np.empty((n, L * trials))
    col = 0
    for i in range(1, L + 1):
        prob = math.exp(-i)
        for _ in range(trials):
            mask = rng.random(n) < prob
            if mask.any():
                d = S.dist[:, mask].min(axis=1)
            else:
                d = np.full(n, diam + 1.0)  # empty-set convention, truncated below
            feats[:, col] = np.minimum(d, diam)
            col += 1
    feats /= math.sqrt(L * trials)
    return EmbeddingMap.from_features(
        S, feats, 1.0, {"construction": "bourgain", "levels": L, "trials": trials}
    )


# -- net anchor map -------------------------------------------------------------


def maximal_separated_subset(S: PointSet, candidates, gap: float) -> list[int]:
    """Greedy maximal subset with pairwise distances strictly > gap."""
    chosen: list[int] = []
    for i in candidates:
        if all(S.dist[i, j] > gap for j in chosen):
            chosen.append(int(i))
    return chosen


def net_anchor_map(
    U, r: float, delta: float, D: float, base_map: EmbeddingMap, S: PointSet
) -> EmbeddingMap:
    """Append a distance-to-net coordinate to a base map, both scaled by
    1/sqrt(2).  ``U`` is the candidate set (already intersected with whatever
    growth-center set applies); requires delta >= 9 D r."""
    if delta < 9.0 * D * r:
        raise DomainError("need delta >= 9 D r")
    net = maximal_separated_subset(S, U, 2.0 * r)
    net_arr = np.asarray(net, dtype=np.int64)

    def eval_fn(idx):
        base = base_map.evaluate(idx)
        dn = S.dist[np.ix_(idx, net_arr)].min(axis=1)
        return np.hstack([base, dn[:, None]]) / math.sqrt(2.0)

    lip = math.sqrt((base_map.lip_witness**2 + 1.0) / 2.0)
    return EmbeddingMap(
        S, eval_fn, base_map.out_dim + 1, lip,
        {"construction": "net_anchor", "net": net, "r": r, "delta": delta, "D": D},
    )


# -- localized map ---------------------------------------------------------------


def cutoff_weights(S: PointSet, partition, delta: float) -> np.ndarray:
    """min(1, d(z, complement of z's cluster)/delta) per point."""
    n = len(S)
    out = np.ones(n)
    lab = partition.label_array(n)
    for cid in range(lab.max() + 1):
        members = np.nonzero(lab == cid)[0]
        others = np.nonzero(lab != cid)[0]
        if others.size:
            d = S.dist[np.ix_(members, others)].min(axis=1)
            out[members] = np.minimum(1.0, d / delta)
    return out


def localized_map(
    C,
    delta: float,
    beta: float,
    sub_map_factory,
    S: PointSet,
    rng,
    trials: int = 8,
    feature_count: int = 128,
    kappa: float | None = None,
    pad_trials: int = 40,
) -> EmbeddingMap:
    """Glue per-cluster sub-maps along padded partitions of C extended to S.

    Partitions are carved at delta0 = 16 * kappa * (beta+1) * log|C| * delta
    (kappa fitted from padding statistics when not supplied), extended to S
    with join radius 4*(beta+1)*delta, and each point contributes
    (cutoff/2) * G(f_cluster(z)) per trial, averaged over trials.
    """
    C = np.asarray(sorted(C), dtype=np.int64)
    if C.size < 2:
        raise DomainError("need at least two anchor points")
    SC = PointSet(S.coords[C], S.p, S.weights, [S.labels[i] for i in C])
    if kappa is None:
        _, kappa = fit_padding_constants(
            SC, float(SC.dist.max()) or 1.0, pad_trials, seed=int(rng.integers(2**31))
        )
    logc = math.log(C.size)
    delta0 = 16.0 * kappa * (beta + 1.0) * logc * delta
    far = 4.0 * (beta + 1.0) * delta

    # common output dimension across clusters
    probe = sub_map_factory(tuple(range(len(S))))
    sub_dim = probe.out_dim
    blocks = []
    for t in range(trials):
        local = padded_partition(SC, delta0, rng)
        remapped = tuple(tuple(int(C[i]) for i in cl) for cl in local.clusters)
        P = extend_partition(Partition(remapped, delta0, BoundMode.DIAMETER), S, far)
        cut = cutoff_weights(S, P, delta)
        G = TruncationMap(delta, feature_count, sub_dim, rng)
        feats = np.zeros((len(S), G.out_dim))
        for cluster in P.clusters:
            idx = np.asarray(cluster, dtype=np.int64)
            f = sub_map_factory(tuple(int(i) for i in cluster))
            vals = f.evaluate(idx)
            if vals.shape[1] < sub_dim:
                vals = np.hstack([vals, np.zeros((idx.size, sub_dim - vals.shape[1]))])
            feats[idx] = G.features(vals[:, :sub_dim])
        blocks.append(0.5 * cut[:, None] * feats)
    feats = np.hstack(blocks) / math.sqrt(trials)
    return EmbeddingMap.from_features(
        S, feats, 1.0,
        {"construction": "localized", "delta": delta, "beta": beta,
         "kappa": kappa, "delta0": delta0, "trials": trials},
    )


# -- scale indices ----------------------------------------------------------------


@dataclass(frozen=True)
class ScaleIndex:
    i: int | None      # floor(log2 d(x,y)); None for identical points
    k: int             # critical growth index in 1..n


def scale_indices(S: PointSet, x: int, y: int, r_values, R_value: float) -> ScaleIndex:
    """Dyadic scale index of the pair plus the smallest k such that x lies in
    every growth-center set at levels k..n (always well defined: the level-n
    set is everything)."""
    n = len(S)
    d = float(S.dist[x, y])
    if d == 0.0:
        return ScaleIndex(None, 1)
    i = int(math.floor(math.log2(d)))
    r_values = list(r_values)
    if len(r_values) != n:
        raise StructuralError("need one inner radius per level 1..n")
    big = int((S.dist[x] <= R_value).sum())
    k = 1
    for level in range(n, 0, -1):
        small = int((S.dist[x] <= r_values[level - 1]).sum())
        if big > level * small:
            k = level + 1
            break
    if k > n:
        raise StructuralError("growth index escaped its range")
    return ScaleIndex(i, k)


# -- multiscale combination ---------------------------------------------------------


def combine_scales(maps: list[EmbeddingMap], weights) -> EmbeddingMap:
    """Weighted block direct sum; Lipschitz witness sqrt(sum w^2 L^2)."""
    weights = np.asarray(weights, dtype=np.float64)
    if len(maps) != weights.size or not maps:
        raise StructuralError("need one weight per map")
    S = maps[0].S
    if any(m.S is not S for m in maps):
        raise StructuralError("maps must share one point set")

    def eval_fn(idx):
        return np.hstack([w * m.evaluate(idx) for w, m in zip(weights, maps)])

    lip = math.sqrt(sum((w * m.lip_witness) ** 2 for w, m in zip(weights, maps)))
    return EmbeddingMap(
        S, eval_fn, int(sum(m.out_dim for m in maps)), lip,
        {"construction": "combined", "weights": weights.tolist()},
    )
