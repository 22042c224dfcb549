"""End-to-end separation pipeline for finite subsets of weighted l_p, p >= 2.

One scale step partitions a snapshot ball B(z, K_*^{s+1} delta + eps0) of the
augmented set as follows:

  1. anchors: a net of the snapshot at granularity K_*^s delta/(8D) - delta/(9D),
  2. the localized radial power map at (z, K_*^s delta), folded to plain
     Euclidean coordinates,
  3. a random-sign projection of the anchor images to k = O(log #anchors)
     dimensions, extended nonexpansively to the remaining snapshot points,
  4. ball carving of the projected images at diameter p*K_*^s delta/(8D)
     (the image-side scale; the map has Lipschitz witness p),
  5. pullback: each carve cluster is certified inside the l_p ball of radius
     (1 - 1/(16 p^2)) * K_*^s delta around z + (x_c - z)/p, where x_c is the
     preimage of its carve center.

Scale steps compose by induction on scales with ratio K_* = K - 1/(2D),
K = 1 + 1/(4p), D = p/(K*gamma).  Certification is per trial and exact
(explicit witnesses); a certification failure names its witness point and
triggers a halving of gamma (at most 3, logged).

Snapshot-ball structures are deterministic functions of (scale, center) and
are cached across trials; carve draws are per (trial, ball) and shared by
all clusters refined inside the same ball, matching the common-refinement
construction.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass

import numpy as np

from metriclab import kernels
from metriclab.errors import DomainError, PullbackRejectionError, StructuralError
from metriclab.metric import (
    AmbientMode,
    PointSet,
    greedy_net_subset,
    lp_sphere_sample,
    neighborhood_sample,
    uniform_weights,
)
from metriclab.partitions import (
    BoundMode,
    Partition,
    PartitionSampler,
    separation_report_from_counts,
)
from metriclab.reduce import ReducedMap
from metriclab.rngutil import derive_seed, rng_from

log = logging.getLogger("metriclab.pipeline")

_BALL_STREAM = 0x0B
_TRIAL_STREAM = 0x7A


@dataclass(frozen=True)
class PipelineConfig:
    p: float
    delta: float
    gamma: float = 0.14
    neighborhood_fraction: float | None = None  # of delta; default 1/(9D)
    neighborhood_count: int = 64
    trials: int = 200
    seed: int = 0
    anchor_mode: str = "net"  # "net" of the snapshot, or "base" points only
    doubling_check: bool = False
    max_gamma_halvings: int = 3
    c_jl: float = 24.0

    def __post_init__(self):
        if self.p < 2:
            raise DomainError("the pipeline needs p >= 2")
        if self.delta <= 0:
            raise DomainError("delta must be positive")
        if self.anchor_mode not in ("net", "base"):
            raise DomainError("anchor_mode must be 'net' or 'base'")
        if self.kstar <= 1.0:
            raise StructuralError("K_* must exceed 1 (gamma too large)")

    @property
    def K(self) -> float:
        return 1.0 + 1.0 / (4.0 * self.p)

    @property
    def D(self) -> float:
        return self.p / (self.K * self.gamma)

    @property
    def kstar(self) -> float:
        return self.K - 1.0 / (2.0 * self.D)

    @property
    def neighborhood_radius(self) -> float:
        frac = self.neighborhood_fraction
        if frac is None:
            frac = 1.0 / (9.0 * self.D)
        return frac * self.delta

    def halved_gamma(self) -> "PipelineConfig":
        return PipelineConfig(
            self.p, self.delta, self.gamma / 2.0, self.neighborhood_fraction,
            self.neighborhood_count, self.trials, self.seed, self.anchor_mode,
            self.doubling_check, self.max_gamma_halvings, self.c_jl,
        )


@dataclass(frozen=True)
class SnapshotSpec:
    """Per-scale radii of the snapshot construction."""

    s: int
    scale: float        # K_*^s delta
    alpha: float        # (K - 1/(8D)) K_*^s delta: anchor containment radius
    beta_net: float     # net granularity K_*^s delta/(8D) - delta/(9D)
    eps0: float         # ball slack ((3/8) K_*^s - 1/9) delta / D
    ball_radius: float  # K_*^{s+1} delta + eps0
    image_scale: float  # carve diameter in the projected space

    @classmethod
    def at(cls, cfg: PipelineConfig, s: int) -> "SnapshotSpec":
        K, D, ks = cfg.K, cfg.D, cfg.kstar
        scale = ks**s * cfg.delta
        alpha = (K - 1.0 / (8.0 * D)) * scale
        beta = scale / (8.0 * D) - cfg.delta / (9.0 * D)
        eps0 = ((3.0 / 8.0) * ks**s - 1.0 / 9.0) * cfg.delta / D
        if not (alpha > beta > 0.0):
            raise StructuralError("snapshot radii out of order")
        return cls(s, scale, alpha, beta, eps0, ks ** (s + 1) * cfg.delta + eps0,
                   cfg.p * scale / (8.0 * D))


def _witness_key(coords: np.ndarray) -> int:
    return int.from_bytes(hashlib.sha256(coords.tobytes()).digest()[:8], "big")


class _Ball:
    """Frozen per-(scale, center) snapshot structure."""

    def __init__(self, engine: "SeparationEngine", spec: SnapshotSpec, center: np.ndarray):
        self.spec = spec
        self.center = center
        S = engine.S
        cfg = engine.cfg
        d = kernels.cross_lp(S.coords, center[None, :], S.weights, S.p)[:, 0]
        self.members = np.nonzero(d <= spec.ball_radius)[0]
        m = self.members.size
        self.trivial = m <= 1
        if self.trivial:
            return
        rng = rng_from(cfg.seed, _BALL_STREAM, spec.s, _witness_key(center))
        K = cfg.K
        scale_f = K * spec.scale
        rel = (S.coords[self.members] - center) / scale_f
        mazur_img = scale_f * np.abs(rel) ** (S.p / 2.0) * np.sign(rel)
        plain = mazur_img * np.sqrt(S.weights)
        if cfg.anchor_mode == "base":
            anchor_pos = np.nonzero(self.members < engine.base_count)[0]
            if anchor_pos.size < 2:
                anchor_pos = None
        else:
            anchor_pos = None
        if anchor_pos is None:
            net = greedy_net_subset(S, self.members, spec.beta_net)
            anchor_pos = np.searchsorted(self.members, np.asarray(net, dtype=np.int64))
        self.anchor_pos = np.asarray(sorted(set(int(i) for i in anchor_pos)), dtype=np.int64)
        if self.anchor_pos.size < 2:
            # the whole snapshot sits inside one beta-granularity ball around
            # its first anchor: one cluster, re-centered on that member
            self.single_cluster = True
            self.images = None
            anchor = self.members[self.anchor_pos[0]] if self.anchor_pos.size else self.members[0]
            self.fallback_center = S.coords[anchor].copy()
            return
        self.single_cluster = False
        reduced = ReducedMap(plain[self.anchor_pos], rng, c_jl=cfg.c_jl, sequential=True)
        self.k = reduced.k
        images = np.empty((m, reduced.k))
        images[self.anchor_pos] = reduced.images
        others = np.setdiff1d(np.arange(m), self.anchor_pos)
        for pos in others:  # deterministic order: sequential extension
            images[pos] = reduced.query(plain[pos])
        self.images = images
        # carve centers: net of the images at image_scale/8
        self.centers = _greedy_net_plain(images, spec.image_scale / 8.0)
        from metriclab.reduce import sq_dists

        self.img_dists = np.sqrt(sq_dists(images, images[self.centers]))
        # certified pullback data
        self.pull_radius = (1.0 - 1.0 / (4.0 * S.p)) * scale_f
        if self.pull_radius >= spec.scale:
            raise StructuralError("pullback radius fails to contract")
        self._verify_precondition(engine)

    def pull_center(self, engine: "SeparationEngine", member_pos: int) -> np.ndarray:
        x = engine.S.coords[self.members[member_pos]]
        return self.center + (x - self.center) / engine.S.p

    def _verify_precondition(self, engine: "SeparationEngine") -> None:
        """Radial precondition at every snapshot point: the preimage of the
        image ball of radius image_scale around phi(x) sits inside the
        certified l_p ball (hence has radius below the scale)."""
        from metriclab.reduce import sq_dists

        S = engine.S
        coords = S.coords[self.members]
        thr2 = self.spec.image_scale**2
        all_img_d = sq_dists(self.images, self.images) if self.members.size <= 4096 else None
        for pos in range(self.members.size):
            if all_img_d is None:
                img_d = sq_dists(self.images[pos : pos + 1], self.images)[0]
            else:
                img_d = all_img_d[pos]
            near = np.nonzero(img_d <= thr2)[0]
            c = self.pull_center(engine, pos)
            dd = kernels.cross_lp(coords[near], c[None, :], S.weights, S.p)[:, 0]
            worst = float(dd.max())
            if worst > self.pull_radius * (1.0 + 1e-9):
                raise PullbackRejectionError(
                    f"radial precondition failed at point {int(self.members[pos])}: "
                    f"{worst:.6g} > {self.pull_radius:.6g} (gamma too large)",
                    witness=int(self.members[pos]), achieved=worst,
                )

    def carve(self, rng) -> np.ndarray:
        """Labels of the members under one carve draw (-1 impossible: the
        centers form an image_scale/8 net and rho >= image_scale/4)."""
        order = rng.permutation(len(self.centers))
        rho = rng.uniform(self.spec.image_scale / 4.0, self.spec.image_scale / 2.0)
        labels = kernels.ckr_assign(self.img_dists, order, rho)
        if labels.min() < 0:
            raise StructuralError("carve centers failed to cover the snapshot")
        return labels, order


def _greedy_net_plain(points: np.ndarray, r: float) -> list[int]:
    sq = np.einsum("ij,ij->i", points, points)
    r2 = r * r
    covered = np.zeros(points.shape[0], dtype=bool)
    net: list[int] = []
    for i in range(points.shape[0]):
        if covered[i]:
            continue
        net.append(i)
        d2 = sq + sq[i] - 2.0 * (points @ points[i])
        covered |= d2 <= r2
    return net


class SeparationEngine:
    """Induction-on-scales sampler over a fixed (augmented) point set."""

    def __init__(self, cfg: PipelineConfig, S: PointSet, base_count: int | None = None):
        self.cfg = cfg
        self.S = S
        self.base_count = len(S) if base_count is None else base_count
        diam = float(S.dist.max())
        ks = cfg.kstar
        if 2.0 * diam <= cfg.delta:
            self.s_max = 1
        else:
            self.s_max = int(math.ceil(math.log(2.0 * diam / cfg.delta, ks))) + 1
        self.specs = [SnapshotSpec.at(cfg, s) for s in range(self.s_max)]
        self._balls: dict[tuple[int, int], _Ball] = {}
        # deterministic top witness: the first point of a coarse net
        top = greedy_net_subset(S, np.arange(len(S)), ks**self.s_max * cfg.delta)[0]
        self.top_witness = S.coords[top].copy()
        self.top_radius = float(
            kernels.cross_lp(S.coords, self.top_witness[None, :], S.weights, S.p).max()
        )
        self.scale_hits: dict[int, int] = {}

    def scale(self, s: int) -> float:
        return self.cfg.kstar**s * self.cfg.delta

    def _ball(self, s: int, center: np.ndarray) -> _Ball:
        key = (s, _witness_key(center))
        ball = self._balls.get(key)
        if ball is None:
            ball = _Ball(self, self.specs[s], center)
            if len(self._balls) > 4096:
                self._balls.clear()  # bound memory; rebuilds are deterministic
            self._balls[key] = ball
        return ball

    def run_trial(self, seed: int, t: int, record=None) -> Partition:
        S = self.S
        n = len(S)
        clusters = [(np.arange(n), self.top_witness, self.top_radius)]
        for s in range(self.s_max - 1, -1, -1):
            scale_s = self.scale(s)
            carved: dict[tuple[int, int], tuple] = {}
            new: list[tuple] = []
            for idx, w, r in clusters:
                if r <= scale_s or idx.size == 1:
                    new.append((idx, w, r))
                    continue
                ball = self._ball(s, np.asarray(w, dtype=np.float64))
                if ball.trivial or ball.single_cluster:
                    # the whole snapshot is one tight clump: keep the cluster,
                    # re-centered on an actual member
                    center = (
                        ball.fallback_center
                        if getattr(ball, "fallback_center", None) is not None
                        else S.coords[idx[0]]
                    )
                    rad = float(
                        kernels.cross_lp(S.coords[idx], center[None, :], S.weights, S.p).max()
                    )
                    if rad > scale_s:
                        raise PullbackRejectionError(
                            "degenerate snapshot failed its radial bound",
                            witness=int(idx[0]), achieved=rad,
                        )
                    new.append((idx, center, rad))
                    continue
                key = (s, _witness_key(ball.center))
                if key not in carved:
                    rng = rng_from(seed, _TRIAL_STREAM, t, s, key[1])
                    carved[key] = ball.carve(rng)
                labels, order = carved[key]
                pos_of = np.searchsorted(ball.members, idx)
                sub = labels[pos_of]
                for lab in np.unique(sub):
                    members = idx[sub == lab]
                    center_pos = ball.centers[order[lab]]
                    c = ball.pull_center(self, center_pos)
                    dd = kernels.cross_lp(S.coords[members], c[None, :], S.weights, S.p)[:, 0]
                    rad = float(dd.max())
                    if rad > ball.pull_radius * (1.0 + 1e-9):
                        raise PullbackRejectionError(
                            "pullback cluster escaped its certified ball",
                            witness=int(members[int(dd.argmax())]), achieved=rad,
                        )
                    # a member center often certifies a much smaller radius;
                    # prefer it (more pass-throughs at finer scales)
                    rep = S.coords[ball.members[center_pos]]
                    dd2 = kernels.cross_lp(S.coords[members], rep[None, :], S.weights, S.p)[:, 0]
                    rad2 = float(dd2.max())
                    if rad2 < rad:
                        c, rad = rep, rad2
                    new.append((members, c, rad))
                self.scale_hits[s] = self.scale_hits.get(s, 0) + 1
            clusters = new
            if record is not None:
                record(s, clusters)
        return Partition(
            tuple(tuple(int(i) for i in idx) for idx, _, _ in clusters),
            self.cfg.delta, BoundMode.RADIAL, AmbientMode.CONTINUOUS_LP,
            tuple(np.asarray(w, dtype=np.float64) for _, w, _ in clusters),
            tuple(float(r) for _, _, r in clusters),
        )


class EngineSampler(PartitionSampler):
    """PartitionSampler facade over a SeparationEngine."""

    def __init__(self, engine: SeparationEngine):
        self.engine = engine
        super().__init__(
            engine.S, engine.cfg.delta, BoundMode.RADIAL, fn=None,
            name="lp-pipeline",
            params={"p": engine.S.p, "gamma": engine.cfg.gamma},
            ambient=AmbientMode.CONTINUOUS_LP,
        )

    def draw(self, seed: int, index: int) -> Partition:
        P = self.engine.run_trial(seed, index)
        if self.validate_draws:
            P.validate(self.S, self.universe)
        return P


def snapshot_partitioner(
    cfg: PipelineConfig, S: PointSet, z: np.ndarray, s: int, rng: np.random.Generator
) -> Partition:
    """One snapshot partition of S intersected with the scale-s ball at z.

    Returns a radially K_*^s delta-bounded partition (continuous ambient,
    explicit witnesses) of the trace; the partition covers only the members.
    """
    engine = SeparationEngine(cfg, S)
    ball = engine._ball(s, np.asarray(z, dtype=np.float64))
    if ball.trivial:
        members = ball.members
        if members.size == 0:
            raise DomainError("empty snapshot")
        w = S.coords[members[0]].copy()
        return Partition(
            (tuple(int(i) for i in members),), engine.scale(s), BoundMode.RADIAL,
            AmbientMode.CONTINUOUS_LP, (w,), (0.0,),
        )
    if ball.single_cluster:
        members = ball.members
        rad = float(
            kernels.cross_lp(S.coords[members], ball.center[None, :], S.weights, S.p).max()
        )
        return Partition(
            (tuple(int(i) for i in members),), engine.scale(s), BoundMode.RADIAL,
            AmbientMode.CONTINUOUS_LP, (ball.center.copy(),), (rad,),
        )
    labels, order = ball.carve(rng)
    clusters, wits, rads = [], [], []
    for lab in np.unique(labels):
        members = ball.members[labels == lab]
        c = ball.pull_center(engine, ball.centers[order[lab]])
        dd = kernels.cross_lp(S.coords[members], c[None, :], S.weights, S.p)[:, 0]
        rad = float(dd.max())
        if rad > ball.pull_radius * (1.0 + 1e-9):
            raise PullbackRejectionError(
                "snapshot cluster escaped its certified ball",
                witness=int(members[int(dd.argmax())]), achieved=rad,
            )
        clusters.append(tuple(int(i) for i in members))
        wits.append(c)
        rads.append(rad)
    return Partition(
        tuple(clusters), engine.scale(s), BoundMode.RADIAL,
        AmbientMode.CONTINUOUS_LP, tuple(wits), tuple(rads),
    )


@dataclass
class PipelineResult:
    sampler: EngineSampler
    report: object
    bound_value: float
    gamma_used: float
    augmented: PointSet
    base_count: int
    doubling_report: dict | None = None


def lp_separation_sampler(
    cfg: PipelineConfig, C: PointSet, store_pairs: bool | None = None
) -> PipelineResult:
    """Augment C with neighborhood samples at radius delta/(9D), build the
    induction-on-scales sampler, and estimate its separation constant.

    Records the shape of the theory bound K*D*sqrt(log n)/(K_*-1) alongside
    the estimate.  On a radial-precondition failure, gamma is halved (at most
    cfg.max_gamma_halvings times, each logged) and the run restarts.
    """
    attempt = cfg
    last_err: Exception | None = None
    for halving in range(cfg.max_gamma_halvings + 1):
        try:
            return _run_pipeline(attempt, C, store_pairs)
        except PullbackRejectionError as err:
            last_err = err
            log.warning(
                "gamma=%g rejected (witness %s): halving", attempt.gamma, err.witness
            )
            attempt = attempt.halved_gamma()
    raise last_err


def _run_pipeline(cfg: PipelineConfig, C: PointSet, store_pairs):
    rng = rng_from(cfg.seed, 0xAE)
    aug = neighborhood_sample(
        C, np.arange(len(C)), cfg.neighborhood_radius, cfg.neighborhood_count, rng
    )
    engine = SeparationEngine(cfg, aug, base_count=len(C))
    n = len(aug)
    counts = np.zeros((n, n), dtype=np.uint32)
    for t in range(cfg.trials):
        P = engine.run_trial(cfg.seed, t)
        kernels.pair_sep_accumulate(P.label_array(n), counts)
    report = separation_report_from_counts(
        counts, aug.dist, cfg.delta, cfg.trials, store_pairs
    )
    nbase = max(len(C), 2)
    bound = cfg.K * cfg.D * math.sqrt(math.log(nbase)) / (cfg.kstar - 1.0)
    doubling = None
    if cfg.doubling_check:
        from metriclab.metric import doubling_estimate

        lam = doubling_estimate(C, rng=rng_from(cfg.seed, 0xD0))
        spec0 = engine.specs[0]
        budget = lam ** math.ceil(math.log2(2.0 * spec0.alpha / spec0.beta_net))
        doubling = {"lambda_hat": lam, "net_budget": budget}
    return PipelineResult(
        EngineSampler(engine), report, bound, cfg.gamma, aug, len(C), doubling
    )


def random_lp_instance(n: int, dim: int, p: float, rng: np.random.Generator) -> PointSet:
    """n points: uniform l_p-sphere directions scaled by uniform radii."""
    w = uniform_weights(dim)
    coords = np.empty((n, dim))
    for i in range(n):
        coords[i] = rng.uniform(0.0, 1.0) * lp_sphere_sample(rng, dim, w, p)
    return PointSet(coords, p, w)


def net_thinned_instance(
    n: int, dim: int, rng: np.random.Generator, oversample: int = 4
) -> PointSet:
    """n Euclidean points with a minimum-distance floor: a Gaussian cloud
    thinned to the n first points of a greedy net at the largest granularity
    that still leaves n points (binary search).  The floor keeps the
    separation estimator's max over pairs away from the degenerate
    tiny-distance regime, which is the standard setup for benchmarking
    partition quality."""
    from metriclab.metric import greedy_net

    raw = PointSet(rng.standard_normal((oversample * n, dim)), 2.0)
    pos = raw.dist[raw.dist > 0]
    lo, hi = float(np.quantile(pos, 1e-4)), float(np.quantile(pos, 0.5))
    best = None
    for _ in range(20):
        mid = 0.5 * (lo + hi)
        net = greedy_net(raw, mid)
        if len(net) >= n:
            best, lo = net, mid
        else:
            hi = mid
    if best is None or len(best) < n:
        best = list(range(len(raw)))
    keep = sorted(best[:n])
    return PointSet(raw.coords[keep], 2.0)


def sep_growth_experiment(
    p_list, n_list, dim: int, trials: int, seed: int,
    delta_fractions=(0.25, 0.0625), neighborhood_count: int = 64,
):
    """sigma_hat growth table over (p, n) at delta = diam/4 and diam/16."""
    rows = []
    for p in p_list:
        for n in n_list:
            inst = random_lp_instance(n, dim, p, rng_from(seed, 0x157, int(p * 16), n))
            diam = float(inst.dist.max())
            for frac in delta_fractions:
                cfg = PipelineConfig(
                    p=p, delta=frac * diam, trials=trials,
                    seed=derive_seed(seed, int(p * 16), n, int(1 / frac)),
                    neighborhood_count=neighborhood_count,
                )
                res = lp_separation_sampler(cfg, inst, store_pairs=False)
                rows.append(
                    (p, n, dim, frac * diam, res.report.sigma_hat,
                     res.report.sigma_lo, res.report.sigma_hi, res.bound_value,
                     res.gamma_used, trials, seed)
                )
    return rows
