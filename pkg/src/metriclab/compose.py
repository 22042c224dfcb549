"""Induction on scales: composing coarse radially bounded partitions with
fine partitions of their enclosing balls, and pulling partitions back through
Lipschitz maps.

The refinement step is the constructive form of the recursion

    sep(delta)  <=  sep(K*delta)/K  +  sup over balls of sep(delta | ball):

every cluster of a radially K*delta-bounded partition sits inside the ball
of radius K*delta + eps around its radius witness; a snapshot partitioner
splits that ball's trace into radially delta-bounded pieces, and clusters
are intersected.  Clusters whose certified radius already meets the finer
scale pass through unchanged.  Radial boundedness of every composed cluster
is certified against explicit witnesses, never sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from metriclab import kernels
from metriclab.errors import DomainError, PullbackRejectionError, StructuralError
from metriclab.metric import AmbientMode, PointSet, greedy_net, radius_center
from metriclab.partitions import BoundMode, Partition, PartitionSampler

_EPS_FACTOR = 1e-9


@dataclass(frozen=True)
class ScaleLadder:
    """Geometric scale ladder delta, K*delta, ..., K^s_max*delta, with the top
    scale large enough that one cluster covers everything."""

    delta: float
    kstar: float
    s_max: int
    centers: tuple  # per-scale greedy-net snapshot centers (index lists)

    def scale(self, s: int) -> float:
        return self.kstar**s * self.delta


def build_ladder(S: PointSet, delta: float, kstar: float) -> ScaleLadder:
    if kstar <= 1.0:
        raise DomainError("the scale ratio must exceed 1")
    if delta <= 0:
        raise DomainError("delta must be positive")
    diam = float(S.dist.max())
    if 2.0 * diam <= delta:
        s_max = 1
    else:
        s_max = int(math.ceil(math.log(2.0 * diam / delta, kstar))) + 1
    if kstar**s_max * delta < 2.0 * diam:
        raise StructuralError("ladder top fails to cover the diameter")
    centers = tuple(
        tuple(greedy_net(S, kstar ** (s + 1) * delta)) for s in range(s_max)
    )
    return ScaleLadder(delta, kstar, s_max, centers)


def _dist_to_point(S: PointSet, coords: np.ndarray) -> np.ndarray:
    return kernels.cross_lp(S.coords, coords[None, :], S.weights, S.p)[:, 0]


def refine_partition(
    S: PointSet,
    outer: Partition,
    inner_fn,
    delta_inner: float,
    rng: np.random.Generator,
    eps: float | None = None,
) -> Partition:
    """One refinement: intersect each outer cluster with a fresh partition of
    its enclosing ball's trace.

    ``inner_fn(S, center, ball_radius, members, rng)`` must return a radially
    delta_inner-bounded partition of ``members`` carrying witnesses.  Outer
    clusters already certified at delta_inner pass through.
    """
    if outer.witnesses is None or outer.radii is None:
        raise StructuralError("refinement needs radius witnesses on the outer partition")
    eps = _EPS_FACTOR * delta_inner if eps is None else eps
    clusters, witnesses, radii = [], [], []
    for cid, cluster in enumerate(outer.clusters):
        idx = np.asarray(cluster, dtype=np.int64)
        if outer.radii[cid] <= delta_inner:
            clusters.append(tuple(int(i) for i in idx))
            witnesses.append(outer.witnesses[cid])
            radii.append(outer.radii[cid])
            continue
        center = np.asarray(outer.witnesses[cid], dtype=np.float64)
        ball_radius = outer.delta + eps
        d = _dist_to_point(S, center)
        members = np.nonzero(d <= ball_radius)[0]
        if not np.isin(idx, members).all():
            raise StructuralError("outer cluster escapes its witness ball")
        inner = inner_fn(S, center, ball_radius, members, rng)
        if inner.witnesses is None:
            raise StructuralError("inner partitions must carry witnesses")
        lab = inner.label_array(len(S))
        for sub_id in range(len(inner.clusters)):
            common = idx[lab[idx] == sub_id]
            if common.size == 0:
                continue
            w = np.asarray(inner.witnesses[sub_id], dtype=np.float64)
            rad = float(_dist_to_point(S, w)[common].max())
            if rad > delta_inner:
                raise StructuralError("inner partitioner violated its radial bound")
            clusters.append(tuple(int(i) for i in common))
            witnesses.append(w)
            radii.append(rad)
    if len(clusters) < len(outer.clusters):
        raise StructuralError("refinement lost clusters")
    return Partition(
        tuple(clusters), delta_inner, BoundMode.RADIAL, AmbientMode.CONTINUOUS_LP,
        tuple(witnesses), tuple(radii),
    )


def refine_once(
    outer: PartitionSampler, inner_fn, delta_inner: float
) -> PartitionSampler:
    """Sampler-level refinement: draw the outer partition and refine it with
    fresh inner draws from the same stream."""

    def fn(rng):
        P = outer.fn(rng)
        return refine_partition(outer.S, P, inner_fn, delta_inner, rng)

    return PartitionSampler(
        outer.S, delta_inner, BoundMode.RADIAL, fn,
        f"{outer.name}+refine", dict(outer.params, delta_inner=delta_inner),
        AmbientMode.CONTINUOUS_LP, outer.universe,
    )


def induct_scales(
    snapshot_fn,
    S: PointSet,
    delta: float,
    kstar: float,
    name: str = "induct",
    record=None,
) -> PartitionSampler:
    """Compose snapshot partitions down a scale ladder: start from one
    cluster at the top scale and refine scale by scale to ``delta``.

    ``record``, if given, is a callable (s, partition) invoked after each
    scale for per-scale accounting.
    """
    ladder = build_ladder(S, delta, kstar)

    def fn(rng):
        top_center = S.coords[ladder.centers[-1][0]]
        d = _dist_to_point(S, top_center)
        current = Partition(
            (tuple(range(len(S))),),
            ladder.scale(ladder.s_max),
            BoundMode.RADIAL,
            AmbientMode.CONTINUOUS_LP,
            (top_center.copy(),),
            (float(d.max()),),
        )
        for s in range(ladder.s_max - 1, -1, -1):
            current = refine_partition(S, current, snapshot_fn, ladder.scale(s), rng)
            if record is not None:
                record(s, current)
        return current

    return PartitionSampler(
        S, delta, BoundMode.RADIAL, fn, name,
        {"delta": delta, "kstar": kstar, "s_max": ladder.s_max},
        AmbientMode.CONTINUOUS_LP,
    )


def euclidean_pointset(img: np.ndarray) -> PointSet:
    """Wrap plain-Euclidean image vectors as a PointSet: fold coordinates so
    the weighted l_2 distance equals the plain norm."""
    img = np.atleast_2d(np.asarray(img, dtype=np.float64))
    k = img.shape[1]
    return PointSet(img * math.sqrt(k), 2.0)


def pullback_partition(
    images: np.ndarray,
    lip: float,
    target_sampler_factory,
    R: float,
    delta: float,
    S: PointSet,
    ambient: AmbientMode = AmbientMode.CONTINUOUS_LP,
    name: str = "pullback",
) -> PartitionSampler:
    """Pull a bounded separating partition of the image space back through a
    Lipschitz map given by precomputed point images.

    Precondition, verified for every point x before any draw: the preimage of
    the image ball of radius lip*R around images[x] has ambient radius at
    most delta.  ``target_sampler_factory(image_pointset)`` must return a
    sampler producing (lip*R)-diameter-bounded partitions of the image set.
    """
    images = np.atleast_2d(np.asarray(images, dtype=np.float64))
    n = len(S)
    if images.shape[0] != n:
        raise StructuralError("one image per point required")
    witnesses: list[np.ndarray] = []
    radii: list[float] = []
    img_d = np.linalg.norm(images[:, None, :] - images[None, :, :], axis=2)
    for x in range(n):
        ball = np.nonzero(img_d[x] <= lip * R)[0]
        rad, center = radius_center(ball, S, ambient)
        if rad > delta:
            raise PullbackRejectionError(
                f"preimage ball at point {x} has radius {rad:.6g} > {delta:.6g}",
                witness=x, achieved=rad,
            )
        witnesses.append(center)
        radii.append(rad)
    target_S = euclidean_pointset(images)
    target = target_sampler_factory(target_S)

    def fn(rng):
        Q = target.fn(rng)
        lab = Q.label_array(n)
        clusters, wit, rad = [], [], []
        for cid in range(len(Q.clusters)):
            members = np.nonzero(lab == cid)[0]
            if members.size == 0:
                continue
            rep = int(members[0])
            clusters.append(tuple(int(i) for i in members))
            wit.append(witnesses[rep])
            rad.append(float(_dist_to_point(S, witnesses[rep])[members].max()))
            if rad[-1] > delta:
                raise StructuralError("pullback cluster escaped its certified ball")
        return Partition(
            tuple(clusters), delta, BoundMode.RADIAL, ambient, tuple(wit), tuple(rad)
        )

    return PartitionSampler(
        S, delta, BoundMode.RADIAL, fn, name, {"R": R, "lip": lip},
        ambient,
    )
