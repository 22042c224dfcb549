import numpy as np
import pytest

from metriclab.compose import (
    build_ladder,
    euclidean_pointset,
    induct_scales,
    pullback_partition,
    refine_partition,
)
from metriclab.errors import DomainError, PullbackRejectionError
from metriclab.mazur import RadialMapSpec, localized_radial_map
from metriclab.metric import AmbientMode, PointSet
from metriclab.partitions import (
    BoundMode,
    Partition,
    carve_subset,
    ckr_sampler,
    estimate_separation,
)
from metriclab.rngutil import rng_from


def gauss_set(n, dim, seed=0, p=2.0):
    rng = np.random.default_rng(seed)
    return PointSet(rng.standard_normal((n, dim)), p)


def ckr_snapshot(delta_inner):
    """Snapshot partitioner: carve the ball trace at the inner scale."""

    def fn(S, center, ball_radius, members, rng):
        return carve_subset(S, members, delta_inner, rng)

    return fn


def top_partition(S):
    w = S.coords[0].copy()
    from metriclab.compose import _dist_to_point

    d = _dist_to_point(S, w)
    return Partition(
        (tuple(range(len(S))),), float(d.max()) * 2.0, BoundMode.RADIAL,
        AmbientMode.CONTINUOUS_LP, (w,), (float(d.max()),),
    )


def test_refine_singletons_and_passthrough():
    S = gauss_set(20, 3, seed=1)
    outer = top_partition(S)

    def singleton_fn(S_, center, ball_radius, members, rng):
        return Partition(
            tuple((int(i),) for i in members), 0.0, BoundMode.RADIAL,
            AmbientMode.CONTINUOUS_LP,
            tuple(S_.coords[i].copy() for i in members),
            tuple(0.0 for _ in members),
        )

    fine = refine_partition(S, outer, singleton_fn, outer.radii[0] / 2, rng_from(0, 0))
    assert len(fine.clusters) == 20
    # pass-through: inner scale above the certified radius keeps the cluster
    same = refine_partition(S, outer, ckr_snapshot(1.0), outer.radii[0] * 1.01, rng_from(0, 1))
    assert same.clusters == outer.clusters
    assert len(same.clusters) == 1


def test_refine_cluster_count_monotone_and_validates():
    S = gauss_set(40, 3, seed=2)
    outer = top_partition(S)
    delta_inner = outer.radii[0] / 1.5
    fine = refine_partition(S, outer, ckr_snapshot(delta_inner), delta_inner, rng_from(1, 0))
    assert len(fine.clusters) >= len(outer.clusters)
    fine.validate(S)
    assert all(r <= delta_inner for r in fine.radii)


def test_ladder_and_induct_trivial_cases():
    S1 = PointSet(np.zeros((1, 2)), 2.0)
    sam = induct_scales(ckr_snapshot(1.0), S1, 1.0, 1.25)
    P = sam.draw(0, 0)
    assert len(P.clusters) == 1
    S = gauss_set(12, 2, seed=3)
    big_delta = 2.0 * float(S.dist.max()) + 1.0
    sam2 = induct_scales(ckr_snapshot(big_delta), S, big_delta, 1.25)
    rep = estimate_separation(sam2, S, 10, seed=5)
    assert rep.sigma_hat == 0.0
    assert len(sam2.draw(0, 0).clusters) == 1


def test_ladder_invariants():
    S = gauss_set(24, 2, seed=4)
    lad = build_ladder(S, 0.5, 1.25)
    assert lad.kstar**lad.s_max * lad.delta >= 2 * float(S.dist.max())
    with pytest.raises(DomainError):
        build_ladder(S, 0.5, 1.0)


def _scale_fn_factory(ladder):
    def make(s):
        return ckr_snapshot(ladder.scale(s))

    return make


def test_induct_geometric_series_bound():
    # composed separation is at most the K^-s weighted sum of per-scale
    # snapshot separations, measured on the balls that actually occur
    S = gauss_set(48, 3, seed=6)
    kstar = 1.6
    delta = float(np.quantile(S.dist[S.dist > 0], 0.3))
    ladder = build_ladder(S, delta, kstar)
    seen_balls = {s: {} for s in range(ladder.s_max)}
    trace = []

    def snapshot(S_, center, ball_radius, members, rng):
        return carve_subset(S_, members, trace[-1], rng)

    def recording_snapshot(s):
        def fn(S_, center, ball_radius, members, rng):
            seen_balls[s][center.tobytes()] = (center, members)
            return carve_subset(S_, members, ladder.scale(s), rng)

        return fn

    # run the composition manually so each scale uses its own snapshot fn
    trials = 120
    n = len(S)
    counts = np.zeros((n, n), dtype=np.uint32)
    from metriclab import kernels
    from metriclab.compose import _dist_to_point

    for t in range(trials):
        rng = rng_from(7, t)
        w = S.coords[ladder.centers[-1][0]]
        d0 = _dist_to_point(S, w)
        current = Partition(
            (tuple(range(n)),), ladder.scale(ladder.s_max), BoundMode.RADIAL,
            AmbientMode.CONTINUOUS_LP, (w.copy(),), (float(d0.max()),),
        )
        for s in range(ladder.s_max - 1, -1, -1):
            current = refine_partition(S, current, recording_snapshot(s), ladder.scale(s), rng)
        kernels.pair_sep_accumulate(current.label_array(n), counts)
    from metriclab.partitions import separation_report_from_counts

    rep = separation_report_from_counts(counts, S.dist, delta, trials)

    bound = 0.0
    for s in range(ladder.s_max):
        worst = 0.0
        for center, members in seen_balls[s].values():
            if members.size < 2:
                continue
            sub_counts = np.zeros((members.size, members.size), dtype=np.uint32)
            for t in range(trials):
                P = carve_subset(S, members, ladder.scale(s), rng_from(99, s, t))
                lab_global = P.label_array(n)
                kernels.pair_sep_accumulate(lab_global[members], sub_counts)
            sub = separation_report_from_counts(
                sub_counts, S.dist[np.ix_(members, members)], ladder.scale(s), trials
            )
            worst = max(worst, sub.sigma_hat)
        bound += worst / kstar**s
    i, j, d, phat, lo, hi = rep.argmax_pair
    half = (hi - lo) / 2 * delta / d
    assert rep.sigma_hat <= bound + 3 * half


def test_pullback_identity_and_scaling():
    S = gauss_set(20, 3, seed=8)
    delta = 1.0
    images = S.coords * np.sqrt(S.weights)  # plain-Euclidean copy of the set

    def factory(tS):
        return ckr_sampler(tS, delta)

    sam = pullback_partition(images, 1.0, factory, delta, delta, S)
    rep = estimate_separation(sam, S, 60, seed=9)
    direct = estimate_separation(ckr_sampler(S, delta), S, 60, seed=9)
    assert rep.sigma_hat == pytest.approx(direct.sigma_hat, rel=1e-9)
    # scaling by 1/2 (Lipschitz 1/2) with the carve at half scale: the carve
    # is scale-covariant, so the separation probabilities are unchanged
    sam2 = pullback_partition(
        images * 0.5, 0.5, lambda tS: ckr_sampler(tS, 0.5 * delta), delta, delta, S
    )
    rep2 = estimate_separation(sam2, S, 60, seed=9)
    assert rep2.sigma_hat == pytest.approx(rep.sigma_hat, rel=1e-9)


def test_pullback_precondition_rejection():
    S = gauss_set(10, 2, seed=10)
    images = np.zeros((10, 2))  # constant map: preimage of any ball is everything
    with pytest.raises(PullbackRejectionError) as err:
        pullback_partition(images, 1.0, lambda tS: ckr_sampler(tS, 0.1), 0.1, 0.01, S)
    assert 0 <= err.value.witness < 10


def test_pullback_through_radial_map():
    # Mazur-localized map into l_2, carve the image, pull back: radially
    # bounded with sigma_hat <= sigma_target * delta / R + slack
    rng = np.random.default_rng(11)
    p = 4.0
    S = PointSet(rng.standard_normal((24, 6)) * 0.4, p)
    z = S.coords.mean(axis=0)
    delta = float(S.dist.max())  # every point within K*delta of z
    f = localized_radial_map(RadialMapSpec(z, delta, p))
    images = f.forward(S.coords) * np.sqrt(S.weights)  # plain Euclidean
    L = f.lip_witness
    R = f.image_ball_radius / L  # L*R equals the certified image radius

    def factory(tS):
        return ckr_sampler(tS, L * R)

    sam = pullback_partition(images, L, factory, R, delta, S)
    trials = 80
    rep = estimate_separation(sam, S, trials, seed=12)
    tgt = estimate_separation(factory(euclidean_pointset(images)), euclidean_pointset(images), trials, seed=12)
    i, j, d, phat, lo, hi = rep.argmax_pair
    half = (hi - lo) / 2 * delta / d if d > 0 else 0.0
    assert rep.sigma_hat <= tgt.sigma_hat * delta / R + 3 * half
    for t in range(10):
        P = sam.draw(13, t)
        assert all(r <= delta for r in P.radii)
