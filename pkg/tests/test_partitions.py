import numpy as np
import pytest

from metriclab.errors import DomainError, StructuralError
from metriclab.metric import AmbientMode, PointSet
from metriclab.partitions import (
    BoundMode,
    Partition,
    PartitionSampler,
    bernoulli_event_bound,
    bernoulli_event_probability,
    bernoulli_subset,
    ckr_partition,
    ckr_sampler,
    estimate_padding,
    estimate_separation,
    extend_partition,
    padded_partition,
    padded_sampler,
)
from metriclab.reporting import wilson_halfwidth


def gauss_set(n, dim, seed=0, p=2.0):
    rng = np.random.default_rng(seed)
    return PointSet(rng.standard_normal((n, dim)), p)


def line_set(n, spacing=1.0):
    return PointSet((spacing * np.arange(n, dtype=float))[:, None], 2.0, np.array([1.0]))


def equilateral3(d=1.0):
    # one-hot triangle, rescaled so every pairwise distance equals d
    S0 = PointSet(np.eye(3), 2.0)
    scale = d / S0.dist[0, 1]
    return PointSet(np.eye(3) * scale, 2.0)


def test_partition_validation():
    S = line_set(4)
    P = Partition(((0, 1), (2, 3)), 1.0, BoundMode.DIAMETER)
    P.validate(S)
    with pytest.raises(StructuralError):
        Partition(((0, 1), (1, 2, 3)), 1.0, BoundMode.DIAMETER).validate(S)
    with pytest.raises(StructuralError):
        Partition(((0, 1),), 1.0, BoundMode.DIAMETER).validate(S)
    with pytest.raises(StructuralError):
        Partition(((0, 3), (1, 2)), 1.0, BoundMode.DIAMETER).validate(S)
    # radial with witnesses: the pair straddles its midpoint
    P2 = Partition(
        ((0, 1), (2, 3)), 0.5, BoundMode.RADIAL, AmbientMode.CONTINUOUS_LP,
        (np.array([0.5]), np.array([2.5])),
    )
    P2.validate(S)
    with pytest.raises(StructuralError):
        Partition(
            ((0, 1), (2, 3)), 0.4, BoundMode.RADIAL, AmbientMode.CONTINUOUS_LP,
            (np.array([0.5]), np.array([2.5])),
        ).validate(S)


def test_partition_json_roundtrip():
    P = Partition(((0, 2), (1,)), 1.5, BoundMode.DIAMETER)
    Q = Partition.from_json(P.to_json())
    assert Q.clusters == P.clusters and Q.delta == P.delta and Q.mode == P.mode


def test_ckr_single_point_and_far_pair():
    S1 = PointSet(np.zeros((1, 2)), 2.0)
    P = ckr_partition(S1, 1.0, np.random.default_rng(0))
    assert len(P.clusters) == 1
    far = PointSet(np.array([[0.0, 0.0], [10.0, 0.0]]), 2.0)
    for seed in range(20):
        P = ckr_partition(far, 1.0, np.random.default_rng(seed))
        assert len(P.clusters) == 2


def test_ckr_needs_euclidean_and_positive_delta():
    S = gauss_set(5, 2, p=3.0)
    with pytest.raises(DomainError):
        ckr_partition(S, 1.0, np.random.default_rng(0))
    with pytest.raises(DomainError):
        ckr_partition(gauss_set(5, 2), -1.0, np.random.default_rng(0))


def test_sampler_determinism_bytes():
    S = gauss_set(40, 3, seed=2)
    sam = ckr_sampler(S, 1.0)
    a = sam.draw(123, 7).to_json().encode()
    b = sam.draw(123, 7).to_json().encode()
    c = sam.draw(123, 8).to_json().encode()
    assert a == b
    assert a != c


def test_every_draw_validates():
    S = gauss_set(64, 4, seed=3)
    sam = ckr_sampler(S, 0.8)
    for t in range(50):
        P = sam.draw(5, t)
        for cluster in P.clusters:
            idx = np.asarray(cluster)
            if idx.size > 1:
                assert S.dist[np.ix_(idx, idx)].max() <= 0.8


def test_padded_two_far_points():
    far = PointSet(np.array([[0.0, 0.0], [50.0, 0.0]]), 2.0)
    sam = padded_sampler(far, 1.0)
    stats = estimate_padding(sam, far, 0.2499, 64, seed=11)
    assert stats.p_hat == 1.0


def test_padded_singleton():
    S1 = PointSet(np.zeros((1, 2)), 2.0)
    sam = padded_sampler(S1, 1.0)
    stats = estimate_padding(sam, S1, 0.49, 16, seed=0)
    assert stats.p_hat == 1.0


def test_padded_partition_bounded():
    S = gauss_set(48, 3, seed=9)
    for t in range(10):
        P = padded_partition(S, 1.7, np.random.default_rng(t))
        P.validate(S)


def test_bernoulli_subset():
    S = gauss_set(50, 2, seed=4)
    rng = np.random.default_rng(0)
    assert bernoulli_subset(S, 0.0, rng).size == 0
    assert bernoulli_subset(S, 1.0, rng).size == 50
    hits = sum(bernoulli_subset(S, 0.3, rng).size for _ in range(200))
    total = 200 * 50
    sd = np.sqrt(total * 0.3 * 0.7)
    assert abs(hits - 0.3 * total) <= 3 * sd


def test_bernoulli_event_two_point_exact():
    S = PointSet(np.array([[0.0], [10.0]]), 2.0, np.array([1.0]))
    # exact probability by enumerating the 4 subsets: {x} and {y} qualify
    trials = 4000
    p_hat = bernoulli_event_probability(
        S, 0, 1, 0.5, 1.0, 2.0, trials, np.random.default_rng(3)
    )
    sd = np.sqrt(0.5 * 0.5 / trials)
    assert abs(p_hat - 0.5) <= 3 * sd
    bound = bernoulli_event_bound(S, 0, 0.5, 1.0, 2.0)
    assert bound == pytest.approx(0.5)
    assert p_hat >= bound - 3 * wilson_halfwidth(int(p_hat * trials), trials)


def test_bernoulli_event_precondition():
    S = PointSet(np.array([[0.0], [1.0]]), 2.0, np.array([1.0]))
    with pytest.raises(DomainError):
        bernoulli_event_probability(S, 0, 1, 0.5, 1.0, 2.0, 10, np.random.default_rng(0))


def test_bernoulli_bound_scales_like_inverse_k():
    # bound at |B(x,R)| = e^i, |B(x,r)| = e^(i-1)/K stays within constant of 1/K
    for i in (3, 5, 7):
        for K in (1.5, 4.0, 16.0):
            big = np.e**i
            small = np.e ** (i - 1) / K
            prob = np.e**-i
            val = min((1 - prob) ** big, 1 - (1 - prob) ** small)
            assert 0.2 / K <= val <= 1.2 / K


def test_estimate_separation_degenerate_samplers():
    S = line_set(2)
    one = PartitionSampler(
        S, 1.0, BoundMode.DIAMETER, lambda rng: Partition(((0, 1),), 1.0, BoundMode.DIAMETER)
    )
    rep = estimate_separation(one, S, 50, seed=0)
    assert rep.sigma_hat == 0.0
    singles = PartitionSampler(
        S, 1.0, BoundMode.DIAMETER,
        lambda rng: Partition(((0,), (1,)), 1.0, BoundMode.DIAMETER),
    )
    rep = estimate_separation(singles, S, 50, seed=0)
    assert rep.sigma_hat == pytest.approx(1.0)


def test_ckr_equilateral_forced_singletons():
    S = equilateral3(1.0)
    sam = ckr_sampler(S, 0.5)
    rep = estimate_separation(sam, S, 100, seed=1)
    assert rep.sigma_hat == pytest.approx(0.5, abs=1e-12)


def test_padding_at_zero_radius_is_one():
    S = gauss_set(32, 2, seed=5)
    sam = ckr_sampler(S, 1.0)
    stats = estimate_padding(sam, S, 0.0, 20, seed=2)
    assert stats.p_hat == 1.0


def test_radial_vs_diameter_sigma_relation():
    # a radially delta-bounded draw is diameter-2delta-bounded; measuring the
    # same counts at the doubled scale can only increase sigma_hat
    S = gauss_set(24, 3, seed=6)
    delta = 1.2
    base = ckr_sampler(S, delta)

    def as_radial(rng):
        P = ckr_partition(S, delta, rng)
        return Partition(P.clusters, delta, BoundMode.RADIAL, AmbientMode.CONTINUOUS_LP, P.witnesses)

    radial = PartitionSampler(S, delta, BoundMode.RADIAL, as_radial, ambient=AmbientMode.CONTINUOUS_LP)

    def as_diam2(rng):
        P = ckr_partition(S, delta, rng)
        return Partition(P.clusters, 2 * delta, BoundMode.DIAMETER)

    diam2 = PartitionSampler(S, 2 * delta, BoundMode.DIAMETER, as_diam2)
    r1 = estimate_separation(radial, S, 60, seed=3)
    r2 = estimate_separation(diam2, S, 60, seed=3)
    assert r1.sigma_hat <= r2.sigma_hat + 1e-12


def test_extend_partition():
    S = line_set(6)  # points at 0..5
    base = Partition(((0, 1), (4, 5)), 1.0, BoundMode.DIAMETER)
    # point 2 joins the nearer cluster of point 1; point 3 joins that of 4
    ext = extend_partition(base, S, far_threshold=1.0)
    ext.validate(S)
    lab = ext.label_array(6)
    assert lab[2] == lab[1] and lab[3] == lab[4]
    # zero threshold: everything else becomes singletons
    ext0 = extend_partition(base, S, far_threshold=0.5)
    lab0 = ext0.label_array(6)
    assert lab0[2] not in (lab0[1], lab0[4])
    # midpoint ties break to the lowest cluster index
    S7 = line_set(3)  # 0,1,2 with clusters {0},{2}: 1 is equidistant
    tie = extend_partition(Partition(((0,), (2,)), 0.0, BoundMode.DIAMETER), S7, 1.5)
    labt = tie.label_array(3)
    assert labt[1] == labt[0] == 0
    # unchanged when the partition already covers S
    full = Partition(((0, 1, 2),), 10.0, BoundMode.DIAMETER)
    same = extend_partition(full, S7, 1.0)
    assert same.clusters == ((0, 1, 2),)
    with pytest.raises(StructuralError):
        extend_partition(Partition(((0, 9),), 1.0, BoundMode.DIAMETER), S7, 1.0)
