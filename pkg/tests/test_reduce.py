import math

import numpy as np
import pytest

from metriclab.errors import DomainError
from metriclab.reduce import (
    ReducedMap,
    ball_pullback_violations,
    jl_anchor_map,
    reduce_map_guarantee,
)


def test_jl_two_points():
    rng = np.random.default_rng(0)
    anchors = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 0.0]])
    k, jl = jl_anchor_map(anchors, rng)
    assert k == math.ceil(24 * math.log(2)) == 17
    img = jl.apply(anchors)
    ratio = np.linalg.norm(img[0] - img[1]) / np.linalg.norm(anchors[0] - anchors[1])
    assert 0.5 <= ratio <= 1.0


def test_jl_line_pairs_and_budget():
    rng = np.random.default_rng(1)
    anchors = np.linspace(0, 1, 12)[:, None] * np.ones((1, 5))
    k, jl = jl_anchor_map(anchors, rng)
    assert k <= 24 * math.log(12) + 1
    img = jl.apply(anchors)
    for i in range(12):
        for j in range(i + 1, 12):
            dd = np.linalg.norm(anchors[i] - anchors[j])
            di = np.linalg.norm(img[i] - img[j])
            assert 0.5 * dd <= di <= dd


def test_jl_rejects_duplicates():
    rng = np.random.default_rng(2)
    anchors = np.zeros((3, 4))
    with pytest.raises(DomainError):
        jl_anchor_map(anchors, rng)


def test_anchor_short_circuit_and_single_anchor_feasible():
    rng = np.random.default_rng(3)
    anchors = rng.standard_normal((6, 8))
    R = ReducedMap(anchors, rng)
    for i in range(6):
        assert np.array_equal(R.query(anchors[i]), R.images[i])
    # arbitrary query: certificate m(y) <= 0 up to tolerance
    x = rng.standard_normal(8)
    y = R.query(x)
    assert R.margin(x, y) <= 1e-6 * max(1.0, R._scale)


def test_midpoint_of_two_anchors():
    rng = np.random.default_rng(4)
    anchors = np.array([[0.0, 0.0], [1.0, 0.0]])
    R = ReducedMap(anchors, rng)
    d_img = np.linalg.norm(R.images[0] - R.images[1])
    mid = np.array([0.5, 0.0])
    y = R.query(mid)
    # the feasible set is the intersection of two balls of radius 1/2 around
    # the images; when the images are closer than 1, any point between works,
    # and the margin certificate must hold with m <= 0
    assert np.linalg.norm(y - R.images[0]) <= 0.5 + 1e-9
    assert np.linalg.norm(y - R.images[1]) <= 0.5 + 1e-9
    if abs(d_img - 1.0) < 1e-12:
        assert np.allclose(y, 0.5 * (R.images[0] + R.images[1]), atol=1e-6)


def test_sequential_queries_are_globally_nonexpansive():
    rng = np.random.default_rng(5)
    anchors = rng.standard_normal((12, 6))
    R = ReducedMap(anchors, rng)
    queries = rng.standard_normal((80, 6)) * 1.5
    imgs = R.batch_query(queries)
    # exact pairwise nonexpansiveness across all queried points and anchors
    allpts = np.vstack([anchors, queries])
    allimg = np.vstack([R.images, imgs])
    dd = np.linalg.norm(allpts[:, None, :] - allpts[None, :, :], axis=2)
    di = np.linalg.norm(allimg[:, None, :] - allimg[None, :, :], axis=2)
    assert np.all(di <= dd * (1 + 1e-5) + 1e-12)


def test_query_cache_hits():
    rng = np.random.default_rng(6)
    anchors = rng.standard_normal((5, 4))
    R = ReducedMap(anchors, rng)
    x = rng.standard_normal(4)
    y1 = R.query(x)
    n_hist = len(R._hist_pts)
    y2 = R.query(x)
    assert np.array_equal(y1, y2)
    assert len(R._hist_pts) == n_hist  # cache hit adds no constraint


def test_additive_guarantee_and_inclusion():
    rng = np.random.default_rng(7)
    anchors = rng.standard_normal((16, 10))
    R = ReducedMap(anchors, rng)
    pairs = []
    for _ in range(100):
        a = anchors[rng.integers(16)] + 0.3 * rng.standard_normal(10)
        b = anchors[rng.integers(16)] + 0.3 * rng.standard_normal(10)
        pairs.append((a, b))
    rep = reduce_map_guarantee(R, np.array(pairs))
    assert rep.ok
    # anchor pairs reduce to the projection bound: d(.,C) = 0
    rep2 = reduce_map_guarantee(R, np.stack([anchors[:8], anchors[8:]], axis=1))
    assert rep2.ok
    # ball pullback: points of B(C,r) with images in B(H(x), r) stay within 8r
    diam = np.linalg.norm(anchors[:, None] - anchors[None, :], axis=2).max()
    r = 0.2 * diam
    cloud = np.array(
        [anchors[rng.integers(16)] + r * 0.9 * _unit(rng, 10) for _ in range(60)]
    )
    x = anchors[0] + 0.5 * r * _unit(rng, 10)
    assert ball_pullback_violations(R, cloud, x, r) == 0


def _unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def test_row_generation_path_matches_full_solve():
    rng = np.random.default_rng(8)
    anchors = rng.standard_normal((150, 5))  # forces the row-generation branch
    R = ReducedMap(anchors, rng, sequential=False)
    for _ in range(10):
        x = rng.standard_normal(5) * 2
        y = R.query(x)
        assert R.margin(x, y) <= 1e-6 * max(1.0, R._scale)


def test_kirszbraun_query_alias_and_given_images():
    from metriclab.reduce import kirszbraun_query

    rng = np.random.default_rng(11)
    anchors = rng.standard_normal((8, 5))
    R = ReducedMap(anchors, rng)
    x = rng.standard_normal(5)
    assert np.array_equal(kirszbraun_query(R, x), R.query(x))
    # extension of a supplied nonexpansive anchor map
    images = 0.5 * anchors[:, :3]
    R2 = ReducedMap(anchors, rng, images=images)
    y = R2.query(x)
    assert R2.margin(x, y) <= 1e-6 * max(1.0, R2._scale)
    with pytest.raises(DomainError):
        ReducedMap(anchors, rng, images=2.0 * anchors[:, :3])  # expanding
