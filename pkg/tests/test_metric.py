import numpy as np
import pytest

from metriclab.errors import DomainError, StructuralError
from metriclab.metric import (
    AmbientMode,
    PointSet,
    WeightedVector,
    diameter,
    distance_matrix,
    doubling_estimate,
    greedy_net,
    growth_centers,
    neighborhood_sample,
    radius,
    radius_center,
    uniform_weights,
)


def line_set(n, spacing=1.0, p=2.0):
    coords = (spacing * np.arange(n, dtype=float))[:, None]
    return PointSet(coords, p, np.array([1.0]))


def equilateral_set(n, p=2.0):
    # one-hot corners with uniform weights are pairwise equidistant
    return PointSet(np.eye(n), p)


def test_distance_identity_and_unit_vector():
    m = 5
    S = PointSet(np.vstack([np.zeros(m), np.zeros(m)]), 2.0)
    assert distance_matrix(S)[0, 1] == 0.0
    e1 = np.zeros(m)
    e1[0] = 1.0
    S2 = PointSet(np.vstack([np.zeros(m), e1]), 2.0)
    assert distance_matrix(S2)[0, 1] == pytest.approx(m**-0.5, abs=1e-15)


def test_distance_matches_scalar_loop_p3():
    rng = np.random.default_rng(7)
    coords = rng.standard_normal((3, 6))
    w = uniform_weights(6)
    S = PointSet(coords, 3.0, w)
    D = distance_matrix(S)
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(6):
                acc += w[k] * abs(coords[i, k] - coords[j, k]) ** 3
            assert D[i, j] == pytest.approx(acc ** (1 / 3), abs=1e-12)


def test_distance_triangle_inequality_random():
    rng = np.random.default_rng(3)
    for p in (1.0, 2.0, 2.5, 4.0):
        S = PointSet(rng.standard_normal((12, 4)), p)
        D = S.dist
        scale = D.max()
        for i in range(12):
            for j in range(12):
                for k in range(12):
                    assert D[i, j] <= D[i, k] + D[k, j] + 1e-12 * scale


def test_weighted_vector_invariants():
    with pytest.raises(StructuralError):
        WeightedVector(np.array([1.0, 2.0]), np.array([0.5]), 2.0)
    with pytest.raises(StructuralError):
        WeightedVector(np.array([1.0]), np.array([-1.0]), 2.0)
    with pytest.raises(StructuralError):
        WeightedVector(np.array([np.inf]), np.array([1.0]), 2.0)


def test_diameter_cases():
    S = line_set(5)
    assert diameter([2], S) == 0.0
    assert diameter([0, 1], S) == pytest.approx(1.0)
    rng = np.random.default_rng(0)
    R = PointSet(rng.standard_normal((5, 3)), 2.0)
    idx = [0, 1, 2, 3, 4]
    assert diameter(idx, R) == pytest.approx(max(R.dist[i, j] for i in idx for j in idx))
    with pytest.raises(DomainError):
        diameter([], S)


def test_radius_cases():
    S = line_set(2)
    assert radius([0], S, AmbientMode.CONTINUOUS_LP) == 0.0
    assert radius([0, 1], S, AmbientMode.CONTINUOUS_LP) == pytest.approx(0.5)
    # centers restricted to the two points themselves
    assert radius([0, 1], S, AmbientMode.WITHIN_SET) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        radius([], S)


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_rad_diam_sandwich(p):
    rng = np.random.default_rng(11)
    S = PointSet(rng.standard_normal((9, 3)), p)
    idx = np.arange(9)
    dia = diameter(idx, S)
    r_w = radius(idx, S, AmbientMode.WITHIN_SET)
    assert r_w <= dia and dia <= 2 * r_w
    r_c = radius(idx, S, AmbientMode.CONTINUOUS_LP)
    assert r_c <= dia + 1e-6 and dia <= 2 * r_c + 1e-6
    assert r_c <= r_w + 1e-9


def test_radius_center_is_feasible():
    rng = np.random.default_rng(5)
    S = PointSet(rng.standard_normal((7, 4)), 4.0)
    r, c = radius_center(np.arange(7), S, AmbientMode.CONTINUOUS_LP)
    from metriclab.metric import lp_norm

    assert float(np.max(lp_norm(S.coords - c, S.weights, S.p))) <= r + 1e-12


def test_neighborhood_sample():
    S = line_set(4)
    rng = np.random.default_rng(2)
    aug = neighborhood_sample(S, [0, 1, 2, 3], 0.0, 3, rng)
    assert len(aug) == 7
    d = aug.dist[4:, :4].min(axis=1)
    assert np.all(d == 0.0)
    aug2 = neighborhood_sample(S, [0, 1], 0.3, 100, np.random.default_rng(4))
    assert np.all(aug2.dist[4:, :2].min(axis=1) <= 0.3)
    with pytest.raises(DomainError):
        neighborhood_sample(S, [0], -1.0, 1, rng)


def test_greedy_net():
    S = line_set(20)
    assert greedy_net(S, 100.0) == [0]
    assert greedy_net(S, 0.5) == list(range(20))
    net = greedy_net(S, 2.5)
    D = S.dist
    for a in net:
        for b in net:
            if a != b:
                assert D[a, b] > 2.5
    assert np.all(D[:, net].min(axis=1) <= 2.5)


def test_growth_centers_line():
    S = line_set(21)
    g = growth_centers(S, 1.0, 3.0, 2.0)
    assert set(g.indices) == {0, 1, 2, 18, 19, 20}
    assert set(growth_centers(S, 1.0, 3.0, 21).indices) == set(range(21))
    assert set(growth_centers(S, 2.0, 2.0, 1.0).indices) == set(range(21))
    with pytest.raises(DomainError):
        growth_centers(S, 3.0, 1.0, 2.0)


def test_growth_centers_monotone():
    rng = np.random.default_rng(9)
    S = PointSet(rng.standard_normal((15, 3)), 2.0)
    for _ in range(20):
        r = rng.uniform(0.1, 1.0)
        R = r + rng.uniform(0.0, 2.0)
        K = rng.uniform(1.0, 6.0)
        inner = set(growth_centers(S, r, R, K).indices)
        gap = (R - r) / 3.0
        outer = set(
            growth_centers(
                S, r + rng.uniform(0, gap), R - rng.uniform(0, gap), K + rng.uniform(0, 3)
            ).indices
        )
        assert inner <= outer


def test_doubling_estimate():
    assert doubling_estimate(PointSet(np.zeros((1, 2)), 2.0)) == 1.0
    n = 6
    assert doubling_estimate(equilateral_set(n)) == n
    assert doubling_estimate(line_set(15)) <= 5.0


def test_serialization_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    S = PointSet(rng.standard_normal((4, 3)), 2.5)
    S2 = PointSet.from_json(S.to_json())
    assert np.allclose(S.coords, S2.coords)
    assert S2.p == 2.5 and S2.labels == S.labels
    path = tmp_path / "pts.csv"
    lines = ["label,c0,c1,c2"] + [
        ",".join([S.labels[i]] + [repr(float(x)) for x in S.coords[i]]) for i in range(4)
    ]
    path.write_text("\n".join(lines) + "\n")
    S3 = PointSet.from_csv(path, 2.5)
    assert np.allclose(S3.coords, S.coords)
    assert S3.labels == S.labels
