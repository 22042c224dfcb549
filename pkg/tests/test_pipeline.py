import numpy as np
import pytest

from metriclab.errors import DomainError, StructuralError
from metriclab.metric import AmbientMode, PointSet, radius
from metriclab.pipeline import (
    PipelineConfig,
    SeparationEngine,
    SnapshotSpec,
    lp_separation_sampler,
    random_lp_instance,
    sep_growth_experiment,
    snapshot_partitioner,
)
from metriclab.oracle import exact_sep
from metriclab.reporting import wilson_halfwidth
from metriclab.rngutil import rng_from


def test_config_invariants():
    cfg = PipelineConfig(p=3.0, delta=1.0)
    assert cfg.K == pytest.approx(1 + 1 / 12)
    assert cfg.D == pytest.approx(3.0 / (cfg.K * 0.14))
    assert cfg.kstar > 1.0
    for p in (2.0, 2.5, 4.0, 8.0, 16.0):
        assert PipelineConfig(p=p, delta=1.0).kstar > 1.0
    with pytest.raises(DomainError):
        PipelineConfig(p=1.5, delta=1.0)
    with pytest.raises(DomainError):
        PipelineConfig(p=3.0, delta=-1.0)
    with pytest.raises(StructuralError):
        PipelineConfig(p=3.0, delta=1.0, gamma=0.9)  # K_* <= 1


def test_snapshot_spec_radii_ordering():
    cfg = PipelineConfig(p=4.0, delta=2.0)
    for s in range(6):
        spec = SnapshotSpec.at(cfg, s)
        assert spec.alpha > spec.beta_net > 0
        assert spec.ball_radius > spec.scale
        assert spec.image_scale == pytest.approx(cfg.p * spec.scale / (8 * cfg.D))


def test_snapshot_single_point():
    cfg = PipelineConfig(p=4.0, delta=1.0, seed=3)
    S = PointSet(np.zeros((1, 4)), 4.0)
    P = snapshot_partitioner(cfg, S, S.coords[0], 0, rng_from(0, 0))
    assert len(P.clusters) == 1


def test_snapshot_p2_reduces_to_carved_projection():
    # with p = 2 the radial map is the identity, so the snapshot is exactly
    # projection plus carving; the partition must be radially bounded
    rng = np.random.default_rng(5)
    cfg = PipelineConfig(p=2.0, delta=1.0, seed=7)
    S = PointSet(rng.standard_normal((24, 6)) * 0.2, 2.0)
    z = S.coords.mean(axis=0)
    P = snapshot_partitioner(cfg, S, z, 0, rng_from(1, 0))
    P.validate(S, universe=P.universe())
    assert all(r <= cfg.kstar**0 * cfg.delta for r in P.radii)


def test_snapshot_radial_bound_p4():
    rng = np.random.default_rng(6)
    cfg = PipelineConfig(p=4.0, delta=0.6, seed=11)
    S = PointSet(rng.standard_normal((64, 8)) * 0.15, 4.0)
    z = S.coords.mean(axis=0)
    P = snapshot_partitioner(cfg, S, z, 0, rng_from(2, 0))
    scale = cfg.delta
    assert all(r <= scale for r in P.radii)
    # witness-certified radius matches the ambient-ball definition
    for cid, cluster in enumerate(P.clusters):
        assert radius(cluster, S, AmbientMode.CONTINUOUS_LP) <= scale + 1e-6


def test_pipeline_two_far_points_vs_oracle():
    coords = np.zeros((2, 4))
    coords[1, 0] = 4.0
    C = PointSet(coords, 3.0)
    d = float(C.dist[0, 1])
    cfg = PipelineConfig(
        p=3.0, delta=0.5 * d, trials=200, seed=5, neighborhood_count=8
    )
    res = lp_separation_sampler(cfg, C)
    # oracle on the two base points: sigma* = delta/d (forced separation)
    star = exact_sep(C, cfg.delta).sigma
    i, j, dd, phat, lo, hi = res.report.argmax_pair
    half = (hi - lo) / 2 * cfg.delta / dd
    assert res.report.sigma_hat >= star - 3 * half
    assert res.gamma_used == cfg.gamma


def test_pipeline_trivial_when_delta_dominates():
    rng = np.random.default_rng(8)
    C = PointSet(rng.standard_normal((12, 4)) * 0.1, 3.0)
    diam = float(C.dist.max())
    cfg = PipelineConfig(p=3.0, delta=2.5 * diam, trials=20, seed=2, neighborhood_count=4)
    res = lp_separation_sampler(cfg, C)
    assert res.report.sigma_hat == 0.0


def test_pipeline_partitions_validate_and_are_deterministic():
    C = random_lp_instance(40, 8, 4.0, np.random.default_rng(9))
    diam = float(C.dist.max())
    cfg = PipelineConfig(p=4.0, delta=diam / 4, trials=12, seed=13, neighborhood_count=8)
    res = lp_separation_sampler(cfg, C)
    P1 = res.sampler.draw(13, 3)
    P2 = res.sampler.draw(13, 3)
    assert P1.to_json() == P2.to_json()
    P1.validate(res.augmented)
    assert all(r <= cfg.delta for r in P1.radii)
    # neighborhood points really are within delta/(9D) of the base set
    aug = res.augmented
    extra = np.arange(len(C), len(aug))
    if extra.size:
        dmin = aug.dist[np.ix_(extra, np.arange(len(C)))].min(axis=1)
        assert np.all(dmin <= cfg.neighborhood_radius)


def test_engine_telescoping_accounting():
    # per-pair first-separation bookkeeping: the total separation frequency
    # splits across scales, and sigma_hat is below the K^-s weighted sum of
    # per-scale contributions (plus Wilson slack at the argmax pair)
    C = random_lp_instance(48, 6, 3.0, np.random.default_rng(10))
    diam = float(C.dist.max())
    cfg = PipelineConfig(p=3.0, delta=diam / 3, trials=60, seed=21, neighborhood_count=0)
    engine = SeparationEngine(cfg, C)
    n = len(C)
    trials = 40
    prev_labels = np.zeros(n, dtype=np.int64)
    first_sep = {}
    total = np.zeros((n, n), dtype=np.uint32)
    from metriclab import kernels

    for t in range(trials):
        stages = []
        engine_record = lambda s, clusters: stages.append(
            (s, [np.asarray(c[0]) for c in clusters])
        )
        P = engine.run_trial(cfg.seed, t, record=engine_record)
        kernels.pair_sep_accumulate(P.label_array(n), total)
        # reconstruct per-scale first separation
        sep_before = np.zeros((n, n), dtype=bool)
        for s, clusters in stages:
            lab = np.full(n, -1, dtype=np.int64)
            for cid, members in enumerate(clusters):
                lab[members] = cid
            sep_now = lab[:, None] != lab[None, :]
            newly = sep_now & ~sep_before
            if newly.any():
                first_sep.setdefault(s, np.zeros((n, n), dtype=np.uint32))
                first_sep[s] += newly
            sep_before = sep_now
    iu, ju = np.triu_indices(n, k=1)
    d = C.dist[iu, ju]
    sigma_total = float(np.max(total[iu, ju] / trials * cfg.delta / d))
    bound = 0.0
    for s, mat in first_sep.items():
        scale_s = engine.scale(s)
        sigma_s = float(np.max(mat[iu, ju] / trials * scale_s / d))
        bound += sigma_s / cfg.kstar**s
    k = int(np.argmax(total[iu, ju] / trials * cfg.delta / d))
    half = wilson_halfwidth(int(total[iu[k], ju[k]]), trials) * cfg.delta / float(d[k])
    assert sigma_total <= bound + 3 * half


def test_sep_growth_experiment_smoke():
    rows = sep_growth_experiment(
        [3.0], [16, 32], 6, trials=10, seed=3, delta_fractions=(0.25,),
        neighborhood_count=4,
    )
    assert len(rows) == 2
    for row in rows:
        p, n, dim, delta, sigma, lo, hi, bound, gamma, trials, seed = row
        assert sigma >= 0 and bound > 0 and gamma == 0.14


def test_doubling_check_reports_budget():
    C = random_lp_instance(24, 6, 3.0, np.random.default_rng(14))
    diam = float(C.dist.max())
    cfg = PipelineConfig(
        p=3.0, delta=diam / 4, trials=6, seed=4, neighborhood_count=4, doubling_check=True
    )
    res = lp_separation_sampler(cfg, C)
    assert res.doubling_report is not None
    assert res.doubling_report["lambda_hat"] >= 1.0
    assert res.doubling_report["net_budget"] >= 1.0


def test_anchor_mode_base():
    C = random_lp_instance(20, 5, 4.0, np.random.default_rng(15))
    diam = float(C.dist.max())
    cfg = PipelineConfig(
        p=4.0, delta=diam / 3, trials=6, seed=9, neighborhood_count=6, anchor_mode="base"
    )
    res = lp_separation_sampler(cfg, C)
    assert res.report.sigma_hat >= 0.0
    for t in range(4):
        res.sampler.draw(9, t)
