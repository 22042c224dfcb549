"""Reproducible experiment driver.

Every verb takes long-form flags only, accepts ``--config file.json`` whose
keys override the flags (unknown keys are rejected), and writes CSV artifacts
with a provenance header (config hash, seed, library version).  Identical
(config, seed) runs are byte-identical.  Exit codes: 0 pass, 1 assertion or
numerical failure, 2 usage error.  ``METRICLAB_THREADS`` caps the worker
count used by any parallel execution (the built-in verbs run sequentially;
the kernel benchmark honors the cap).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from metriclab.errors import MetricLabError
from metriclab.reporting import fit_power_exponent, write_csv

USAGE_ERROR = 2
CHECK_FAILED = 1


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("METRICLAB_THREADS", "1")))
    except ValueError:
        return 1


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _ints(text: str) -> list[int]:
    """Comma list or an a..b range of powers of two."""
    if ".." in text:
        a, b = text.split("..")
        lo, hi = int(a), int(b)
        out = []
        n = lo
        while n <= hi:
            out.append(n)
            n *= 2
        return out
    return [int(x) for x in text.split(",") if x]


def _apply_config(args: argparse.Namespace, parser_dests: set[str]) -> None:
    if not getattr(args, "config", None):
        return
    cfg = json.loads(Path(args.config).read_text())
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in parser_dests:
            raise SystemExit(f"unknown config key: {key}")
        setattr(args, dest, value)


def _provenance(args: argparse.Namespace) -> dict:
    skip = ("func", "config", "out", "outdir")
    return {k: v for k, v in vars(args).items() if k not in skip}


# -- verbs --------------------------------------------------------------------


def verb_mazur_check(args) -> int:
    from metriclab import kernels

    u = np.arange(-3.0, 3.0 + args.grid / 2, args.grid)
    rows = []
    worst = math.inf
    for p in _floats(args.p):
        for alpha in (1.0 / p, 0.5 / p):
            for lam in (0.25, 0.5, 0.75):
                smin, umin, vmin = kernels.slack_min(u, u, alpha, lam, p)
                rows.append((p, alpha, lam, umin, vmin, smin))
                worst = min(worst, smin)
    write_csv(args.out, ["p", "alpha", "lambda", "u", "v", "slack"], rows,
              _provenance(args), args.seed)
    print(f"mazur-check: min slack {worst:.3e} over {len(rows)} parameter cells")
    return 0 if worst >= -1e-12 else CHECK_FAILED


def verb_radial_check(args) -> int:
    from metriclab.mazur import MazurParams, mazur_coords, radial_inclusion_radius
    from metriclab.metric import lp_norm, lp_sphere_sample, uniform_weights
    from metriclab.rngutil import rng_from

    w = uniform_weights(args.dim)
    rows = []
    total_viol = 0
    for p in _floats(args.p):
        params = MazurParams(p, 1.0 / p, 0.5, 0.5)
        r = radial_inclusion_radius(params)
        bound = 1.0 - 1.0 / (4.0 * p)
        rng = rng_from(args.seed, int(p * 8))
        viol = 0
        min_margin = math.inf
        for _ in range(args.samples):
            x = lp_sphere_sample(rng, args.dim, w, p) * min(1.0, rng.uniform(0, 1.2))
            img = mazur_coords(x, p, 2.0)
            for j in range(args.perturbations):
                u2 = lp_sphere_sample(rng, args.dim, w, 2.0)
                rho = r * (1.0 if j == 0 else rng.uniform(0, 1)) * (1 - 1e-12)
                lhs = float(lp_norm(mazur_coords(img + rho * u2, 2.0, p) - x / p, w, p))
                margin = bound + 1e-9 - lhs
                min_margin = min(min_margin, margin)
                viol += margin < 0
        rows.append((p, 1.0 / p, 0.5, 0.5, r, args.samples * args.perturbations,
                     viol, min_margin))
        total_viol += viol
    write_csv(args.out, ["p", "alpha", "lambda", "sigma", "r", "samples",
                         "violations", "min_margin"], rows, _provenance(args), args.seed)
    print(f"radial-check: {total_viol} violations")
    return 0 if total_viol == 0 else CHECK_FAILED


def verb_ckr_bench(args) -> int:
    from metriclab.partitions import ckr_sampler, estimate_separation
    from metriclab.pipeline import net_thinned_instance
    from metriclab.rngutil import rng_from

    rows = []
    sigmas = []
    ks = _ints(args.k)
    for k in ks:
        S = net_thinned_instance(args.n, k, rng_from(args.seed, 5, k))
        delta = float(S.dist.max()) / 8.0
        rep = estimate_separation(
            ckr_sampler(S, delta), S, args.trials, seed=args.seed, store_pairs=False
        )
        sigmas.append(rep.sigma_hat)
        rows.append((k, args.n, delta, rep.sigma_hat, rep.sigma_lo, rep.sigma_hi, args.trials))
    write_csv(args.out, ["k", "n", "delta", "sigma_hat", "ci_lo", "ci_hi", "trials"],
              rows, _provenance(args), args.seed)
    exponent = fit_power_exponent(ks, sigmas) if len(ks) > 1 else 0.0
    print(f"ckr-bench: sigma(k) = {['%.3f' % s for s in sigmas]}, fitted exponent {exponent:.3f}")
    return 0


def verb_compose_bench(args) -> int:
    from metriclab import kernels
    from metriclab.compose import refine_partition
    from metriclab.metric import AmbientMode, PointSet
    from metriclab.partitions import (
        BoundMode, Partition, carve_subset, separation_report_from_counts,
    )
    from metriclab.rngutil import rng_from

    rng = rng_from(args.seed, 70)
    S = PointSet(rng.standard_normal((args.n, args.dim)), 2.0)
    n = len(S)
    maxd = S.dist.max(axis=1)
    top_idx = int(np.argmin(maxd))
    rad_within = float(maxd[top_idx])
    delta = rad_within / 1.4  # lower scales sit below the set radius
    scales = [args.kstar**s * delta for s in range(args.scales)]
    top_scale = args.kstar**args.scales * delta
    counts = np.zeros((n, n), dtype=np.uint32)
    cluster_counts = {s: [] for s in range(args.scales)}
    for t in range(args.trials):
        trng = rng_from(args.seed, 71, t)
        current = Partition(
            (tuple(range(n)),), top_scale, BoundMode.RADIAL,
            AmbientMode.CONTINUOUS_LP, (S.coords[top_idx].copy(),), (rad_within,),
        )
        for s in range(args.scales - 1, -1, -1):
            current = refine_partition(
                S, current,
                lambda S_, c, br, mem, r_, _s=s: carve_subset(S_, mem, scales[_s], r_),
                scales[s], trng,
            )
            cluster_counts[s].append(len(current.clusters))
        kernels.pair_sep_accumulate(current.label_array(n), counts)
    rows = []
    for s in range(args.scales):
        scale_counts = np.zeros((n, n), dtype=np.uint32)  # standalone estimate
        for t in range(min(args.trials, 60)):
            P = carve_subset(S, np.arange(n), scales[s], rng_from(args.seed, 72, s, t))
            kernels.pair_sep_accumulate(P.label_array(n), scale_counts)
        rep_s = separation_report_from_counts(
            scale_counts, S.dist, scales[s], min(args.trials, 60), store_pairs=False
        )
        rows.append((s, scales[s], rep_s.sigma_hat, float(np.mean(cluster_counts[s]))))
    write_csv(args.out, ["s", "scale", "sigma_hat", "clusters_mean"], rows,
              _provenance(args), args.seed)
    rep = separation_report_from_counts(counts, S.dist, delta, args.trials, store_pairs=False)
    print(f"compose-bench: composed sigma {rep.sigma_hat:.3f} across {args.scales} scales")
    return 0


def verb_pipeline(args) -> int:
    from metriclab.pipeline import PipelineConfig, lp_separation_sampler, random_lp_instance
    from metriclab.rngutil import rng_from

    inst = random_lp_instance(args.n, args.dim, args.p, rng_from(args.seed, 1))
    diam = float(inst.dist.max())
    cfg = PipelineConfig(
        p=args.p, delta=args.delta_frac * diam, trials=args.trials, seed=args.seed,
        neighborhood_count=args.neighborhood,
    )
    res = lp_separation_sampler(cfg, inst, store_pairs=args.n <= 256)
    rows = res.report.rows()
    write_csv(args.out, ["i", "j", "dist", "phat", "lo", "hi"], rows,
              _provenance(args), args.seed)
    print(
        f"pipeline: sigma_hat {res.report.sigma_hat:.4f} "
        f"(bound value {res.bound_value:.1f}, gamma {res.gamma_used})"
    )
    return 0


def verb_sep_growth(args) -> int:
    from metriclab.pipeline import sep_growth_experiment

    rows = sep_growth_experiment(
        _floats(args.p), _ints(args.n), args.dim, args.trials, args.seed,
        tuple(_floats(args.deltas)), args.neighborhood,
    )
    write_csv(args.out, ["p", "n", "dim", "delta", "sigma_hat", "ci_lo", "ci_hi",
                         "bound_value", "gamma_used", "trials", "seed"], rows,
              _provenance(args), args.seed)
    print(f"sep-growth: {len(rows)} rows")
    return 0


def verb_embed_distortion(args) -> int:
    import math as _m

    from metriclab.embed import (
        EmbeddingMap, bourgain_embed, combine_scales, distortion_report,
        psi_feature_embedding,
    )
    from metriclab.metric import PointSet
    from metriclab.partitions import ckr_sampler
    from metriclab.pipeline import random_lp_instance
    from metriclab.rngutil import rng_from

    rng = rng_from(args.seed, 90)
    if args.p == 2.0:
        S = PointSet(rng.standard_normal((args.n, args.dim)), 2.0)
    else:
        S = random_lp_instance(args.n, args.dim, args.p, rng)
    rows = []

    def add(name, emb, window=None):
        rep = distortion_report(emb, window)
        rows.append((name, args.n, args.p, rep.lip_hat, rep.colip_hat, rep.distortion,
                     window[0] if window else "", window[1] if window else ""))
        return rep

    add("identity_l2", EmbeddingMap.identity_into_l2(S))
    bour = bourgain_embed(S, rng_from(args.seed, 91), trials=args.trials)
    add("bourgain", bour)
    if S.p == 2.0:
        delta = float(S.dist.max()) / 4
        sam = ckr_sampler(S, delta)
        parts = [sam.draw(args.seed, t) for t in range(args.trials)]
        psi = psi_feature_embedding(S, parts, amplitude=delta / 2)
        add("partition_features", psi, window=(delta, 2 * delta))
        n = len(S)
        weights = [_m.sqrt(_m.log(n) * _m.log(max(_m.log(n), 2.0))), 1.0 / _m.sqrt(_m.log(n))]
        comb = combine_scales([bour, psi], [w / sum(weights) for w in weights])
        rep = add("combined", comb)
        fitted_C = rep.distortion / (_m.sqrt(_m.log(n)) * _m.log(max(_m.log(n), 2.0)))
        print(f"embed-distortion: combined fitted C = {fitted_C:.3f}")
    write_csv(args.out, ["construction", "n", "p", "lip", "colip", "distortion",
                         "window_lo", "window_hi"], rows, _provenance(args), args.seed)
    return 0


def verb_oracle(args) -> int:
    from metriclab.metric import PointSet
    from metriclab.oracle import exact_sep
    from metriclab.partitions import BoundMode

    if args.instance == "equilateral3":
        base = PointSet(np.eye(3), 2.0)
        S = PointSet(np.eye(3) / float(base.dist[0, 1]), 2.0)
    elif args.instance == "twopoint":
        S = PointSet(np.array([[0.0], [1.0]]), 2.0, np.array([1.0]))
    elif args.instance == "line4":
        S = PointSet(np.arange(4.0)[:, None], 2.0, np.array([1.0]))
    else:
        print(f"unknown instance {args.instance}", file=sys.stderr)
        return USAGE_ERROR
    mode = BoundMode.DIAMETER if args.mode == "diameter" else BoundMode.RADIAL
    res = exact_sep(S, args.delta, mode)
    write_csv(args.out, ["instance", "delta", "mode", "sigma_star"],
              [(args.instance, args.delta, args.mode, res.sigma)],
              _provenance(args), None)
    print(f"oracle: sigma* = {res.sigma:.9f} (gap {res.gap:.2e})")
    return 0


def verb_full_acceptance(args) -> int:
    from metriclab import acceptance

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    results = acceptance.run_all(args.profile)
    manifest = []
    for res in results:
        for name, columns, rows in res.artifacts:
            write_csv(outdir / name, columns, rows,
                      {"criterion": res.cid, "profile": args.profile}, acceptance.SEED)
        manifest.append(
            (res.cid, int(res.passed), f"{res.runtime:.1f}", res.summary.replace(",", ";"))
        )
    write_csv(outdir / "manifest.csv", ["criterion", "passed", "runtime_s", "summary"],
              manifest, {"profile": args.profile}, acceptance.SEED)
    failed = [r.cid for r in results if not r.passed]
    if failed:
        print(f"FAILED criteria: {', '.join(failed)}")
        return CHECK_FAILED
    print(f"all {len(results)} criteria passed; artifacts in {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="metriclab", description=__doc__)
    sub = top.add_subparsers(dest="verb", required=True)

    def common(p, seed_required=True):
        p.add_argument("--config", default=None, help="JSON config overriding flags")
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, required=seed_required, default=None)

    p = sub.add_parser("mazur-check")
    p.add_argument("--p", default="2,2.5,3,4,6,10")
    p.add_argument("--grid", type=float, default=0.01)
    common(p, seed_required=False)
    p.set_defaults(func=verb_mazur_check)

    p = sub.add_parser("radial-check")
    p.add_argument("--p", default="2.5,4,8")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--perturbations", type=int, default=100)
    common(p)
    p.set_defaults(func=verb_radial_check)

    p = sub.add_parser("ckr-bench")
    p.add_argument("--k", default="2,4,8,16,32")
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--trials", type=int, default=500)
    common(p)
    p.set_defaults(func=verb_ckr_bench)

    p = sub.add_parser("compose-bench")
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--kstar", type=float, default=1.25)
    p.add_argument("--scales", type=int, default=3)
    p.add_argument("--trials", type=int, default=200)
    common(p)
    p.set_defaults(func=verb_compose_bench)

    p = sub.add_parser("pipeline")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--delta-frac", type=float, default=0.25)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--neighborhood", type=int, default=64)
    common(p)
    p.set_defaults(func=verb_pipeline)

    p = sub.add_parser("sep-growth")
    p.add_argument("--p", default="3,4")
    p.add_argument("--n", default="64..4096")
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--deltas", default="0.25,0.0625")
    p.add_argument("--neighborhood", type=int, default=64)
    common(p)
    p.set_defaults(func=verb_sep_growth)

    p = sub.add_parser("embed-distortion")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--trials", type=int, default=64)
    common(p)
    p.set_defaults(func=verb_embed_distortion)

    p = sub.add_parser("oracle")
    p.add_argument("--instance", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--mode", choices=("diameter", "radial"), default="diameter")
    common(p, seed_required=False)
    p.set_defaults(func=verb_oracle)

    p = sub.add_parser("full-acceptance")
    p.add_argument("--outdir", required=True)
    p.add_argument("--profile", choices=("full", "smoke"), default="full")
    p.add_argument("--config", default=None)
    p.set_defaults(func=verb_full_acceptance)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    dests = {a.dest for sp in parser._subparsers._group_actions
             for a in sp.choices[args.verb]._actions}
    try:
        _apply_config(args, dests)
        return args.func(args)
    except SystemExit as exc:
        raise
    except MetricLabError as err:
        print(f"check failed: {err}", file=sys.stderr)
        return CHECK_FAILED


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
