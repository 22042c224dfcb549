"""Deterministic CSV emission and small statistics helpers.

Every artifact starts with a provenance comment (config hash, seed, library
version) and formats floats with a fixed precision, so identical (config,
seed) runs are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

__version__ = "0.1.0"

_Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson 95% score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def wilson_halfwidth(successes: int, trials: int, z: float = _Z95) -> float:
    lo, hi = wilson_interval(successes, trials, z)
    return (hi - lo) / 2.0


def config_hash(config: dict) -> str:
    """sha256 of the canonical JSON form of a config mapping."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def write_csv(path, columns, rows, config: dict | None = None, seed=None) -> None:
    """Write rows with a provenance header comment; byte-stable."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"# metriclab={__version__} config={config_hash(config or {})} seed={seed}",
        ",".join(columns),
    ]
    for row in rows:
        lines.append(",".join(fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def fit_power_exponent(x, y) -> float:
    """Least-squares slope of log y against log x (fitted growth exponent)."""
    import numpy as np

    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    lx = lx - lx.mean()
    return float((lx * (ly - ly.mean())).sum() / (lx * lx).sum())
