"""Pure-numpy implementations of the hot kernels.

Same signatures as the compiled ``_ckernels`` extension; selected at import
time by :mod:`metriclab.kernels` when the extension is unavailable or
``METRICLAB_FORCE_PY=1``.
"""

from __future__ import annotations

import numpy as np

IMPL = "python"

_CHUNK = 256


def pairwise_lp(coords: np.ndarray, weights: np.ndarray, p: float) -> np.ndarray:
    """Weighted l_p distance matrix: d(i,j) = (sum_k w_k |c_ik - c_jk|^p)^(1/p)."""
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    n = coords.shape[0]
    out = np.zeros((n, n), dtype=np.float64)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        diff = np.abs(coords[lo:hi, None, :] - coords[None, :, :])
        if p == 2.0:
            acc = np.einsum("ijk,k->ij", diff * diff, weights)
        else:
            acc = np.einsum("ijk,k->ij", diff**p, weights)
        out[lo:hi] = acc
    np.fill_diagonal(out, 0.0)
    out = out ** (1.0 / p)
    return np.minimum(out, out.T, out)  # enforce exact symmetry


def cross_lp(a: np.ndarray, b: np.ndarray, weights: np.ndarray, p: float) -> np.ndarray:
    """Weighted l_p distances between rows of ``a`` and rows of ``b``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    out = np.empty((a.shape[0], b.shape[0]), dtype=np.float64)
    for lo in range(0, a.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, a.shape[0])
        diff = np.abs(a[lo:hi, None, :] - b[None, :, :])
        if p == 2.0:
            acc = np.einsum("ijk,k->ij", diff * diff, weights)
        else:
            acc = np.einsum("ijk,k->ij", diff**p, weights)
        out[lo:hi] = acc
    return out ** (1.0 / p)


def ckr_assign(dists: np.ndarray, order: np.ndarray, rho: float) -> np.ndarray:
    """First-capture assignment for ball carving.

    ``dists`` is points x centers; ``order`` a permutation of center indices.
    Returns, per point, the position in ``order`` of the first center within
    ``rho`` (-1 if none covers it).
    """
    mask = dists[:, order] <= rho
    hit = mask.any(axis=1)
    labels = np.argmax(mask, axis=1).astype(np.int64)
    labels[~hit] = -1
    return labels


def pair_sep_accumulate(labels: np.ndarray, counts: np.ndarray) -> None:
    """counts[i,j] += 1 wherever labels[i] != labels[j] (in place)."""
    sep = labels[:, None] != labels[None, :]
    counts += sep.astype(counts.dtype)


def slack_min(
    u: np.ndarray, v: np.ndarray, alpha: float, lam: float, p: float
) -> tuple[float, float, float]:
    """Minimum over the (u, v) grid of the shifted-Mazur pointwise slack.

    slack = (1-lam*alpha)^p u^2 + 5 v^2 / ((1-lam) p alpha)
            - | s(u+v) - alpha*s(u) |^p,   s(t) = |t|^(2/p) sgn(t).
    """
    uu = u[:, None]
    vv = v[None, :]
    s_uv = np.abs(uu + vv) ** (2.0 / p) * np.sign(uu + vv)
    s_u = np.abs(uu) ** (2.0 / p) * np.sign(uu)
    lhs = np.abs(s_uv - alpha * s_u) ** p
    rhs = (1.0 - lam * alpha) ** p * uu**2 + 5.0 * vv**2 / ((1.0 - lam) * p * alpha)
    slack = rhs - lhs
    flat = int(np.argmin(slack))
    i, j = divmod(flat, v.size)
    return float(slack[i, j]), float(u[i]), float(v[j])
