"""Ground truth on tiny instances.

The optimal separation constant at one scale is a linear program over the
probability simplex of all bound-respecting partitions:

    minimize sigma  s.t.  sum_P q_P [P separates x,y] <= sigma d(x,y)/delta
                          sum_P q_P = 1,   q >= 0,

solved exactly by a self-contained dense simplex with an explicit
primal-dual optimality certificate.  Partition enumeration is by restricted
growth strings and refuses instances above 8 points (Bell(8) = 4140).

``analytic_reference`` tabulates closed-form reference values used by the
distortion tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from metriclab.errors import DomainError, RefusalError, StructuralError
from metriclab.metric import AmbientMode, PointSet, radius_center
from metriclab.partitions import BoundMode, Partition

_SIMPLEX_TOL = 1e-11
_GAP_TOL = 1e-9


def set_partition_labels(n: int):
    """All set partitions of range(n) as restricted-growth label arrays."""
    labels = np.zeros(n, dtype=np.int64)
    maxes = np.zeros(n, dtype=np.int64)
    while True:
        yield labels.copy()
        i = n - 1
        while i >= 1 and labels[i] == maxes[i - 1] + 1:
            i -= 1
        if i == 0:
            return
        labels[i] += 1
        maxes[i] = max(maxes[i - 1], labels[i])
        for j in range(i + 1, n):
            labels[j] = 0
            maxes[j] = maxes[i]


def _labels_to_clusters(labels: np.ndarray, subset: np.ndarray) -> tuple:
    clusters = []
    for cid in range(labels.max() + 1):
        members = subset[labels == cid]
        clusters.append(tuple(int(i) for i in members))
    return tuple(clusters)


def enumerate_bounded_partitions(
    S: PointSet,
    delta: float,
    mode: BoundMode = BoundMode.DIAMETER,
    ambient: AmbientMode = AmbientMode.WITHIN_SET,
    subset=None,
) -> list[Partition]:
    """All partitions of ``subset`` (default: all of S) passing the bound.

    Radial bounds are measured against S in the given ambient mode, so extra
    points of S (for instance a midpoint) can serve as ball centers.
    """
    subset = np.arange(len(S)) if subset is None else np.asarray(sorted(subset), dtype=np.int64)
    m = subset.size
    if m > 8:
        raise RefusalError("exhaustive enumeration is limited to 8 points")
    if m == 0:
        raise DomainError("cannot partition an empty set")
    out = []
    for labels in set_partition_labels(m):
        clusters = _labels_to_clusters(labels, subset)
        ok = True
        for cluster in clusters:
            idx = np.asarray(cluster, dtype=np.int64)
            if mode is BoundMode.DIAMETER:
                if idx.size > 1 and float(S.dist[np.ix_(idx, idx)].max()) > delta:
                    ok = False
                    break
            else:
                if radius_center(idx, S, ambient)[0] > delta * (1 + 1e-12):
                    ok = False
                    break
        if ok:
            out.append(Partition(clusters, delta, mode, ambient))
    return out


@dataclass
class SepOracleResult:
    sigma: float                 # optimal separation constant (inf if infeasible)
    feasible: bool
    gap: float                   # certified duality gap
    support: list | None = None  # (partition index, probability) with q > 0
    partitions: list | None = None


def exact_sep(
    S: PointSet,
    delta: float,
    mode: BoundMode = BoundMode.DIAMETER,
    ambient: AmbientMode = AmbientMode.WITHIN_SET,
    subset=None,
) -> SepOracleResult:
    """Exact one-scale separation constant via the partition LP."""
    subset = np.arange(len(S)) if subset is None else np.asarray(sorted(subset), dtype=np.int64)
    parts = enumerate_bounded_partitions(S, delta, mode, ambient, subset)
    if not parts:
        return SepOracleResult(math.inf, False, 0.0, None, [])
    m = subset.size
    iu, ju = np.triu_indices(m, k=1)
    if iu.size == 0:
        return SepOracleResult(0.0, True, 0.0, [(0, 1.0)], parts)
    d = S.dist[subset[iu], subset[ju]]
    sep = np.zeros((iu.size, len(parts)))
    for k, P in enumerate(parts):
        lab = P.label_array(len(S))[subset]
        sep[:, k] = lab[iu] != lab[ju]
    # variables: q_1..q_m, sigma
    nvar = len(parts) + 1
    c = np.zeros(nvar)
    c[-1] = 1.0
    A_ub = np.hstack([sep, -(d / delta)[:, None]])
    b_ub = np.zeros(iu.size)
    A_eq = np.zeros((1, nvar))
    A_eq[0, : len(parts)] = 1.0
    b_eq = np.array([1.0])
    x, y, status = dense_simplex(c, A_ub, b_ub, A_eq, b_eq)
    if status != "optimal":
        raise StructuralError(f"separation LP unexpectedly {status}")
    sigma = float(x[-1])
    # duality gap: dual objective is b^T y = y_eq (the b_ub are all zero)
    gap = abs(sigma - float(y[-1]))
    if gap > _GAP_TOL:
        raise StructuralError(f"simplex optimality certificate failed: gap={gap:.3g}")
    support = [(k, float(x[k])) for k in range(len(parts)) if x[k] > 1e-9]
    return SepOracleResult(sigma, True, gap, support, parts)


def dense_simplex(c, A_ub, b_ub, A_eq, b_eq):
    """Two-phase dense tableau simplex with Bland's rule.

    minimize c^T x  s.t.  A_ub x <= b_ub, A_eq x = b_eq, x >= 0.
    Returns (x, y, status) with y the duals ordered (ub rows..., eq rows...),
    verified dual-feasible: A^T y <= c componentwise up to tolerance.
    """
    c = np.asarray(c, dtype=np.float64)
    A_ub = np.asarray(A_ub, dtype=np.float64)
    A_eq = np.asarray(A_eq, dtype=np.float64)
    b_ub = np.asarray(b_ub, dtype=np.float64)
    b_eq = np.asarray(b_eq, dtype=np.float64)
    k_ub, k_eq = A_ub.shape[0], A_eq.shape[0]
    n = c.size
    k = k_ub + k_eq
    # standard form: [A_ub I 0; A_eq 0 I] with slacks (k_ub) and artificials.
    # rows with negative rhs are flipped so the start is feasible for phase 1.
    A = np.zeros((k, n + k_ub + k))
    b = np.concatenate([b_ub, b_eq])
    A[:k_ub, :n] = A_ub
    A[k_ub:, :n] = A_eq
    A[:k_ub, n : n + k_ub] = np.eye(k_ub)
    flip = b < 0
    A[flip] *= -1.0
    b = np.abs(b)
    A[:, n + k_ub :] = np.eye(k)
    art = np.arange(n + k_ub, n + k_ub + k)
    basis = art.copy()

    T = np.hstack([A, b[:, None]])

    def pivot(row, col):
        T[row] /= T[row, col]
        for r in range(T.shape[0]):
            if r != row and T[r, col] != 0.0:
                T[r] -= T[r, col] * T[row]

    def run_phase(cost, allowed):
        for _ in range(200000):
            z = cost[basis] @ T[:, :-1] - cost
            # Bland: smallest-index entering column with negative reduced cost
            enter = -1
            for j in allowed:
                if z[j] > _SIMPLEX_TOL:
                    enter = j
                    break
            if enter < 0:
                return True
            col = T[:, enter]
            ratios = np.where(col > _SIMPLEX_TOL, T[:, -1] / np.where(col > 0, col, 1.0), np.inf)
            if not np.isfinite(ratios).any():
                return False  # unbounded
            # min ratio, ties to the smallest basis index (Bland)
            row = int(np.lexsort((basis, ratios))[0])
            pivot(row, enter)
            basis[row] = enter
        raise StructuralError("simplex iteration limit hit")

    # phase 1: drive artificials to zero
    cost1 = np.zeros(n + k_ub + k)
    cost1[art] = 1.0
    ok = run_phase(cost1, range(n + k_ub))
    obj1 = float(cost1[basis] @ T[:, -1])
    if not ok or obj1 > 1e-8:
        return np.zeros(n), np.zeros(k), "infeasible"
    # pivot out any artificial still basic (degenerate rows)
    for r in range(k):
        if basis[r] >= n + k_ub:
            for j in range(n + k_ub):
                if abs(T[r, j]) > _SIMPLEX_TOL:
                    pivot(r, j)
                    basis[r] = j
                    break
    # phase 2
    cost2 = np.zeros(n + k_ub + k)
    cost2[:n] = c
    ok = run_phase(cost2, range(n + k_ub))
    if not ok:
        return np.zeros(n), np.zeros(k), "unbounded"
    x_full = np.zeros(n + k_ub + k)
    x_full[basis] = T[:, -1]
    x = x_full[:n]
    # duals from the basis: solve B^T y = c_B on the original (unflipped) rows
    B = A[:, basis]
    y = np.linalg.solve(B.T, cost2[basis])
    y = np.where(flip, -y, y)
    # certificate: dual feasibility on structural and slack columns
    A_orig = np.vstack([A_ub, A_eq])
    resid = A_orig.T @ y - c
    if resid.max() > 1e-7 or (y[:k_ub].max(initial=0.0)) > 1e-7:
        raise StructuralError("dual certificate violated")
    return x, y, "optimal"


_REFERENCES = {
    "hypercube_distortion": (
        lambda k, p: float(k) ** (1.0 / p - 0.5),
        "Euclidean distortion of the k-cube with the l_p metric, 1 <= p <= 2",
    ),
    "ckr_dimension_exponent": (
        lambda: 0.5,
        "target growth exponent of the Euclidean carving constant in dimension",
    ),
    "sep_upper_template": (
        lambda p, n: p * p * math.sqrt(math.log(n)),
        "shape of the upper bound for n-point l_p separation constants",
    ),
}


def analytic_reference(name: str, **kwargs) -> float:
    """Tabulated closed-form reference value by name."""
    if name not in _REFERENCES:
        raise DomainError(f"unknown reference {name!r}; have {sorted(_REFERENCES)}")
    fn, _ = _REFERENCES[name]
    if name == "hypercube_distortion" and kwargs.get("p", 1.0) > 2:
        raise DomainError("hypercube reference value applies for p <= 2")
    return fn(**kwargs)


def reference_note(name: str) -> str:
    return _REFERENCES[name][1]
