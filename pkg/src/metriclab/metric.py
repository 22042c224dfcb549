"""Finite weighted-l_p metric substrate.

Points are finite discretizations of a function space with exponent p: real
coordinates paired with positive probability weights, normed by
``(sum_k w_k |c_k|^p)^(1/p)``.  A :class:`PointSet` holds a labeled family of
such points sharing (p, weights) and caches the pairwise distance matrix.
On top of that live the classical metric primitives: diameter, circumradius
(with the center either restricted to the set or free in the ambient space),
neighborhood sampling, greedy nets, controlled-growth center sets, and a
doubling-constant estimate.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass

import numpy as np

from metriclab import kernels
from metriclab.errors import DomainError, NumericalError, StructuralError

_EPS = 1e-12


class AmbientMode(enum.Enum):
    """Where circumball centers may live."""

    WITHIN_SET = "within_set"
    CONTINUOUS_LP = "continuous_lp"


def uniform_weights(m: int) -> np.ndarray:
    return np.full(m, 1.0 / m)


def lp_norm(coords: np.ndarray, weights: np.ndarray, p: float) -> np.ndarray:
    """Weighted l_p norm along the last axis."""
    return np.einsum("...k,k->...", np.abs(coords) ** p, weights) ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class WeightedVector:
    """One point of a discretized l_p(mu) space."""

    coords: np.ndarray
    weights: np.ndarray
    p: float

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "weights", weights)
        if coords.ndim != 1 or weights.shape != coords.shape:
            raise StructuralError("coords and weights must be 1-d of equal length")
        if not np.all(np.isfinite(coords)):
            raise StructuralError("coords must be finite")
        if np.any(weights <= 0):
            raise StructuralError("weights must be strictly positive")
        if abs(float(weights.sum()) - 1.0) > 1e-9:
            raise StructuralError("weights must sum to 1")
        if self.p < 1:
            raise DomainError(f"p must be >= 1, got {self.p}")

    def norm(self, q: float | None = None) -> float:
        q = self.p if q is None else q
        return float(lp_norm(self.coords, self.weights, q))


class PointSet:
    """Finite labeled subset of a weighted l_p space with cached distances."""

    def __init__(self, coords, p: float, weights=None, labels=None):
        coords = np.ascontiguousarray(coords, dtype=np.float64)
        if coords.ndim != 2:
            raise StructuralError("coords must be an (n, dim) array")
        n, dim = coords.shape
        if weights is None:
            weights = uniform_weights(dim)
        weights = np.ascontiguousarray(weights, dtype=np.float64)
        if weights.shape != (dim,):
            raise StructuralError("weights must have one entry per coordinate")
        if np.any(weights <= 0):
            raise StructuralError("weights must be strictly positive")
        if abs(float(weights.sum()) - 1.0) > 1e-9:
            raise StructuralError("weights must sum to 1")
        if p < 1:
            raise DomainError(f"p must be >= 1, got {p}")
        if not np.all(np.isfinite(coords)):
            raise StructuralError("coords must be finite")
        if labels is None:
            labels = [f"p{i:04d}" for i in range(n)]
        if len(labels) != n:
            raise StructuralError("one label per point required")
        self.coords = coords
        self.p = float(p)
        self.weights = weights
        self.labels = [str(x) for x in labels]
        self._dist: np.ndarray | None = None

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def dist(self) -> np.ndarray:
        if self._dist is None:
            self._dist = kernels.pairwise_lp(self.coords, self.weights, self.p)
        return self._dist

    def point(self, i: int) -> WeightedVector:
        return WeightedVector(self.coords[i].copy(), self.weights.copy(), self.p)

    @classmethod
    def from_points(cls, points: list[WeightedVector], labels=None) -> "PointSet":
        if not points:
            raise StructuralError("need at least one point")
        p0, w0, d0 = points[0].p, points[0].weights, points[0].coords.shape[0]
        for v in points[1:]:
            if v.p != p0 or v.coords.shape[0] != d0 or not np.array_equal(v.weights, w0):
                raise StructuralError("points must share p, dimension and weights")
        return cls(np.stack([v.coords for v in points]), p0, w0, labels)

    def with_extra_points(self, extra_coords: np.ndarray, extra_labels=None) -> "PointSet":
        extra_coords = np.asarray(extra_coords, dtype=np.float64)
        if extra_coords.ndim != 2 or extra_coords.shape[1] != self.dim:
            raise StructuralError("extra points must match the set dimension")
        if extra_labels is None:
            extra_labels = [f"x{i:04d}" for i in range(extra_coords.shape[0])]
        return PointSet(
            np.vstack([self.coords, extra_coords]),
            self.p,
            self.weights,
            self.labels + list(extra_labels),
        )

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "p": self.p,
                "dim": self.dim,
                "weights": self.weights.tolist(),
                "points": self.coords.tolist(),
                "labels": self.labels,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "PointSet":
        obj = json.loads(text)
        return cls(np.array(obj["points"]), obj["p"], np.array(obj["weights"]), obj["labels"])

    @classmethod
    def from_csv(cls, path, p: float, weights=None) -> "PointSet":
        """CSV with header row ``label,c0,c1,...``."""
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or not rows[0] or rows[0][0] != "label":
            raise StructuralError("expected header row 'label,c0,c1,...'")
        labels = [r[0] for r in rows[1:]]
        coords = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
        return cls(coords, p, weights, labels)


@dataclass(frozen=True)
class GrowthCenterSet:
    """Points whose ball-count ratio |B(x,R)| / |B(x,r)| is at most K."""

    indices: tuple
    r: float
    R: float
    K: float


# -- operations ------------------------------------------------------------


def distance_matrix(S: PointSet) -> np.ndarray:
    """Cached symmetric weighted-l_p distance matrix with zero diagonal."""
    return S.dist


def _as_indices(C, S: PointSet) -> np.ndarray:
    idx = np.asarray(list(C), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= len(S)):
        raise StructuralError("index set not contained in the point set")
    return idx


def diameter(C, S: PointSet) -> float:
    idx = _as_indices(C, S)
    if idx.size == 0:
        raise DomainError("diameter of an empty set")
    if idx.size == 1:
        return 0.0
    return float(S.dist[np.ix_(idx, idx)].max())


def radius_center(
    C,
    S: PointSet,
    ambient: AmbientMode = AmbientMode.WITHIN_SET,
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> tuple[float, np.ndarray]:
    """Circumradius of ``C`` and a center achieving it.

    WITHIN_SET minimizes over centers in S (exact).  CONTINUOUS_LP runs a
    projected subgradient descent over the ambient space (2-point sets use
    the exact midpoint, optimal for every p).
    """
    idx = _as_indices(C, S)
    if idx.size == 0:
        raise DomainError("radius of an empty set")
    if idx.size == 1:
        return 0.0, S.coords[idx[0]].copy()
    maxd = S.dist[:, idx].max(axis=1)
    j = int(np.argmin(maxd))
    within = float(maxd[j]), S.coords[j].copy()
    if ambient is AmbientMode.WITHIN_SET:
        return within
    if idx.size == 2:
        center = 0.5 * (S.coords[idx[0]] + S.coords[idx[1]])
        return 0.5 * float(S.dist[idx[0], idx[1]]), center
    free = _min_enclosing_ball(S.coords[idx], S.weights, S.p, tol, max_iter)
    # any in-set center is feasible for the free problem, so keep the better
    return free if free[0] <= within[0] else within


def radius(C, S: PointSet, ambient: AmbientMode = AmbientMode.WITHIN_SET, **kw) -> float:
    return radius_center(C, S, ambient, **kw)[0]


def _min_enclosing_ball(pts, weights, p, tol, max_iter):
    """Subgradient descent for min_c max_i ||x_i - c||_{p,w}.

    Starting from the mean keeps every iterate's value <= diam(pts), so the
    returned radius is always a valid covering radius for its center.
    """
    center = pts.mean(axis=0)
    d = kernels.cross_lp(pts, center[None, :], weights, p)[:, 0]
    scale = float(d.max()) or 1.0
    best_val = np.inf
    best_center = center.copy()
    stall_window = max(200, max_iter // 10)
    last_improve = 0
    t = 0
    for t in range(1, max_iter + 1):
        i = int(np.argmax(d))
        val = float(d[i])
        if val < best_val - tol * scale:
            last_improve = t
        if val < best_val:
            best_val = val
            best_center = center.copy()
        diff = pts[i] - center
        step_dir = weights * np.sign(diff) * np.abs(diff) ** (p - 1)
        gn = float(np.linalg.norm(step_dir))
        if gn == 0.0 or best_val == 0.0:
            break
        center = center + (0.5 * scale / np.sqrt(t)) * step_dir / gn
        if t - last_improve > stall_window:
            break
        d = kernels.cross_lp(pts, center[None, :], weights, p)[:, 0]
    if t == max_iter and max_iter - last_improve <= stall_window:
        raise NumericalError(
            "min enclosing ball still improving at the iteration cap",
            achieved=best_val,
        )
    return best_val, best_center


def lp_sphere_sample(rng: np.random.Generator, dim: int, weights, p: float) -> np.ndarray:
    """Unit vector of the weighted l_p sphere via a p-generalized normal draw."""
    g = rng.gamma(1.0 / p, size=dim) ** (1.0 / p)
    g *= rng.choice([-1.0, 1.0], size=dim)
    nrm = float(lp_norm(g, np.asarray(weights), p))
    if nrm == 0.0:
        g[0] = 1.0
        nrm = float(lp_norm(g, np.asarray(weights), p))
    return g / nrm


def neighborhood_sample(
    S: PointSet, C, r: float, count: int, rng: np.random.Generator
) -> PointSet:
    """Augment S with ``count`` points drawn within distance r of C.

    Each sample is x + rho*u for a uniformly chosen x in C, rho uniform on
    [0, r], and u on the weighted l_p unit sphere.  Every added point is
    asserted to be within r of C.
    """
    if r < 0:
        raise DomainError("neighborhood radius must be nonnegative")
    idx = _as_indices(C, S)
    if idx.size == 0:
        raise DomainError("neighborhood of an empty set")
    extra = np.empty((count, S.dim))
    for i in range(count):
        x = S.coords[rng.choice(idx)]
        u = lp_sphere_sample(rng, S.dim, S.weights, S.p)
        rho = rng.uniform(0.0, r) * (1.0 - 1e-12)
        extra[i] = x + rho * u
    if count:
        d = kernels.cross_lp(extra, S.coords[idx], S.weights, S.p).min(axis=1)
        assert np.all(d <= r), "neighborhood sample escaped its radius"
    labels = [f"nbr{i:04d}" for i in range(count)]
    return S.with_extra_points(extra, labels)


def greedy_net(S: PointSet, r: float) -> list[int]:
    """Greedy r-net in ascending label (= index) order.

    The result is r-separated (pairwise distances strictly > r) and r-dense
    (every point within r of some net point).
    """
    if r <= 0:
        raise DomainError("net granularity must be positive")
    return greedy_net_subset(S, np.arange(len(S)), r)


def greedy_net_subset(S: PointSet, subset: np.ndarray, r: float) -> list[int]:
    """Greedy r-net of a subset (global indices, scanned in index order)."""
    subset = np.asarray(subset, dtype=np.int64)
    covered = np.zeros(subset.size, dtype=bool)
    net: list[int] = []
    dist = S.dist
    for pos in range(subset.size):
        if covered[pos]:
            continue
        i = int(subset[pos])
        net.append(i)
        covered |= dist[i, subset] <= r
    return net


def growth_centers(S: PointSet, r: float, R: float, K: float) -> GrowthCenterSet:
    """Exactly the points x with |B(x,R)| / |B(x,r)| <= K (closed balls)."""
    if r > R:
        raise DomainError("need r <= R")
    if K < 1:
        raise DomainError("need K >= 1")
    if r < 0:
        raise DomainError("need r >= 0")
    small = (S.dist <= r).sum(axis=1)
    big = (S.dist <= R).sum(axis=1)
    ok = big <= K * small
    return GrowthCenterSet(tuple(np.nonzero(ok)[0].tolist()), r, R, K)


def ball_count(S: PointSet, i: int, r: float) -> int:
    return int((S.dist[i] <= r).sum())


def doubling_estimate(S: PointSet, max_points: int = 64, rng=None) -> float:
    """Upper estimate of the doubling constant.

    For sampled x and radii r, greedily cover B(x, 2r) by radius-r balls
    centered at points of S; the estimate is the largest cover size seen.
    """
    n = len(S)
    if n == 1:
        return 1.0
    dist = S.dist
    if n <= max_points or rng is None:
        xs = np.arange(n)
    else:
        xs = rng.choice(n, size=max_points, replace=False)
    scales = np.unique(dist[dist > 0])
    if scales.size > 24:
        scales = scales[np.linspace(0, scales.size - 1, 24).astype(int)]
    best = 1
    for x in xs:
        for base in scales:
            for f in (0.5, 0.75, 0.999):
                r = f * float(base)
                inside = np.nonzero(dist[x] <= 2 * r)[0]
                covered = np.zeros(inside.size, dtype=bool)
                cnt = 0
                for pos in range(inside.size):
                    if covered[pos]:
                        continue
                    cnt += 1
                    covered |= dist[inside[pos], inside] <= r
                best = max(best, cnt)
    return float(best)
