"""Dimension reduction with a Lipschitz extension: random projection on an
anchor set, extended to arbitrary Euclidean queries without increasing the
Lipschitz constant.

The anchor map h is a scaled random-sign projection, resampled until every
anchor pair satisfies ||a-b||/2 <= ||h(a)-h(b)|| <= ||a-b|| (the scale is
re-optimized per draw, so a draw succeeds exactly when its pair-ratio spread
is within a factor 2).  Queries are answered by the exact minimizer of the
squared-margin functional

    F(y) = max_a ( ||y - h(a)||^2 - ||x - a||^2 ),

solved through its concave dual over the probability simplex (a weighted
min-enclosing-ball problem) with a primal-dual gap certificate.  The
classical extension theorem guarantees min F <= 0, i.e. the returned point
satisfies ||H(x) - h(a)|| <= ||x - a|| for every anchor a.

Answered queries are appended to the constraint set (the query cache), so
every later query is 1-Lipschitz against every earlier one: the map realized
on any queried set is exactly a nonexpansive extension of h, not just an
approximation of one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from metriclab.errors import DomainError, NumericalError

_JL_CONSTANT = 24.0
_MAX_RETRIES = 64


@dataclass(frozen=True)
class JLMap:
    """h(x) = scale/sqrt(k) * sign_matrix @ x."""

    matrix: np.ndarray  # (k, d) entries +-1
    scale: float

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        return (self.scale / math.sqrt(self.matrix.shape[0])) * (X @ self.matrix.T)


def sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Plain squared Euclidean distances between row sets, via the Gram form."""
    na = np.einsum("ij,ij->i", a, a)
    nb = np.einsum("ij,ij->i", b, b)
    out = na[:, None] + nb[None, :] - 2.0 * (a @ b.T)
    return np.maximum(out, 0.0, out)


def _pair_ratio_range(images: np.ndarray, anchors: np.ndarray) -> tuple[float, float]:
    """Extreme ratios ||h(a)-h(b)|| / ||a-b|| over all anchor pairs."""
    n = anchors.shape[0]
    dd = sq_dists(anchors, anchors)
    di = sq_dists(images, images)
    iu, ju = np.triu_indices(n, k=1)
    dd = dd[iu, ju]
    if float(dd.min()) == 0.0:
        raise DomainError("anchor set contains identical points")
    ratio2 = di[iu, ju] / dd
    return math.sqrt(float(ratio2.min())), math.sqrt(float(ratio2.max()))


def jl_anchor_map(
    anchors: np.ndarray, rng: np.random.Generator, c_jl: float = _JL_CONSTANT
) -> tuple[int, JLMap]:
    """Random-sign projection to k = ceil(c_jl * ln m) dimensions, resampled
    until the anchor pair bounds [1/2, 1] hold; at most 64 retries, then one
    50% raise of k."""
    anchors = np.atleast_2d(np.asarray(anchors, dtype=np.float64))
    m = anchors.shape[0]
    if m < 2:
        raise DomainError("need at least two anchors")
    k = int(math.ceil(c_jl * math.log(m)))
    for duty in range(2):
        for _ in range(_MAX_RETRIES):
            signs = rng.choice((-1.0, 1.0), size=(k, anchors.shape[1]))
            raw = JLMap(signs, 1.0)
            lo, hi = _pair_ratio_range(raw.apply(anchors), anchors)
            if hi <= 2.0 * lo * (1.0 - 1e-9):
                scale = 1.0 / math.sqrt(2.0 * lo * hi)
                return k, JLMap(signs, scale)
        k = int(math.ceil(1.5 * k))
    raise NumericalError("random projection failed the pair bounds after retries")


class ReducedMap:
    """Anchor projection plus nonexpansive extension, with a query cache.

    By default the anchor map is a fresh random projection; passing
    ``images`` instead extends an arbitrary given nonexpansive anchor map.
    """

    def __init__(self, anchors: np.ndarray, rng: np.random.Generator,
                 c_jl: float = _JL_CONSTANT, sequential: bool = True,
                 images: np.ndarray | None = None):
        self.anchors = np.atleast_2d(np.asarray(anchors, dtype=np.float64)).copy()
        if images is None:
            self.k, self.jl = jl_anchor_map(self.anchors, rng, c_jl)
            self.images = self.jl.apply(self.anchors)
        else:
            images = np.atleast_2d(np.asarray(images, dtype=np.float64)).copy()
            if images.shape[0] != self.anchors.shape[0]:
                raise DomainError("one image per anchor required")
            dd = sq_dists(self.anchors, self.anchors)
            di = sq_dists(images, images)
            if np.any(di > dd * (1 + 1e-9) + 1e-12):
                raise DomainError("anchor images are not nonexpansive")
            self.jl = None
            self.k = images.shape[1]
            self.images = images
        self.sequential = sequential
        self._anchor_lookup = {a.tobytes(): i for i, a in enumerate(self.anchors)}
        self._cache: dict[bytes, np.ndarray] = {}
        self._hist_pts: list[np.ndarray] = []
        self._hist_img: list[np.ndarray] = []
        self._scale = float(
            np.max(np.linalg.norm(self.anchors - self.anchors[0], axis=1))
        ) or 1.0

    # -- constraint sets ---------------------------------------------------

    def _constraints(self):
        if self._hist_pts:
            pts = np.vstack([self.anchors, np.array(self._hist_pts)])
            img = np.vstack([self.images, np.array(self._hist_img)])
            return pts, img
        return self.anchors, self.images

    def margin(self, x: np.ndarray, y: np.ndarray) -> float:
        """m(y) = max over constraints of ||y - image|| - ||x - point||."""
        pts, img = self._constraints()
        return float(
            np.max(np.linalg.norm(y - img, axis=1) - np.linalg.norm(x - pts, axis=1))
        )

    def query(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        key = x.tobytes()
        hit = self._anchor_lookup.get(key)
        if hit is not None:
            return self.images[hit].copy()
        cached = self._cache.get(key)
        if cached is not None:
            return cached.copy()
        y = self._solve(x)
        m = self.margin(x, y)
        if m > 1e-6 * max(1.0, self._scale):
            raise NumericalError("extension query failed its certificate", achieved=m)
        self._cache[key] = y
        if self.sequential:
            self._hist_pts.append(x.copy())
            self._hist_img.append(y.copy())
        return y.copy()

    def batch_query(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.array([self.query(x) for x in X])

    # -- solver --------------------------------------------------------------

    def _solve(self, x: np.ndarray) -> np.ndarray:
        pts, img = self._constraints()
        n = pts.shape[0]
        if n > 96:
            # row generation: start from the nearest constraints, add violators
            d = np.linalg.norm(pts - x, axis=1)
            active = np.argsort(d)[:64]
            for _ in range(12):
                y = _minimax_ball(img[active], d[active] ** 2)
                viol = np.linalg.norm(img - y, axis=1) ** 2 - d**2
                worst = int(np.argmax(viol))
                if viol[worst] <= 1e-14 * max(1.0, self._scale**2):
                    return y
                active = np.unique(np.concatenate([active, [worst]]))
            return _minimax_ball(img, d**2)
        d = np.linalg.norm(pts - x, axis=1)
        return _minimax_ball(img, d**2)


def _minimax_ball(
    h: np.ndarray, c: np.ndarray, max_iter: int = 10_000, tol: float = 1e-13
) -> np.ndarray:
    """argmin_y max_a (||y - h_a||^2 - c_a).

    Solved through the concave dual over the probability simplex,
    g(mu) = sum mu_a ell_a - ||sum mu_a h_a||^2 with ell_a = ||h_a||^2 - c_a,
    by Frank-Wolfe with away steps and exact line search; stops on the
    primal-dual gap.  The primal minimizer is y = sum mu_a h_a.
    """
    n = h.shape[0]
    ell = np.einsum("ij,ij->i", h, h) - c
    mu = np.zeros(n)
    mu[int(np.argmin(c))] = 1.0
    y = h[int(np.argmin(c))].copy()
    lin = float(mu @ ell)
    scale = max(1.0, float(np.abs(ell).max()))
    for _ in range(max_iter):
        grad = ell - 2.0 * (h @ y)
        s = int(np.argmax(grad))
        yy = float(y @ y)
        primal = grad[s] + yy          # F(y) = ||y||^2 + max_a grad_a
        dual = lin - yy                # g(mu)
        if primal - dual <= tol * scale:
            break
        avg = lin - 2.0 * yy           # <grad, mu>
        support = np.nonzero(mu > 1e-15)[0]
        v = support[int(np.argmin(grad[support]))]
        gain_fw = grad[s] - avg
        gain_aw = avg - grad[v]
        if gain_aw > gain_fw and mu[v] < 1.0 - 1e-15:
            d = y - h[v]
            dd = float(d @ d)
            t_max = mu[v] / (1.0 - mu[v])
            t = min(gain_aw / (2.0 * dd), t_max) if dd > 0 else 0.0
            if t > 0.0:
                mu *= 1.0 + t
                mu[v] -= t
                np.maximum(mu, 0.0, out=mu)
                mu /= mu.sum()
                y = y + t * d
                lin = float(mu @ ell)
                continue
        d = h[s] - y
        dd = float(d @ d)
        if dd == 0.0:
            break
        t = min(max(gain_fw / (2.0 * dd), 0.0), 1.0)
        if t == 0.0:
            break
        mu *= 1.0 - t
        mu[s] += t
        y = y + t * d
        lin = float(mu @ ell)
    return y


def kirszbraun_query(R: ReducedMap, x: np.ndarray) -> np.ndarray:
    """Functional form of :meth:`ReducedMap.query`."""
    return R.query(x)


@dataclass
class GuaranteeReport:
    """Per-pair slacks of the additive two-sided guarantee

    ||x-y||/2 - 3/2 d(x,C) - 3/2 d(y,C) <= ||H(x)-H(y)|| <= ||x-y||."""

    lower_slack: np.ndarray
    upper_slack: np.ndarray
    lower_violations: int
    upper_violations: int

    @property
    def ok(self) -> bool:
        return self.lower_violations == 0 and self.upper_violations == 0


def reduce_map_guarantee(R: ReducedMap, pairs: np.ndarray) -> GuaranteeReport:
    """Check both additive inequalities on an array of query pairs
    (shape (m, 2, d)); upper tolerance 1e-6, lower at solver tolerance."""
    lower, upper = [], []
    tol = 1e-6 * max(1.0, R._scale)
    for x, y in pairs:
        hx, hy = R.query(x), R.query(y)
        di = float(np.linalg.norm(hx - hy))
        dd = float(np.linalg.norm(x - y))
        dcx = float(np.linalg.norm(R.anchors - x, axis=1).min())
        dcy = float(np.linalg.norm(R.anchors - y, axis=1).min())
        lower.append(di - (0.5 * dd - 1.5 * dcx - 1.5 * dcy))
        upper.append(dd - di)
    lower = np.asarray(lower)
    upper = np.asarray(upper)
    return GuaranteeReport(
        lower, upper,
        int(np.count_nonzero(lower < -tol)),
        int(np.count_nonzero(upper < -tol)),
    )


def ball_pullback_violations(
    R: ReducedMap, points: np.ndarray, x: np.ndarray, r: float
) -> int:
    """Count points of B(C, r) whose images fall in B(H(x), r) but which lie
    farther than 8r from x (the guarantee says there are none)."""
    tol = 1e-9 * max(1.0, R._scale)
    hx = R.query(x)
    bad = 0
    for ptx in points:
        if np.linalg.norm(R.anchors - ptx, axis=1).min() > r * (1 + 1e-12):
            continue
        if np.linalg.norm(R.query(ptx) - hx) <= r:
            if np.linalg.norm(ptx - x) > 8.0 * r + tol:
                bad += 1
    return bad
