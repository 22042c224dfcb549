"""Power maps between l_p and l_q spheres and their radial pullback property.

The coordinatewise map x -> |x|^(p/q) sgn(x) takes the weighted l_p space
bijectively onto the weighted l_q space, preserving the unit sphere.  For
p >= 2 and q = 2 its restriction to the unit ball is Lipschitz with constant
below p, and it has a much less classical feature that this module exposes:
the preimage of a small Hilbert ball around the image of any unit-ball point
x is contained in an l_p ball of radius strictly below 1, centered at a
shrunk copy of x.  That radius decrease is what makes induction on scales
work with ratio 1 + 1/(4p).

Everything here reduces to a scalar inequality (``pointwise_slack``) and a
closed-form inclusion radius (``radial_inclusion_radius``); both are exposed
with signed slacks so near-violations stay visible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from metriclab.errors import DomainError
from metriclab.metric import WeightedVector, lp_norm


def signed_power(t: np.ndarray, e: float) -> np.ndarray:
    """|t|^e * sgn(t), with sgn(0) = 0 so zeros stay fixed."""
    return np.abs(t) ** e * np.sign(t)


def mazur_coords(coords: np.ndarray, p: float, q: float) -> np.ndarray:
    """Coordinatewise |c|^(p/q) sgn(c); array form used by the hot paths."""
    if q <= 0:
        raise DomainError(f"target exponent must be positive, got {q}")
    if p == q:
        return np.array(coords, dtype=np.float64, copy=True)
    return signed_power(np.asarray(coords, dtype=np.float64), p / q)


def mazur(x: WeightedVector, q: float) -> WeightedVector:
    """Power map into exponent q; weights unchanged, sphere preserved.

    The q-norm of the image equals ||x||_p^(p/q), so unit vectors stay unit.
    """
    return WeightedVector(mazur_coords(x.coords, x.p, q), x.weights, q)


def mazur_roundtrip(x: WeightedVector, q: float) -> WeightedVector:
    """mazur there and back: recovers x up to floating error."""
    return mazur(mazur(x, q), x.p)


@dataclass(frozen=True)
class MazurParams:
    """Shift weight and interpolation parameters for the radial inclusion."""

    p: float
    alpha: float
    lam: float
    sigma: float

    def __post_init__(self):
        if self.p < 2:
            raise DomainError("need p >= 2")
        if not (0 < self.alpha <= 1.0 / self.p):
            raise DomainError("need 0 < alpha <= 1/p")
        if not (0 < self.lam < 1) or not (0 < self.sigma < 1):
            raise DomainError("need lambda, sigma in (0, 1)")


def pointwise_slack(u, v, alpha: float, lam: float, p: float):
    """Signed slack of the scalar shifted-power inequality.

    Returns RHS - LHS of

        | s(u+v) - alpha*s(u) |^p  <=  (1-lam*alpha)^p u^2
                                       + 5 v^2 / ((1-lam) p alpha),

    where s(t) = |t|^(2/p) sgn(t).  Nonnegative for all real u, v whenever
    p >= 2, 0 < alpha <= 1/p, 0 < lam < 1.
    """
    MazurParams(p, alpha, lam, 0.5)  # validates p, alpha, lam
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    lhs = np.abs(signed_power(u + v, 2.0 / p) - alpha * signed_power(u, 2.0 / p)) ** p
    rhs = (1.0 - lam * alpha) ** p * u**2 + 5.0 * v**2 / ((1.0 - lam) * p * alpha)
    return rhs - lhs


def radial_inclusion_radius(params: MazurParams) -> float:
    """Hilbert-ball radius r(alpha, p, sigma, lam) certified for the pullback:

        r = sqrt( (1-lam) p alpha / 5 *
                  ((1 - sigma*lam*alpha)^p - (1 - lam*alpha)^p) ).
    """
    a, l, s, p = params.alpha, params.lam, params.sigma, params.p
    inner = (1.0 - s * l * a) ** p - (1.0 - l * a) ** p
    return float(np.sqrt((1.0 - l) * p * a / 5.0 * inner))


def radial_inclusion_check(
    x: WeightedVector, w: WeightedVector, params: MazurParams
) -> tuple[bool, float]:
    """Does the pullback of w land in the shrunk ball around alpha*x?

    Preconditions (enforced): ||x||_p <= 1 and ||w - mazur(x, 2)||_2 <= r
    with r from :func:`radial_inclusion_radius`.  Returns (holds, margin)
    where margin = (1 - sigma*lam*alpha) - || mazur_inverse(w) - alpha*x ||_p;
    the theory guarantees margin >= 0.
    """
    if x.p != params.p:
        raise DomainError("x must carry the exponent of params")
    if w.p != 2:
        raise DomainError("w must live in the Hilbert image space")
    if x.norm() > 1.0 + 1e-12:
        raise DomainError("x must lie in the unit ball")
    r = radial_inclusion_radius(params)
    img = mazur_coords(x.coords, params.p, 2.0)
    dist = float(lp_norm(w.coords - img, w.weights, 2.0))
    if dist > r * (1.0 + 1e-12):
        raise DomainError(f"w is at Hilbert distance {dist:.3g} > r = {r:.3g}")
    pulled = mazur_coords(w.coords, 2.0, params.p)
    lhs = float(lp_norm(pulled - params.alpha * x.coords, x.weights, params.p))
    margin = (1.0 - params.sigma * params.lam * params.alpha) - lhs
    return margin >= 0.0, margin


@dataclass(frozen=True)
class RadialMapSpec:
    """Localized radial map around center z at scale delta.

    K = 1 + 1/(4p) is the scale ratio the pullback property supports,
    D = p / (K*gamma) the resulting distortion budget, gamma the Hilbert
    pullback radius constant (universal; 0.14 by default, configurable).
    """

    z: np.ndarray
    delta: float
    p: float
    gamma: float = 0.14
    K: float = field(init=False)
    D: float = field(init=False)

    def __post_init__(self):
        if self.delta <= 0:
            raise DomainError("scale must be positive")
        if self.p < 2:
            raise DomainError("need p >= 2")
        if not (0 < self.gamma < 1):
            raise DomainError("gamma must lie in (0, 1)")
        object.__setattr__(self, "z", np.asarray(self.z, dtype=np.float64))
        object.__setattr__(self, "K", 1.0 + 1.0 / (4.0 * self.p))
        object.__setattr__(self, "D", self.p / (self.K * self.gamma))


class RadialMap:
    """f(x) = K*delta * M_{p->2}((x - z) / (K*delta)) and its inverse.

    1-homogeneous rescaling of the power map; Lipschitz witness p on the
    ball B(z, K*delta).  ``pullback_center``/``pullback_radius`` give the
    certified enclosing ball for preimages of Hilbert balls of radius
    gamma*K*delta around image points.
    """

    def __init__(self, spec: RadialMapSpec):
        self.spec = spec
        self._scale = spec.K * spec.delta
        self.lip_witness = spec.p

    def forward(self, coords: np.ndarray) -> np.ndarray:
        rel = (np.atleast_2d(coords) - self.spec.z) / self._scale
        return self._scale * mazur_coords(rel, self.spec.p, 2.0)

    def inverse(self, img: np.ndarray) -> np.ndarray:
        rel = np.atleast_2d(img) / self._scale
        return self.spec.z + self._scale * mazur_coords(rel, 2.0, self.spec.p)

    @property
    def image_ball_radius(self) -> float:
        """Hilbert radius gamma*K*delta whose pullback is certified."""
        return self.spec.gamma * self._scale

    def pullback_center(self, x: np.ndarray) -> np.ndarray:
        """Center z + (x - z)/p of the certified enclosing l_p ball."""
        return self.spec.z + (np.asarray(x) - self.spec.z) / self.spec.p

    @property
    def pullback_radius(self) -> float:
        """(1 - 1/(4p)) * K * delta, strictly below delta."""
        return (1.0 - 1.0 / (4.0 * self.spec.p)) * self._scale


def localized_radial_map(spec: RadialMapSpec) -> RadialMap:
    return RadialMap(spec)
