"""Deterministic rates and constants for the strong laws of trimmed regions.

Covers the LIL normaliser, Marcinkiewicz-Zygmund rates, the variance
envelope ``sqrt(M m - m^2)``, LIL constants, the derivative functional of the
Hausdorff distance between perturbed level sets, and finite-radius
oscillation of the depth around a point.

Sign convention: ``u_x`` is the outward normal of the trimmed region at a
boundary point ``x``, so the depth gradient points along ``-u_x``. The Radon
transform is even in ``u``, so the sign never changes a numeric result here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .distributions import Cauchy2D, ModelDistribution, UniformSquare, check_alpha
from .geometry import ConvexRegion, GeometryError, hausdorff_distance, point_to_region_distances

MIN_RESOLUTION = 64


def lambda_n(n):
    """LIL normaliser ``sqrt(2 log log n / n)`` for ``n >= 3``."""
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 3):
        raise ValueError("lambda_n needs n >= 3")
    out = np.sqrt(2.0 * np.log(np.log(n_arr)) / n_arr)
    return float(out) if out.ndim == 0 else out


def mz_rate(n, p: float):
    """``n ** ((1 - p) / p)`` for a weight law with a finite ``p``-th moment."""
    if not 1.0 <= p < 2.0:
        raise ValueError(f"p must lie in [1, 2), got {p}")
    out = np.asarray(n, dtype=float) ** ((1.0 - p) / p)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RateSequence:
    """``lambda_n`` (kind ``"lambda"``) or ``n^((1-p)/p)`` (kind ``"mz"``)."""

    kind: str = "lambda"
    p: float | None = None

    def __post_init__(self):
        if self.kind not in ("lambda", "mz"):
            raise ValueError(f"unknown rate kind {self.kind!r}")
        if self.kind == "mz":
            if self.p is None or not 1.0 <= self.p < 2.0:
                raise ValueError("mz rate needs p in [1, 2)")

    def __call__(self, n):
        return lambda_n(n) if self.kind == "lambda" else mz_rate(n, self.p)


def envelope(M: float, m: float) -> float:
    """``sqrt(M m - m^2)``: the largest standard deviation of ``xi 1_H(X)``."""
    rad = m * (M - m)
    if rad < 0:
        raise ValueError(f"negative radicand M*m - m^2 = {rad} for M={M}, m={m}")
    return math.sqrt(rad)


@dataclass(frozen=True)
class LILConstant:
    """Limsup constant, either exact (``value``) or bracketed (``lower``, ``upper``)."""

    distribution: str
    alpha: float
    M: float
    min_radon: float
    value: float | None = None
    lower: float | None = None
    upper: float | None = None

    @property
    def is_exact(self) -> bool:
        return self.value is not None

    def to_dict(self) -> dict:
        out = {"distribution": self.distribution, "alpha": self.alpha, "M": self.M}
        if self.is_exact:
            out["constant"] = self.value
        else:
            out["constant"] = [self.lower, self.upper]
        out["min_radon"] = self.min_radon
        return out


def lil_constant(d: ModelDistribution, alpha: float, M: float) -> LILConstant:
    check_alpha(alpha)
    if M < 1.0:
        raise ValueError(f"second moment M must be at least 1, got {M}")
    env = envelope(M, alpha)
    if isinstance(d, Cauchy2D):
        # vertices of the square have zero curvature radius; only a bracket is known
        lo = math.pi * env / math.sin(math.pi * alpha) ** 2
        return LILConstant(d.tag, alpha, M, d.min_boundary_radon(alpha), lower=lo, upper=math.sqrt(2) * lo)
    mr = d.min_boundary_radon(alpha)
    return LILConstant(d.tag, alpha, M, mr, value=env / mr)


# boundary functionals ---------------------------------------------------------


def boundary_samples(r: ConvexRegion, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """About ``resolution`` boundary points with outward normals.

    Polygon vertices get the average of the adjacent edge normals; extra
    points placed along long edges get the edge normal. Polygons that already
    have at least ``resolution`` vertices are returned as is.
    """
    v = r.vertices
    if len(v) < 3:
        raise GeometryError("boundary sampling needs a polygon with at least 3 vertices")
    vn = r.outward_normals()
    if len(v) >= resolution:
        return v.copy(), vn
    e = np.roll(v, -1, axis=0) - v
    length = np.linalg.norm(e, axis=1)
    en = np.column_stack([e[:, 1], -e[:, 0]]) / length[:, None]
    extra = np.maximum(np.round(length / length.sum() * (resolution - len(v))).astype(int), 0)
    pts, nrm = [], []
    for i in range(len(v)):
        pts.append(v[i : i + 1])
        nrm.append(vn[i : i + 1])
        if extra[i]:
            s = (np.arange(1, extra[i] + 1) / (extra[i] + 1))[:, None]
            pts.append(v[i] + s * e[i])
            nrm.append(np.repeat(en[i : i + 1], extra[i], axis=0))
    return np.concatenate(pts), np.concatenate(nrm)


def phi_prime(
    d: ModelDistribution,
    alpha: float,
    phi: Callable[[np.ndarray], np.ndarray] | np.ndarray,
    resolution: int = 1024,
) -> float:
    """``max |phi(x)| / T(x, u_x)`` over sampled boundary points of ``R(alpha)``.

    ``phi`` is either a callable on ``(k, 2)`` point arrays or an array of
    values already evaluated at :func:`boundary_samples` of the region.
    """
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be at least {MIN_RESOLUTION}")
    x, u = boundary_samples(d.region(alpha, resolution), resolution)
    vals = np.asarray(phi(x) if callable(phi) else phi, dtype=float)
    if vals.shape != (len(x),):
        vals = np.broadcast_to(vals, (len(x),))
    dens = np.asarray(d.radon(_pull_inside(d, x), u), dtype=float)
    if np.any(dens <= 0):
        raise ValueError("Radon transform vanishes on the boundary: positive projected density violated")
    return float(np.max(np.abs(vals) / dens))


def _pull_inside(d: ModelDistribution, x: np.ndarray) -> np.ndarray:
    # region vertices can land on the support edge by rounding (square at the kinks)
    if d.support_box is None:
        return x
    xmin, ymin, xmax, ymax = d.support_box
    eps = 1e-12 * max(1.0, xmax - xmin, ymax - ymin)
    return np.clip(x, [xmin + eps, ymin + eps], [xmax - eps, ymax - eps])


def localization_points(d: ModelDistribution, alpha: float) -> np.ndarray | None:
    """Boundary points where the Hausdorff distance is localised, if any.

    Only the uniform square is supported: its rate is read off at the
    diagonal touch points ``(sqrt(alpha/2), sqrt(alpha/2))`` and reflections.
    """
    if isinstance(d, UniformSquare):
        a = math.sqrt(alpha / 2.0)
        return np.array([[a, a], [1 - a, a], [1 - a, 1 - a], [a, 1 - a]])
    return None


def localized_hausdorff(a: ConvexRegion, b: ConvexRegion, centers: np.ndarray, radius: float) -> float:
    """Hausdorff distance restricted to the balls ``B(center, radius)``.

    Vertices of each polygon inside the union of balls are measured against
    the other polygon; everything else is ignored.
    """
    out = 0.0
    for p, q in ((a, b), (b, a)):
        v = p.vertices
        near = np.min(np.linalg.norm(v[:, None, :] - centers[None, :, :], axis=-1), axis=1) <= radius
        if np.any(near):
            out = max(out, float(point_to_region_distances(v[near], q).max()))
    return out


def hausdorff_rate(
    d: ModelDistribution,
    alpha: float,
    t: float,
    resolution: int = 1024,
    localized: bool | None = None,
) -> float:
    """``rho_H(R(alpha + t), R(alpha)) / |t|`` with both regions at one resolution.

    ``localized`` defaults to True for the uniform square, where the rate is
    taken near the diagonals (radius 0.05 around the touch points).
    """
    check_alpha(alpha)
    if t == 0:
        raise ValueError("t must be nonzero")
    check_alpha(alpha + t)
    check_alpha(alpha - abs(t))
    ra = d.region(alpha, resolution)
    rb = d.region(alpha + t, resolution)
    if localized is None:
        localized = localization_points(d, alpha) is not None
    if localized:
        centers = localization_points(d, alpha)
        if centers is None:
            raise ValueError(f"no localisation known for {d.tag!r}")
        dist = localized_hausdorff(ra, rb, centers, 0.05)
    else:
        dist = hausdorff_distance(ra, rb)
    return dist / abs(t)


def hausdorff_rate_limit(d: ModelDistribution, alpha: float) -> float:
    """Limit of :func:`hausdorff_rate` as ``t -> 0``.

    ``1 / min_boundary_radon`` in general; for product Cauchy the squares
    are explicit and the limit is ``sqrt(2) pi / sin^2(pi alpha)``.
    """
    check_alpha(alpha)
    if isinstance(d, Cauchy2D):
        return math.sqrt(2.0) * math.pi / math.sin(math.pi * alpha) ** 2
    return 1.0 / d.min_boundary_radon(alpha)


@dataclass(frozen=True)
class RateEstimate:
    t: float
    rate: float
    rate_half: float

    @property
    def rel_change(self) -> float:
        return abs(self.rate - self.rate_half) / abs(self.rate_half)

    @property
    def stable(self) -> bool:
        """Halving ``t`` moved the estimate by less than 0.5%."""
        return self.rel_change < 5e-3


def richardson_rate(d: ModelDistribution, alpha: float, t: float, resolution: int = 1024) -> RateEstimate:
    return RateEstimate(
        t, hausdorff_rate(d, alpha, t, resolution), hausdorff_rate(d, alpha, t / 2, resolution)
    )


# oscillation on small balls ---------------------------------------------------

BALL_RADII = 64
BALL_ANGLES = 64


def ball_grid(x, r: float) -> np.ndarray:
    """Polar grid of ``BALL_RADII * BALL_ANGLES`` points in the closed ball ``B(x, r)``."""
    rad = r * np.arange(1, BALL_RADII + 1) / BALL_RADII
    ang = 2 * np.pi * np.arange(BALL_ANGLES) / BALL_ANGLES
    rr, aa = np.meshgrid(rad, ang, indexing="ij")
    x = np.asarray(x, dtype=float)
    return x + np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1).reshape(-1, 2)


def varpi(d: ModelDistribution, x, r: float, sign: int = 1) -> float:
    """Largest (``sign=+1``) or smallest (``sign=-1``) ``D(y) - D(x)`` over ``B(x, r)``."""
    if r <= 0:
        raise ValueError("r must be positive")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    x = np.asarray(x, dtype=float)
    y = ball_grid(x, r)
    if d.support_box is not None:
        ring = y[-BALL_ANGLES:]
        if not np.all(d.in_support(ring)):
            raise ValueError("ball leaves the support")
    diff = d.depth(y) - d.depth(x)
    return float(diff.max() if sign > 0 else diff.min())
