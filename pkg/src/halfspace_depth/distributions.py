"""Reference laws with closed-form halfplane mass, depth, trimmed regions and
Radon transforms.

Planar variants are centrally symmetric, so the largest attainable depth is
1/2 and every trimmed region is requested for ``0 < alpha < 1/2``.
Vectorised methods accept arrays of points ``(..., 2)``, directions
``(..., 2)`` and offsets ``(...)`` and broadcast them against each other.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special, stats

from .geometry import ConvexRegion, Halfplane, UnitDirection, regular_polygon

ALPHA_MAX = 0.5


class OutOfSupportError(ValueError):
    pass


def check_alpha(alpha: float, upper_inclusive: bool = False) -> float:
    alpha = float(alpha)
    ok = 0.0 < alpha <= ALPHA_MAX if upper_inclusive else 0.0 < alpha < ALPHA_MAX
    if not ok:
        raise ValueError(f"alpha must lie in (0, 1/2{']' if upper_inclusive else ')'}, got {alpha}")
    return alpha


def _unit(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return u / np.linalg.norm(u, axis=-1, keepdims=True)


class ModelDistribution(ABC):
    tag: str = ""
    alpha_max: float = ALPHA_MAX
    #: (xmin, ymin, xmax, ymax) of the support, or None when unbounded
    support_box: tuple[float, float, float, float] | None = None

    @abstractmethod
    def mass(self, u, t) -> np.ndarray:
        """mu({z : <z, u> <= t}) for unit ``u``."""

    @abstractmethod
    def depth(self, x) -> np.ndarray: ...

    @abstractmethod
    def region(self, alpha: float, resolution: int = 1024) -> ConvexRegion: ...

    @abstractmethod
    def radon(self, x, u) -> np.ndarray:
        """Density of the projection on ``u`` evaluated at ``<x, u>``."""

    @abstractmethod
    def min_boundary_radon(self, alpha: float) -> float: ...

    @abstractmethod
    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray: ...

    def in_support(self, x) -> np.ndarray:
        return np.ones(np.shape(x)[:-1], dtype=bool)

    def projected_cdf(self, u, t) -> np.ndarray:
        return self.mass(u, t)

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


@dataclass(frozen=True, repr=False)
class UniformDisk(ModelDistribution):
    radius: float = 1.0
    tag = "disk"

    @property
    def support_box(self):
        r = self.radius
        return (-r, -r, r, r)

    @staticmethod
    def _segment_fraction(s):
        """Mass of ``{<z,u> <= s}`` for the uniform law on the unit disk."""
        s = np.clip(s, -1.0, 1.0)
        return 0.5 + (s * np.sqrt(1.0 - s * s) + np.arcsin(s)) / np.pi

    def mass(self, u, t):
        return self._segment_fraction(np.asarray(t, dtype=float) / self.radius)

    def depth(self, x):
        r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1) / self.radius
        return np.where(r >= 1.0, 0.0, 1.0 - self._segment_fraction(r))

    def level_radius(self, alpha: float) -> float:
        return self.radius * disk_level_radius(alpha)

    def region(self, alpha, resolution=1024):
        check_alpha(alpha)
        return regular_polygon(self.level_radius(alpha), resolution)

    def in_support(self, x):
        return np.linalg.norm(np.asarray(x, dtype=float), axis=-1) < self.radius

    def radon(self, x, u):
        x = np.asarray(x, dtype=float)
        if not np.all(self.in_support(x)):
            raise OutOfSupportError("Radon transform requested outside the open disk")
        s = (x * _unit(u)).sum(-1)
        rho = self.radius
        return 2.0 * np.sqrt(np.maximum(rho * rho - s * s, 0.0)) / (np.pi * rho * rho)

    def min_boundary_radon(self, alpha):
        check_alpha(alpha)
        r = disk_level_radius(alpha)
        return 2.0 * math.sqrt(1.0 - r * r) / (math.pi * self.radius)

    def sample(self, n, rng):
        r = self.radius * np.sqrt(rng.random(n))
        th = 2 * np.pi * rng.random(n)
        return np.column_stack([r * np.cos(th), r * np.sin(th)])

    def __repr__(self):
        return f"UniformDisk(radius={self.radius})"


def disk_level_radius(alpha: float, tol: float = 1e-12) -> float:
    """Radius ``r`` of the unit-disk trimmed region at level ``alpha``.

    Solves ``arcsin r + r sqrt(1 - r^2) = pi/2 - pi alpha`` by bisection; the
    left side increases on ``[0, 1]``.
    """
    alpha = check_alpha(alpha, upper_inclusive=True)
    target = math.pi / 2 - math.pi * alpha
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if math.asin(mid) + mid * math.sqrt(1.0 - mid * mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi) if alpha < ALPHA_MAX else 0.0


class UniformSquare(ModelDistribution):
    """Uniform law on ``[0, 1]^2``."""

    tag = "square"
    support_box = (0.0, 0.0, 1.0, 1.0)

    def mass(self, u, t):
        # <X, u> = a*U1 + b*U2 + shift, U uniform; cdf of a sum of two uniforms
        u = _unit(u)
        t = np.asarray(t, dtype=float)
        a = np.abs(u[..., 0])
        b = np.abs(u[..., 1])
        shift = np.minimum(u[..., 0], 0.0) + np.minimum(u[..., 1], 0.0)
        s = t - shift
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        s = np.clip(s, 0.0, lo + hi)
        safe_lo = np.where(lo > 0, lo, 1.0)
        ramp = np.where(lo > 0, s * s / (2 * safe_lo * hi), 0.0)
        mid = np.where(lo > 0, (s - lo / 2) / hi, s / hi)
        top = 1.0 - np.where(lo > 0, (lo + hi - s) ** 2 / (2 * safe_lo * hi), 0.0)
        return np.where(s <= lo, ramp, np.where(s <= hi, mid, top))

    def depth(self, x):
        x = np.asarray(x, dtype=float)
        m1 = np.minimum(x[..., 0], 1.0 - x[..., 0])
        m2 = np.minimum(x[..., 1], 1.0 - x[..., 1])
        return np.where((m1 < 0) | (m2 < 0), 0.0, 2.0 * m1 * m2)

    def region(self, alpha, resolution=1024):
        """Polygon through points of the four hyperbolic arcs.

        In the corner at the origin the boundary is ``x2 = alpha / (2 x1)``
        for ``x1`` in ``[alpha, 1/2]``; the other three arcs are reflections.
        """
        check_alpha(alpha)
        if resolution < 16:
            raise ValueError("resolution must be at least 16")
        per_arc = max(resolution // 4, 2)
        x1 = np.linspace(0.5, alpha, per_arc + 1)
        arc = np.column_stack([x1, alpha / (2 * x1)])
        # reflect the corner arc into all four corners; the kinks at
        # (1/2, alpha) etc. are shared by neighbouring arcs and merged
        v = np.concatenate(
            [
                np.column_stack([0.5 + sx * (arc[:, 0] - 0.5), 0.5 + sy * (arc[:, 1] - 0.5)])
                for sx, sy in [(1, 1), (-1, 1), (-1, -1), (1, -1)]
            ]
        )
        return ConvexRegion.from_points(_ccw_sort(v))

    def in_support(self, x):
        x = np.asarray(x, dtype=float)
        return ((x > 0) & (x < 1)).all(-1)

    def radon(self, x, u):
        """Chord length of the square along the line through ``x`` normal to ``u``."""
        x = np.asarray(x, dtype=float)
        if not np.all(self.in_support(x)):
            raise OutOfSupportError("Radon transform requested outside the open square")
        u = _unit(u)
        u, x = np.broadcast_arrays(u, x)
        d = np.stack([-u[..., 1], u[..., 0]], axis=-1)
        lo = np.full(x.shape[:-1], -np.inf)
        hi = np.full(x.shape[:-1], np.inf)
        for k in range(2):
            dk = d[..., k]
            xk = x[..., k]
            nz = np.abs(dk) > 1e-15
            safe = np.where(nz, dk, 1.0)
            a = (0.0 - xk) / safe
            b = (1.0 - xk) / safe
            lo = np.where(nz, np.maximum(lo, np.minimum(a, b)), lo)
            hi = np.where(nz, np.minimum(hi, np.maximum(a, b)), hi)
        return np.maximum(hi - lo, 0.0)

    def min_boundary_radon(self, alpha):
        # localised to the diagonal touch points (sqrt(alpha/2), sqrt(alpha/2)):
        # the tangent segment there is the chord of length 2 sqrt(alpha)
        check_alpha(alpha)
        return 2.0 * math.sqrt(alpha)

    def sample(self, n, rng):
        return rng.random((n, 2))

    def __repr__(self):
        return "UniformSquare()"


def _ccw_sort(v: np.ndarray) -> np.ndarray:
    c = v.mean(axis=0)
    order = np.argsort(np.arctan2(v[:, 1] - c[1], v[:, 0] - c[0]), kind="stable")
    return v[order]


class StdGaussian2D(ModelDistribution):
    tag = "gauss"

    def mass(self, u, t):
        return special.ndtr(np.asarray(t, dtype=float))

    def depth(self, x):
        return special.ndtr(-np.linalg.norm(np.asarray(x, dtype=float), axis=-1))

    def level_radius(self, alpha: float) -> float:
        check_alpha(alpha, upper_inclusive=True)
        return float(-special.ndtri(alpha))

    def region(self, alpha, resolution=1024):
        check_alpha(alpha)
        return regular_polygon(self.level_radius(alpha), resolution)

    def radon(self, x, u):
        s = (np.asarray(x, dtype=float) * _unit(u)).sum(-1)
        return np.exp(-0.5 * s * s) / math.sqrt(2 * math.pi)

    def min_boundary_radon(self, alpha):
        q = self.level_radius(check_alpha(alpha))
        return math.exp(-0.5 * q * q) / math.sqrt(2 * math.pi)

    def sample(self, n, rng):
        return rng.standard_normal((n, 2))

    def __repr__(self):
        return "StdGaussian2D()"


class Cauchy2D(ModelDistribution):
    """Product of two independent standard Cauchy coordinates.

    ``<X, u>`` is Cauchy with scale ``|u1| + |u2|`` (stability of the Cauchy
    law under linear combinations), which gives mass and Radon transform in
    closed form for every direction.
    """

    tag = "cauchy"

    @staticmethod
    def _scale(u):
        u = _unit(u)
        return np.abs(u[..., 0]) + np.abs(u[..., 1])

    def mass(self, u, t):
        return 0.5 + np.arctan(np.asarray(t, dtype=float) / self._scale(u)) / np.pi

    def depth(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 - np.arctan(np.abs(x).max(axis=-1)) / np.pi

    def region(self, alpha, resolution=1024):
        check_alpha(alpha)
        c = 1.0 / math.tan(math.pi * alpha)
        return ConvexRegion.box(-c, -c, c, c)

    def radon(self, x, u):
        c = self._scale(u)
        s = (np.asarray(x, dtype=float) * _unit(u)).sum(-1)
        return 1.0 / (np.pi * c * (1.0 + (s / c) ** 2))

    def min_boundary_radon(self, alpha):
        # value at non-vertex boundary points; only bounds are derived from it
        check_alpha(alpha)
        return math.sin(math.pi * alpha) ** 2 / math.pi

    def sample(self, n, rng):
        return rng.standard_cauchy((n, 2))

    def __repr__(self):
        return "Cauchy2D()"


def cauchy_mass_quadrature(u, t: float, epsabs: float = 1e-12) -> float:
    """Product-Cauchy halfplane mass by 1-D quadrature (independent check)."""
    u1, u2 = _unit(u)
    if abs(u2) < 1e-15:
        return 0.5 + math.atan(t / u1) / math.pi if u1 > 0 else 0.5 - math.atan(t / u1) / math.pi

    def integrand(th):
        # x1 = tan(th) turns the Cauchy density into the uniform density 1/pi
        c = (t - u1 * math.tan(th)) / u2
        g = 0.5 + math.atan(c) / math.pi
        return (g if u2 > 0 else 1.0 - g) / math.pi

    val, _ = integrate.quad(integrand, -math.pi / 2, math.pi / 2, epsabs=epsabs, limit=200)
    return val


def cauchy_radon_quadrature(x, u, epsabs: float = 1e-12) -> float:
    """Line integral of the product-Cauchy density across the line through ``x``."""
    u = _unit(u)
    d = np.array([-u[1], u[0]])
    x = np.asarray(x, dtype=float)

    def f(s):
        p = x + s * d
        return 1.0 / (np.pi**2 * (1 + p[0] ** 2) * (1 + p[1] ** 2))

    val, _ = integrate.quad(f, -np.inf, np.inf, epsabs=epsabs, limit=400)
    return val


@dataclass(frozen=True)
class Univariate:
    """A 1-D law given by a frozen ``scipy.stats`` distribution."""

    name: str
    law: object

    def cdf(self, x):
        return self.law.cdf(x)

    def quantile(self, q):
        return self.law.ppf(q)


def univariate(tag: str) -> Univariate:
    if tag == "normal1d":
        return Univariate(tag, stats.norm())
    if tag == "uniform1d":
        return Univariate(tag, stats.uniform())
    raise KeyError(f"unknown univariate law {tag!r}")


def depth_1d(d: Univariate, x):
    f = d.cdf(x)
    return np.minimum(f, 1.0 - f)


def region_1d(d: Univariate, alpha: float) -> tuple[float, float]:
    check_alpha(alpha)
    return float(d.quantile(alpha)), float(d.quantile(1.0 - alpha))


PLANAR = {
    "disk": UniformDisk,
    "square": UniformSquare,
    "gauss": StdGaussian2D,
    "cauchy": Cauchy2D,
}
UNIVARIATE = ("uniform1d", "normal1d")
TAGS = tuple(PLANAR) + UNIVARIATE


def get_distribution(tag: str, **kw):
    if tag in PLANAR:
        return PLANAR[tag](**kw)
    if tag in UNIVARIATE:
        return univariate(tag)
    raise KeyError(f"unknown distribution {tag!r}; choose from {', '.join(TAGS)}")


# function-style API -------------------------------------------------------


def halfspace_mass(d: ModelDistribution, h: Halfplane) -> float:
    return float(d.mass(np.array([h.u.ux, h.u.uy]), h.t))


def depth(d, x):
    if isinstance(d, Univariate):
        return depth_1d(d, x)
    out = d.depth(x)
    return float(out) if np.ndim(out) == 0 else out


def region(d: ModelDistribution, alpha: float, resolution: int = 1024) -> ConvexRegion:
    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    return d.region(alpha, resolution)


def radon(d: ModelDistribution, x, u: UnitDirection | np.ndarray) -> float:
    if isinstance(u, UnitDirection):
        u = u.as_array()
    out = d.radon(x, u)
    return float(out) if np.ndim(out) == 0 else out


def min_boundary_radon(d: ModelDistribution, alpha: float) -> float:
    return d.min_boundary_radon(alpha)


def boundary_scan_min_radon(d: ModelDistribution, alpha: float, resolution: int = 1024) -> float:
    """Fallback for laws without a closed form: scan the polygonal boundary.

    Normals come from the adjacent polygon edges, so the error is only as good
    as the boundary polygon; this is a heuristic, not a certified minimum.
    """
    r = d.region(alpha, resolution)
    return float(np.min(d.radon(r.vertices, r.outward_normals())))


def sample(d: ModelDistribution, n: int, stream) -> np.ndarray:
    """``n`` i.i.d. draws; ``stream`` is a Generator, a SeedSequence or an int."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(stream, np.random.Generator):
        rng = stream
    else:
        seq = stream if isinstance(stream, np.random.SeedSequence) else np.random.SeedSequence(stream)
        rng = np.random.Generator(np.random.Philox(seq))
    return d.sample(n, rng)


def find_level(f, lo: float, hi: float, tol: float = 1e-13) -> float:
    """Root of a monotone scalar function on a bracket (thin brentq wrapper)."""
    return optimize.brentq(f, lo, hi, xtol=tol)
