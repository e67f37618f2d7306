"""Weighted samples, exact empirical halfspace depth and exact empirical depth
trimmed regions in the plane.

The empirical region at level ``alpha`` is the intersection of all closed
halfplanes ``H`` with ``mu_n(H) > mean_weight - alpha``. For a fixed outer
normal ``u`` those halfplanes are nested, so only the smallest qualifying
offset ``t*(u)`` matters. The order of the projections changes only at
directions normal to a line through two sample points; between two such
critical directions ``t*(u)`` is the projection of one fixed sample point, and
the intersection over that arc is the wedge cut out by the two arc ends. That
makes the region exactly computable from finitely many halfplanes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import (
    ConvexRegion,
    Halfplane,
    UnitDirection,
    intersect_halfplane_arrays,
)

TIE_TOL = 1e-12
DEFAULT_GRID = 2048
#: largest n for which ``mode="auto"`` picks the exact region
EXACT_CAP = 120
_CHUNK_ELEMS = 2_000_000
#: grid mode works column by column, bracketing offsets, from this size on
BAND_MIN_N = 20_000
WEIGHTED_BAND_MIN_N = 1_000
BAND_RADIUS_Q = 0.99
BAND_SLACK = 1.5


class DegenerateSampleError(ValueError):
    pass


class NegativeWeightError(ValueError):
    """Depth as an infimum of masses needs nonnegative weights."""


@dataclass(frozen=True, eq=False)
class WeightedSample:
    points: np.ndarray
    weights: np.ndarray = None
    mean_weight: float = field(init=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        w = np.ones(len(pts)) if self.weights is None else np.array(self.weights, dtype=float).reshape(-1)
        if len(pts) < 1:
            raise ValueError("a sample needs at least one point")
        if len(w) != len(pts):
            raise ValueError(f"{len(pts)} points but {len(w)} weights")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise ValueError("points and weights must be finite")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "mean_weight", float(w.mean()))

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def nonnegative(self) -> bool:
        return bool(np.all(self.weights >= 0))

    @property
    def unit_weights(self) -> bool:
        return bool(np.all(self.weights == 1.0))

    def scale(self) -> float:
        return max(1.0, float(np.abs(self.points).max()))

    def bounding_box(self, inflate: float = 1.0) -> tuple[float, float, float, float]:
        lo = self.points.min(axis=0) - inflate
        hi = self.points.max(axis=0) + inflate
        return (lo[0], lo[1], hi[0], hi[1])

    def prefix(self, n: int) -> "WeightedSample":
        return WeightedSample(self.points[:n], self.weights[:n])

    @classmethod
    def read_csv(cls, path) -> "WeightedSample":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: no sample rows")
        missing = {"x", "y"} - set(rows[0])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        pts = [[float(r["x"]), float(r["y"])] for r in rows]
        w = [float(r["w"]) if r.get("w") not in (None, "") else 1.0 for r in rows]
        return cls(np.array(pts), np.array(w))

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["x", "y", "w"])
            for (x, y), w in zip(self.points, self.weights):
                out.writerow([repr(float(x)), repr(float(y)), repr(float(w))])


def emp_mass(s: WeightedSample, h: Halfplane) -> float:
    """``(1/n) sum w_i 1{X_i in h}`` for the closed halfplane ``h``."""
    proj = s.points @ h.u.as_array()
    inside = proj <= h.t + TIE_TOL * max(s.scale(), abs(h.t))
    return float(s.weights[inside].sum() / s.n)


# depth ----------------------------------------------------------------------


def emp_depth(s: WeightedSample, x) -> float:
    """Exact empirical depth of ``x`` by an angular sweep, ``O(n log n)``.

    A closed halfplane with ``x`` on its boundary contains the sample points
    whose direction from ``x`` falls in a closed half-circle of angles. The
    minimum over half-circles is attained strictly between two events (an
    angle ``theta_i`` or its antipode), so one candidate per gap suffices.
    """
    if not s.nonnegative:
        raise NegativeWeightError("empirical depth is only supported for nonnegative weights")
    x = np.asarray(x, dtype=float)
    d = s.points - x
    eps = TIE_TOL * max(s.scale(), float(np.abs(x).max()))
    at_x = np.abs(d).max(axis=1) <= eps
    base = float(s.weights[at_x].sum())
    d, w = d[~at_x], s.weights[~at_x]
    if len(d) == 0:
        return base / s.n
    theta = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2 * np.pi)
    order = np.argsort(theta)
    theta, w = theta[order], w[order]
    events = np.unique(np.mod(np.concatenate([theta, theta - np.pi]), 2 * np.pi))
    gaps = np.diff(np.append(events, events[0] + 2 * np.pi))
    mids = events + 0.5 * gaps
    # weight in the open half-circle (a, a + pi), via a doubled angle array
    ext = np.concatenate([theta, theta + 2 * np.pi, theta + 4 * np.pi])
    cw = np.concatenate([[0.0], np.cumsum(np.tile(w, 3))])
    a = np.mod(mids, 2 * np.pi)
    lo = np.searchsorted(ext, a, side="right")
    hi = np.searchsorted(ext, a + np.pi, side="left")
    inside = cw[hi] - cw[lo]
    return (base + float(inside.min())) / s.n


# critical directions --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CriticalDirections:
    """Unit normals of all lines through two distinct sample points, both
    orientations, sorted by angle in ``[0, 2 pi)``."""

    angles: np.ndarray

    def __len__(self) -> int:
        return len(self.angles)

    @property
    def vectors(self) -> np.ndarray:
        return np.column_stack([np.cos(self.angles), np.sin(self.angles)])

    @property
    def directions(self) -> list[UnitDirection]:
        return [UnitDirection.from_angle(a) for a in self.angles]


def _dedup_angles(ang: np.ndarray, tol: float = TIE_TOL) -> np.ndarray:
    ang = np.sort(np.mod(ang, 2 * np.pi))
    if len(ang) == 0:
        return ang
    keep = np.empty(len(ang), dtype=bool)
    keep[0] = True
    keep[1:] = np.diff(ang) > tol
    ang = ang[keep]
    if len(ang) > 1 and ang[-1] - ang[0] > 2 * np.pi - tol:
        ang = ang[:-1]
    return ang


def critical_directions(s: WeightedSample) -> CriticalDirections:
    pts = np.unique(s.points, axis=0)
    if len(pts) < 2:
        raise DegenerateSampleError("degenerate sample: all points coincide")
    i, j = np.triu_indices(len(pts), k=1)
    d = pts[j] - pts[i]
    base = np.arctan2(d[:, 1], d[:, 0]) + np.pi / 2
    return CriticalDirections(_dedup_angles(np.concatenate([base, base + np.pi])))


# offsets of the smallest qualifying halfplane --------------------------------


def _tail_offsets(proj: np.ndarray, w: np.ndarray, cap: float, tol: float):
    """Smallest ``t`` with ``sum w_i 1{p_i > t} < cap`` for each column.

    Projections that agree within ``tol`` are one tie group. Returns the
    offsets and, per column, the row of a sample point that attains them.
    """
    n, m = proj.shape
    order = np.argsort(-proj, axis=0, kind="stable")
    q = np.take_along_axis(proj, order, 0)
    c = np.cumsum(w[order], axis=0)
    starts = np.ones((n, m), dtype=bool)
    starts[1:] = (q[:-1] - q[1:]) > tol
    rows = np.arange(n)[:, None]
    first = np.maximum.accumulate(np.where(starts, rows, 0), axis=0)
    above = np.where(first > 0, np.take_along_axis(c, np.maximum(first - 1, 0), 0), 0.0)
    ok = above < cap
    jstar = n - 1 - np.argmax(ok[::-1], axis=0)
    cols = np.arange(m)
    return q[jstar, cols], order[jstar, cols]


def _chunks(n: int, m: int):
    step = max(1, _CHUNK_ELEMS // max(n, 1))
    for a in range(0, m, step):
        yield slice(a, min(m, a + step))


def smallest_offsets(s: WeightedSample, normals: np.ndarray, cap: float):
    """``t*(u)`` and an attaining point index for every row of ``normals``."""
    tol = TIE_TOL * s.scale()
    t = np.empty(len(normals))
    idx = np.empty(len(normals), dtype=int)
    for sl in _chunks(s.n, len(normals)):
        t[sl], idx[sl] = _tail_offsets(_project(s.points, normals[sl]), s.weights, cap, tol)
    return t, idx


def _empty_or_point(s: WeightedSample, alpha: float) -> ConvexRegion | None:
    cap = s.n * alpha
    if s.total_weight < cap:
        # the halfplanes missing every sample point qualify, so nothing survives
        return ConvexRegion()
    pts = np.unique(s.points, axis=0)
    if len(pts) == 1:
        return ConvexRegion(pts)
    return None


def emp_region_exact(s: WeightedSample, alpha: float) -> ConvexRegion:
    special = _empty_or_point(s, alpha)
    if special is not None:
        return special
    cap = s.n * alpha
    crit = critical_directions(s).angles
    m = len(crit)
    mids = crit + 0.5 * np.diff(np.append(crit, crit[0] + 2 * np.pi))
    uc = np.column_stack([np.cos(crit), np.sin(crit)])
    um = np.column_stack([np.cos(mids), np.sin(mids)])
    t_crit, _ = smallest_offsets(s, uc, cap)
    t_mid, k_mid = smallest_offsets(s, um, cap)
    # limits of the arc halfplanes at both ends of every arc
    xk = s.points[k_mid]
    t_right_end = (xk * np.roll(uc, -1, axis=0)).sum(1)  # arc i ends at crit[i+1]
    t_left_end = (xk * uc).sum(1)  # arc i starts at crit[i]
    limit = np.minimum(t_left_end, np.roll(t_right_end, 1))
    t_c = np.minimum(t_crit, limit)
    nudge = TIE_TOL * s.scale()
    normals = np.concatenate([uc, um])
    offsets = np.concatenate([t_c, t_mid]) + nudge
    return intersect_halfplane_arrays(normals, offsets, s.bounding_box(1.0))


def _project(points: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``points @ u.T`` as two elementwise products.

    Written out so that every code path rounds identically, independent of
    the BLAS build and its thread count.
    """
    return points[:, :1] * u[:, 0] + points[:, 1:] * u[:, 1]


def grid_offsets(s: WeightedSample, grid_size: int, cap: float) -> tuple[np.ndarray, np.ndarray]:
    """``t*`` on ``grid_size`` equally spaced directions (even ``grid_size``).

    Directions ``u`` and ``-u`` share one projection, so each column yields an
    upper and a lower tail. Small samples are handled a block of columns at a
    time. Large nonnegative samples go column by column: unit weights by two
    single-pivot partitions, other weights by ranking only the points in a
    bracket around the previous column's offset. The bracket result is
    verified and a miss falls back to the full column, so the bracket never
    changes the answer.
    """
    if grid_size % 2:
        raise ValueError("grid_size must be even")
    half = grid_size // 2
    ang = np.pi * np.arange(half) / half
    u = np.column_stack([np.cos(ang), np.sin(ang)])
    n = s.n
    tol = TIE_TOL * s.scale()
    t_up = np.empty(half)
    t_dn = np.empty(half)
    if s.nonnegative and n >= (BAND_MIN_N if s.unit_weights else WEIGHTED_BAND_MIN_N):
        _banded_offsets(s, u, cap, tol, t_up, t_dn)
    elif s.unit_weights:
        k = min(max(int(math.ceil(cap)), 1), n)
        for sl in _chunks(n, half):
            part = np.partition(_project(s.points, u[sl]), [k - 1, n - k], axis=0)
            t_up[sl] = part[n - k]
            t_dn[sl] = -part[k - 1]
    else:
        for sl in _chunks(n, half):
            p = _project(s.points, u[sl])
            t_up[sl], _ = _tail_offsets(p, s.weights, cap, tol)
            t_dn[sl], _ = _tail_offsets(-p, s.weights, cap, tol)
    return np.concatenate([u, -u]), np.concatenate([t_up, t_dn])


def _offset_1d(vals: np.ndarray, w: np.ndarray, cap: float, tol: float) -> float:
    """Single-column version of :func:`_tail_offsets` (offset only)."""
    order = np.argsort(-vals, kind="stable")
    q = vals[order]
    c = np.cumsum(w[order])
    starts = np.empty(q.size, dtype=bool)
    starts[0] = True
    np.greater(q[:-1] - q[1:], tol, out=starts[1:])
    first = np.maximum.accumulate(np.where(starts, np.arange(q.size), 0))
    above = np.where(first > 0, c[np.maximum(first - 1, 0)], 0.0)
    ok = above < cap
    return float(q[q.size - 1 - np.argmax(ok[::-1])])


def _banded_column(col: np.ndarray, w: np.ndarray, lo: float, hi: float, cap: float, tol: float):
    """``t*`` of one column if the bracket ``[lo, hi]`` provably holds it, else None."""
    above = col > hi
    w_above = float(w @ above)
    if w_above >= cap:
        return None
    band = np.flatnonzero((col >= lo) & (col <= hi))
    if band.size == 0:
        return None
    vals = col[band]
    t = _offset_1d(vals, w[band], cap - w_above, tol)
    # the answer must sit strictly above the lowest band value, otherwise a
    # point below the bracket might still qualify
    if t <= vals.min() + tol:
        return None
    return t


class _ColumnProjector:
    """Projections of all points on one direction, into reused buffers.

    Rounds exactly like :func:`_project`.
    """

    def __init__(self, points: np.ndarray):
        self.x = np.ascontiguousarray(points[:, 0])
        self.y = np.ascontiguousarray(points[:, 1])
        self.col = np.empty(len(points))
        self.neg = np.empty(len(points))
        self._tmp = np.empty(len(points))

    def __call__(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        np.multiply(self.x, u[0], out=self.col)
        np.multiply(self.y, u[1], out=self._tmp)
        np.add(self.col, self._tmp, out=self.col)
        np.negative(self.col, out=self.neg)
        return self.col, self.neg


def _unit_column(col: np.ndarray, work: np.ndarray, k: int) -> tuple[float, float]:
    """k-th largest and k-th smallest of ``col`` by two single-pivot partitions."""
    n = col.size
    if 2 * k > n:
        part = np.partition(col, [k - 1, n - k])
        return float(part[n - k]), float(part[k - 1])
    work[:] = col
    work.partition(n - k)
    upper = float(work[n - k])
    left = work[: n - k]
    left.partition(k - 1)
    return upper, float(left[k - 1])


def _banded_offsets(s: WeightedSample, u: np.ndarray, cap: float, tol: float, t_up, t_dn) -> None:
    n = s.n
    w = s.weights
    proj = _ColumnProjector(s.points)
    if s.unit_weights:
        k = min(max(int(math.ceil(cap)), 1), n)
        work = np.empty(n)
        for j in range(len(u)):
            col, _ = proj(u[j])
            t_up[j], low = _unit_column(col, work, k)
            t_dn[j] = -low
        return
    # Moving the direction by du moves every centred projection, and hence
    # every weighted quantile, by at most |X - c| |du|; the previous column's
    # offset plus that slack brackets the next one. The radius is a high
    # quantile rather than the maximum so heavy tails do not blow the band up;
    # a bracket that misses is detected and the column recomputed in full.
    c = s.points.mean(axis=0)
    radius = float(np.quantile(np.hypot(*(s.points - c).T), BAND_RADIUS_Q))
    prev = None
    for j in range(len(u)):
        cols = proj(u[j])
        if prev is None:
            cur = [_offset_1d(cols[0], w, cap, tol), _offset_1d(cols[1], w, cap, tol)]
        else:
            du = u[j] - u[j - 1]
            h = BAND_SLACK * radius * float(np.hypot(*du)) + tol
            shift = float(c @ du)
            cur = []
            for col, t_prev, sgn in zip(cols, prev, (1.0, -1.0)):
                mid = t_prev + sgn * shift
                t = _banded_column(col, w, mid - h, mid + h, cap, tol)
                cur.append(_offset_1d(col, w, cap, tol) if t is None else t)
        t_up[j], t_dn[j] = cur
        prev = cur


def emp_region_grid(s: WeightedSample, alpha: float, grid_size: int = DEFAULT_GRID) -> ConvexRegion:
    """Outer approximation: intersection over ``grid_size`` fixed directions.

    Every halfplane used belongs to the defining family, so the result
    contains the exact region.
    """
    special = _empty_or_point(s, alpha)
    if special is not None:
        return special
    normals, offsets = grid_offsets(s, grid_size, s.n * alpha)
    return intersect_halfplane_arrays(normals, offsets + TIE_TOL * s.scale(), s.bounding_box(1.0))


def grid_error_bound(s: WeightedSample, grid_region: ConvexRegion, grid_size: int) -> float:
    """Certified bound on ``rho_H(grid region, exact region)``.

    Take ``c`` inside the grid polygon ``P`` with grid inradius ``rho_P``
    about it, ``R = max |X_i - c|`` and ``delta = 2 sin(pi / K)``, the chord
    between neighbouring grid directions. Offsets are ``R``-Lipschitz in the
    direction after centring at ``c``, and every direction is a nonnegative
    combination of its two grid neighbours with total weight at most
    ``1 / cos(pi / K)``. Together these give
    ``P - c`` inside ``lam (A - c)`` with
    ``lam = (1 + R delta / rho) / cos(pi / K)`` and ``rho = rho_P - R delta``,
    so the distance is at most ``(lam - 1) max_{v in P} |v - c|``. Returns
    ``inf`` when ``rho <= 0`` (grid too coarse for the region).
    """
    v = grid_region.vertices
    if len(v) < 3:
        return 0.0 if len(v) <= 1 and grid_region.is_empty else math.inf
    c = v.mean(axis=0)
    a, b = v, np.roll(v, -1, axis=0)
    e = b - a
    # distance from c to every edge line (c is inside, the polygon is CCW)
    rho_p = float(np.min(np.abs(e[:, 0] * (c[1] - a[:, 1]) - e[:, 1] * (c[0] - a[:, 0])) / np.hypot(e[:, 0], e[:, 1])))
    radius = float(np.max(np.hypot(*(s.points - c).T)))
    delta = 2.0 * math.sin(math.pi / grid_size)
    rho = rho_p - radius * delta
    if rho <= 0:
        return math.inf
    lam = (1.0 + radius * delta / rho) / math.cos(math.pi / grid_size)
    reach = float(np.max(np.hypot(*(v - c).T)))
    return (lam - 1.0) * reach + 2 * TIE_TOL * s.scale()


def emp_region(
    s: WeightedSample, alpha: float, mode: str = "exact", grid_size: int = DEFAULT_GRID
) -> ConvexRegion:
    """Empirical depth trimmed region ``{H : mu_n(H) > mean_weight - alpha}``.

    ``mode`` is ``"exact"``, ``"grid"`` or ``"auto"`` (exact up to
    ``EXACT_CAP`` points). Signed weights are allowed.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if mode == "auto":
        mode = "exact" if s.n <= EXACT_CAP else "grid"
    if mode == "exact":
        return emp_region_exact(s, alpha)
    if mode == "grid":
        return emp_region_grid(s, alpha, grid_size)
    raise ValueError(f"unknown region mode {mode!r}")


# sup deviation ----------------------------------------------------------------


@dataclass(frozen=True)
class DeviationResult:
    """A lower bound for ``sup_H |mu_n(H) - mu(H)|`` and where it is attained.

    ``closed`` tells whether the maximising halfplane is ``<z,u> <= offset``
    (True) or the open ``<z,u> < offset`` (False, a left limit).
    """

    value: float
    direction: UnitDirection
    offset: float
    closed: bool = True

    @property
    def halfplane(self) -> Halfplane:
        return Halfplane(self.direction, self.offset)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "direction": [self.direction.ux, self.direction.uy],
            "offset": self.offset,
            "closed": self.closed,
        }


def sup_deviation(
    s: WeightedSample,
    d,
    extra_dirs: int = 1024,
    directions: np.ndarray | None = None,
    use_critical: bool | None = None,
) -> DeviationResult:
    """Largest ``|mu_n(H) - mu(H)|`` over a finite family of directions.

    Directions are the critical ones (by default only for ``n <= 200``; there
    are ``O(n^2)`` of them) plus ``extra_dirs`` equally spaced ones, or an
    explicit ``directions`` array. Along a direction the supremum over offsets
    is attained at a sample projection, either including or excluding it,
    because the model cdf is continuous.
    """
    if extra_dirs < 0:
        raise ValueError("extra_dirs must be nonnegative")
    if directions is not None:
        u = np.asarray(directions, dtype=float).reshape(-1, 2)
        u = u / np.linalg.norm(u, axis=1, keepdims=True)
    else:
        parts = []
        if use_critical is None:
            use_critical = s.n <= 200
        if use_critical and len(np.unique(s.points, axis=0)) >= 2:
            parts.append(critical_directions(s).vectors)
        if extra_dirs:
            a = 2 * np.pi * np.arange(extra_dirs) / extra_dirs
            parts.append(np.column_stack([np.cos(a), np.sin(a)]))
        if not parts:
            raise ValueError("no directions to scan")
        u = np.concatenate(parts)
    tol = TIE_TOL * s.scale()
    best = (-1.0, 0, 0.0, True)
    n = s.n
    for sl in _chunks(n, len(u)):
        p = _project(s.points, u[sl])
        order = np.argsort(p, axis=0, kind="stable")
        q = np.take_along_axis(p, order, 0)
        c = np.cumsum(s.weights[order], axis=0) / n
        last = np.ones_like(q, dtype=bool)
        last[:-1] = (q[1:] - q[:-1]) > tol
        starts = np.ones_like(q, dtype=bool)
        starts[1:] = last[:-1]
        rows = np.arange(n)[:, None]
        first = np.maximum.accumulate(np.where(starts, rows, 0), axis=0)
        # right limit at a group: everything up to the group's last member
        rev_last = np.minimum.accumulate(np.where(last, rows, n - 1)[::-1], axis=0)[::-1]
        right = np.take_along_axis(c, rev_last, 0)
        left = np.where(first > 0, np.take_along_axis(c, np.maximum(first - 1, 0), 0), 0.0)
        model = d.mass(u[sl][None, :, :], q)
        dev_r = np.abs(right - model)
        dev_l = np.abs(left - model)
        for dev, closed in ((dev_r, True), (dev_l, False)):
            flat = int(np.argmax(dev))
            i, j = divmod(flat, dev.shape[1])
            if dev[i, j] > best[0]:
                best = (float(dev[i, j]), sl.start + j, float(q[i, j]), closed)
    val, k, off, closed = best
    return DeviationResult(val, UnitDirection(*u[k]), off, closed)
