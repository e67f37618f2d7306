"""Planar primitives: unit directions, closed halfplanes, convex polygons.

Everything is double precision. Tolerances are absolute but scaled by the
magnitude of the coordinates involved, so that samples from heavy-tailed laws
(where coordinates can reach 1e6) behave like samples from the unit square.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MERGE_TOL = 1e-12
CONTAINS_TOL = 1e-12


class GeometryError(ValueError):
    pass


class EmptyRegionError(GeometryError):
    """Distance to or from an empty region is undefined."""


@dataclass(frozen=True)
class UnitDirection:
    ux: float
    uy: float

    def __post_init__(self):
        norm = math.hypot(self.ux, self.uy)
        if not math.isfinite(norm) or norm == 0.0:
            raise GeometryError(f"cannot normalise direction ({self.ux}, {self.uy})")
        object.__setattr__(self, "ux", self.ux / norm)
        object.__setattr__(self, "uy", self.uy / norm)

    @classmethod
    def from_angle(cls, theta: float) -> "UnitDirection":
        return cls(math.cos(theta), math.sin(theta))

    @property
    def angle(self) -> float:
        return math.atan2(self.uy, self.ux) % (2 * math.pi)

    def as_array(self) -> np.ndarray:
        return np.array([self.ux, self.uy])

    def __neg__(self) -> "UnitDirection":
        return UnitDirection(-self.ux, -self.uy)


@dataclass(frozen=True)
class Halfplane:
    """Closed halfplane ``{z : <z, u> <= t}``."""

    u: UnitDirection
    t: float

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise GeometryError(f"halfplane offset must be finite, got {self.t}")

    @classmethod
    def through(cls, x: Sequence[float], u: UnitDirection) -> "Halfplane":
        """Halfplane with outer normal ``u`` whose boundary passes through ``x``."""
        return cls(u, u.ux * x[0] + u.uy * x[1])

    def contains(self, z, tol: float = CONTAINS_TOL) -> bool | np.ndarray:
        z = np.asarray(z, dtype=float)
        val = z[..., 0] * self.u.ux + z[..., 1] * self.u.uy - self.t
        return val <= tol * max(1.0, abs(self.t))

    def translate(self, c: Sequence[float]) -> "Halfplane":
        return Halfplane(self.u, self.t + self.u.ux * c[0] + self.u.uy * c[1])


@dataclass(frozen=True, eq=False)
class ConvexRegion:
    """Bounded convex polygon with counter-clockwise vertices.

    Degenerate regions are allowed: a single vertex is a point, two vertices a
    segment. An empty vertex array is the empty set.
    """

    vertices: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def from_points(cls, pts) -> "ConvexRegion":
        """Canonicalise an arbitrary vertex list (assumed convex position)."""
        return cls(canonicalize(np.asarray(pts, dtype=float).reshape(-1, 2)))

    @classmethod
    def box(cls, xmin: float, ymin: float, xmax: float, ymax: float) -> "ConvexRegion":
        return cls(np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]]))

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) == 0

    def __len__(self) -> int:
        return len(self.vertices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConvexRegion):
            return NotImplemented
        return self.vertices.shape == other.vertices.shape and np.array_equal(
            self.vertices, other.vertices
        )

    __hash__ = None

    def area(self) -> float:
        if len(self.vertices) < 3:
            return 0.0
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def scale(self) -> float:
        if self.is_empty:
            return 1.0
        return max(1.0, float(np.abs(self.vertices).max()))

    def diameter(self) -> float:
        v = self.vertices
        if len(v) < 2:
            return 0.0
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Start and end points of the boundary segments."""
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def outward_normals(self) -> np.ndarray:
        """Unit outward normal at each vertex, averaging the two adjacent edges."""
        v = self.vertices
        if len(v) < 3:
            raise GeometryError("normals need a polygon with at least 3 vertices")
        e = np.roll(v, -1, axis=0) - v
        en = np.column_stack([e[:, 1], -e[:, 0]])
        en /= np.linalg.norm(en, axis=1, keepdims=True)
        vn = en + np.roll(en, 1, axis=0)
        return vn / np.linalg.norm(vn, axis=1, keepdims=True)

    def contains(self, x, tol: float = CONTAINS_TOL):
        return contains(self, x, tol)

    def to_json(self) -> str:
        return json.dumps(region_to_dict(self))


def region_to_dict(r: ConvexRegion) -> dict:
    return {"vertices": r.vertices.tolist()}


def region_from_dict(d: dict) -> ConvexRegion:
    return ConvexRegion.from_points(np.asarray(d["vertices"], dtype=float).reshape(-1, 2))


def load_region(path) -> ConvexRegion:
    with open(path) as fh:
        return region_from_dict(json.load(fh))


def _cross(o, a, b):
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (
        b[..., 0] - o[..., 0]
    )


def canonicalize(v: np.ndarray, tol: float = MERGE_TOL) -> np.ndarray:
    """Merge near-duplicate vertices, drop collinear ones, orient CCW.

    Input vertices must be in convex position in cyclic order (either
    orientation). Nearly flat input collapses to a segment or a point.
    """
    if len(v) == 0:
        return v.reshape(0, 2)
    scale = max(1.0, float(np.abs(v).max()))
    eps = tol * scale
    # consecutive merge, including wrap-around
    keep = [v[0]]
    for p in v[1:]:
        if np.max(np.abs(p - keep[-1])) > eps:
            keep.append(p)
    while len(keep) > 1 and np.max(np.abs(keep[-1] - keep[0])) <= eps:
        keep.pop()
    v = np.array(keep)
    if len(v) <= 2:
        return v
    extent = float(np.ptp(v, axis=0).max())  # within a factor sqrt(2) of the diameter
    if abs(ConvexRegion(v).area()) <= eps * max(extent, eps):
        return _flat_extremes(v, eps)
    changed = True
    while changed and len(v) >= 3:
        prev, nxt = np.roll(v, 1, axis=0), np.roll(v, -1, axis=0)
        cr = _cross(prev, v, nxt)
        seg = np.linalg.norm(nxt - prev, axis=1)
        flat = np.abs(cr) <= eps * np.maximum(seg, eps)
        changed = bool(flat.any())
        if changed:
            # drop one at a time: removing several neighbours at once can
            # eat a genuine corner
            v = np.delete(v, int(np.argmin(np.where(flat, np.abs(cr), np.inf))), axis=0)
    if len(v) >= 3 and ConvexRegion(v).area() < 0:
        v = v[::-1].copy()
    if len(v) <= 2:
        return _flat_extremes(v, eps)
    return v


def _flat_extremes(v: np.ndarray, eps: float) -> np.ndarray:
    c = v.mean(axis=0)
    d = v - c
    if np.abs(d).max() <= eps:
        return c.reshape(1, 2)
    _, _, vt = np.linalg.svd(d, full_matrices=False)
    s = d @ vt[0]
    a, b = v[np.argmin(s)], v[np.argmax(s)]
    if np.max(np.abs(a - b)) <= eps:
        return a.reshape(1, 2)
    return np.array([a, b])


def _clip(poly: np.ndarray, n: np.ndarray, t: float, eps: float) -> np.ndarray:
    """Sutherland-Hodgman step for one halfplane ``<z, n> <= t``."""
    k = len(poly)
    val = poly @ n - t
    inside = val <= eps
    if inside.all():
        return poly
    if not inside.any():
        return poly[:0]
    if k == 1:
        return poly[:0]
    out = []
    for i in range(k):
        j = (i + 1) % k
        if inside[i]:
            out.append(poly[i])
        if inside[i] != inside[j] and (k > 2 or i == 0):
            a, b = poly[i], poly[j]
            va, vb = val[i], val[j]
            s = va / (va - vb)
            out.append(a + s * (b - a))
    return np.array(out).reshape(-1, 2)


def intersect_halfplane_arrays(
    normals: np.ndarray,
    offsets: np.ndarray,
    clip: ConvexRegion | Sequence[float],
    tol: float = MERGE_TOL,
) -> ConvexRegion:
    """Intersection of ``{z : <z, normals[i]> <= offsets[i]}`` inside ``clip``.

    ``clip`` is a box ``(xmin, ymin, xmax, ymax)`` or a convex polygon that
    must contain the answer. Halfplanes are applied in order of how deeply
    they cut the current polygon; ones that no longer cut are discarded, so
    the cost stays near ``O(m * k)`` even when most halfplanes are redundant.
    """
    normals = np.asarray(normals, dtype=float).reshape(-1, 2)
    offsets = np.asarray(offsets, dtype=float).reshape(-1)
    if len(normals) != len(offsets):
        raise GeometryError("normals and offsets differ in length")
    if len(offsets) == 0:
        raise GeometryError("need at least one halfplane")
    if not np.all(np.isfinite(offsets)):
        raise GeometryError("halfplane offsets must be finite")
    if not isinstance(clip, ConvexRegion):
        clip = ConvexRegion.box(*clip)
    poly = np.array(clip.vertices, dtype=float)
    scale = max(clip.scale(), float(np.abs(offsets).max(initial=0.0)), 1.0)
    eps = tol * scale
    active = np.arange(len(offsets))
    while len(active) and len(poly):
        viol = (poly @ normals[active].T - offsets[active]).max(axis=0)
        cutting = viol > eps
        if not cutting.any():
            break
        active = active[cutting]
        j = int(np.argmax(viol[cutting]))
        poly = _clip(poly, normals[active[j]], offsets[active[j]], eps)
        active = np.delete(active, j)
        if len(poly) >= 2:
            poly = canonicalize(poly, tol)
    return ConvexRegion(canonicalize(poly, tol) if len(poly) else poly)


def intersect_halfplanes(hs: Iterable[Halfplane], clip) -> ConvexRegion:
    hs = list(hs)
    if not hs:
        raise GeometryError("need at least one halfplane")
    normals = np.array([[h.u.ux, h.u.uy] for h in hs])
    offsets = np.array([h.t for h in hs])
    return intersect_halfplane_arrays(normals, offsets, clip)


def _segment_distances(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from each point in ``p`` (k,2) to each segment ``a[j]b[j]``."""
    d = b - a
    dd = (d**2).sum(-1)
    w = p[:, None, :] - a[None, :, :]
    s = np.where(dd > 0, (w * d[None]).sum(-1) / np.where(dd > 0, dd, 1.0), 0.0)
    s = np.clip(s, 0.0, 1.0)
    proj = a[None] + s[..., None] * d[None]
    return np.sqrt(((p[:, None, :] - proj) ** 2).sum(-1))


def _inside_mask(r: ConvexRegion, p: np.ndarray, tol: float) -> np.ndarray:
    v = r.vertices
    eps = tol * max(r.scale(), float(np.abs(p).max(initial=0.0)))
    if len(v) <= 2:
        a, b = r.edges()
        return _segment_distances(p, a, b).min(axis=1) <= eps
    a, b = r.edges()
    e = b - a
    cr = e[None, :, 0] * (p[:, None, 1] - a[None, :, 1]) - e[None, :, 1] * (
        p[:, None, 0] - a[None, :, 0]
    )
    # signed distance to each edge line, positive inside
    return (cr / np.linalg.norm(e, axis=1)[None, :] >= -eps).all(axis=1)


def contains(r: ConvexRegion, x, tol: float = CONTAINS_TOL):
    """Closed-polygon membership; a scalar for one point, a mask for many."""
    p = np.asarray(x, dtype=float)
    single = p.ndim == 1
    p = p.reshape(-1, 2)
    if r.is_empty:
        out = np.zeros(len(p), dtype=bool)
    else:
        out = _inside_mask(r, p, tol)
    return bool(out[0]) if single else out


def point_to_region_distances(p: np.ndarray, r: ConvexRegion) -> np.ndarray:
    if r.is_empty:
        raise EmptyRegionError("distance to an empty region is undefined")
    p = np.asarray(p, dtype=float).reshape(-1, 2)
    a, b = r.edges()
    dist = _segment_distances(p, a, b).min(axis=1)
    if len(r) >= 3:
        dist[_inside_mask(r, p, 0.0)] = 0.0
    return dist


def point_to_region_distance(x, r: ConvexRegion) -> float:
    return float(point_to_region_distances(np.asarray(x, dtype=float), r)[0])


def directed_hausdorff(a: ConvexRegion, b: ConvexRegion) -> float:
    """``sup_{x in a} dist(x, b)``; for convex ``a`` the sup sits at a vertex."""
    if a.is_empty or b.is_empty:
        raise EmptyRegionError("Hausdorff distance with an empty region is undefined")
    return float(point_to_region_distances(a.vertices, b).max())


def _support_pieces(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Angles where the supporting vertex changes, and the vertex after each.

    For a CCW polygon, vertex ``i+1`` supports every direction between the
    outward normals of edges ``i`` and ``i+1``. Points and segments fit the
    same scheme.
    """
    k = len(v)
    if k == 1:
        return np.zeros(1), np.zeros(1, dtype=int)
    e = np.roll(v, -1, axis=0) - v
    phi = np.arctan2(-e[:, 0], e[:, 1]) % (2 * np.pi)
    order = np.argsort(phi, kind="stable")
    return phi[order], (order + 1) % k


def _support_vertex(v: np.ndarray, starts: np.ndarray, idx: np.ndarray, theta: np.ndarray) -> np.ndarray:
    j = np.searchsorted(starts, theta, side="right") - 1  # -1 wraps to the last piece
    return v[idx[j % len(starts)]]


def hausdorff_distance(a: ConvexRegion, b: ConvexRegion) -> float:
    """``sup_u |h_a(u) - h_b(u)|`` over unit ``u``, with ``h`` the support function.

    For convex compact sets this equals the Hausdorff distance. Between two
    consecutive breakpoints of either polygon both supporting vertices are
    fixed, so the difference is ``<p - q, u>`` and its largest modulus sits at
    an end of the arc or at ``u = +-(p - q)/|p - q|``. Cost is
    ``O((k + m) log(k + m))``.
    """
    if a.is_empty or b.is_empty:
        raise EmptyRegionError("Hausdorff distance with an empty region is undefined")
    sa, ia = _support_pieces(a.vertices)
    sb, ib = _support_pieces(b.vertices)
    two_pi = 2 * np.pi
    lo = np.unique(np.concatenate([sa, sb, [0.0]]))
    hi = np.append(lo[1:], two_pi)
    mid = 0.5 * (lo + hi)
    d = _support_vertex(a.vertices, sa, ia, mid) - _support_vertex(b.vertices, sb, ib, mid)
    g_lo = np.abs(d[:, 0] * np.cos(lo) + d[:, 1] * np.sin(lo))
    g_hi = np.abs(d[:, 0] * np.cos(hi) + d[:, 1] * np.sin(hi))
    norm = np.hypot(d[:, 0], d[:, 1])
    ang = np.arctan2(d[:, 1], d[:, 0]) % two_pi
    inside = np.zeros(len(lo), dtype=bool)
    for target in (ang, (ang + np.pi) % two_pi):
        inside |= (target >= lo) & (target <= hi)
    best = np.maximum(g_lo, g_hi)
    best = np.where(inside, np.maximum(best, norm), best)
    return float(best.max())


def hausdorff_by_vertices(a: ConvexRegion, b: ConvexRegion) -> float:
    """Hausdorff distance as the larger of the two vertex-based directed distances."""
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))


def region_subset(a: ConvexRegion, b: ConvexRegion, tol: float = 1e-9) -> bool:
    """Whether ``a`` lies inside ``b`` (vertex membership, absolute ``tol``)."""
    if a.is_empty:
        return True
    if b.is_empty:
        return False
    return bool((point_to_region_distances(a.vertices, b) <= tol).all())


def regular_polygon(radius: float, k: int, center=(0.0, 0.0), phase: float = 0.0) -> ConvexRegion:
    """Regular ``k``-gon inscribed in the circle of the given radius."""
    th = phase + 2 * np.pi * np.arange(k) / k
    v = np.column_stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)])
    if radius == 0:
        return ConvexRegion(np.array([center], dtype=float))
    return ConvexRegion(v)
