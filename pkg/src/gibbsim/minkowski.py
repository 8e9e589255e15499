"""Planar geometry of unions of equal-radius discs.

Computes area, perimeter, and Euler characteristic of ``union B(x_i, r)``
exactly (up to floating point): boundary arcs are found by clipping each
circle against its neighbours, area comes from the divergence theorem over
the surviving arcs, and the Euler characteristic is the simplex count
``V - E + T`` of the dual (alpha) complex, whose edges and triangles are
Delaunay-witnessed.  Degenerate inputs (tangencies, cocircular points) are
resolved by a deterministic symbolic perturbation and counted, never reported
as broken topology.

The clipped variants return the per-box quantities needed to decompose the
union's functionals over a grid of cubes.  A pixel-grid oracle is provided
for testing only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import Delaunay, cKDTree
from skimage.measure import find_contours

from .core import Configuration, Window

__all__ = [
    "DiscUnion",
    "MinkowskiSummary",
    "ClippedSummary",
    "minkowski_functionals",
    "clipped_functionals",
    "raster_oracle",
    "disc_insertion_delta",
]

TWO_PI = 2.0 * math.pi

# Predicate tolerance (relative to the disc radius) below which a
# configuration counts as degenerate and is perturbed.
_DEGEN_RTOL = 1e-12


class _Degenerate(Exception):
    """Internal: a geometric predicate fell within tolerance of a tie."""


@dataclass(frozen=True)
class MinkowskiSummary:
    """Area, perimeter, and topology of a disc union."""

    area: float
    perimeter: float
    euler: int
    n_components: int
    n_holes: int
    degenerate_events: int = 0


@dataclass(frozen=True)
class ClippedSummary:
    """Functionals of a disc union intersected with a box.

    ``arc_length`` is the circular part of the clipped set's boundary (the
    full perimeter minus the straight cut along the box edges), and
    ``edge_length`` is the 1-d measure of the union's trace on the box
    boundary.  ``double_edge_components`` counts the connected pieces of the
    trace on the box's left-plus-bottom double edge.
    """

    area: float
    arc_length: float
    edge_length: float
    euler: int
    double_edge_components: int
    degenerate_events: int = 0


class DiscUnion:
    """Union of discs of one radius centred at a planar configuration."""

    __slots__ = ("centers", "radius")

    def __init__(self, centers: Configuration, radius: float):
        if centers.dimension != 2:
            raise ValueError("disc unions are planar (d = 2)")
        if not (radius > 0 and math.isfinite(radius)):
            raise ValueError("radius must be positive and finite")
        self.centers = centers
        self.radius = float(radius)

    @classmethod
    def from_array(cls, centers, radius: float) -> "DiscUnion":
        return cls(Configuration(centers, dim=2), radius)

    def __repr__(self):
        return f"DiscUnion(n={len(self.centers)}, r={self.radius})"


# ---------------------------------------------------------------------------
# angular interval bookkeeping on a circle
# ---------------------------------------------------------------------------

def _normalize_intervals(raw):
    """Split raw (a, b) arcs (b > a, b - a < 2*pi) into pieces in [0, 2*pi]."""
    out = []
    for a, b in raw:
        span = b - a
        a = a % TWO_PI
        b = a + span
        if b <= TWO_PI:
            out.append((a, b))
        else:
            out.append((a, TWO_PI))
            out.append((0.0, b - TWO_PI))
    return out


def _merge_intervals(pieces):
    if not pieces:
        return []
    pieces = sorted(pieces)
    merged = [list(pieces[0])]
    for a, b in pieces[1:]:
        if a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def _complement_intervals(covered):
    """Complement of merged coverage within [0, 2*pi]."""
    if not covered:
        return [(0.0, TWO_PI)]
    out = []
    cursor = 0.0
    for a, b in covered:
        if a > cursor:
            out.append((cursor, a))
        cursor = max(cursor, b)
    if cursor < TWO_PI:
        out.append((cursor, TWO_PI))
    # stitch across the 0/2*pi seam so arcs are not split artificially
    if len(out) >= 2 and out[0][0] == 0.0 and out[-1][1] == TWO_PI:
        a0, b0 = out[0]
        a1, _ = out.pop()
        out[0] = (a1 - TWO_PI, b0)
    return [(a, b) for a, b in out if b - a > 0.0]


def _pair_cover_interval(ci, cj, r, eps):
    """Angular interval of circle i's boundary lying inside disc j."""
    dx = cj[0] - ci[0]
    dy = cj[1] - ci[1]
    d = math.hypot(dx, dy)
    if d <= eps:
        raise _Degenerate("coincident centres")
    if abs(d - 2.0 * r) <= eps:
        raise _Degenerate("tangent circles")
    if d >= 2.0 * r:
        return None
    half = math.acos(d / (2.0 * r))
    phi = math.atan2(dy, dx)
    return (phi - half, phi + half)


def _green_arc(c, r, a, b):
    """Divergence-theorem contribution of a CCW arc of circle (c, r)."""
    return 0.5 * (
        r * c[0] * (math.sin(b) - math.sin(a))
        - r * c[1] * (math.cos(b) - math.cos(a))
        + r * r * (b - a)
    )


def _green_segment(p, q):
    return 0.5 * (p[0] * q[1] - p[1] * q[0])


# ---------------------------------------------------------------------------
# dual-complex (nerve) machinery for the Euler characteristic
# ---------------------------------------------------------------------------

def _circumcenter(a, b, c):
    """Circumcenter and circumradius of a triangle; inf radius if collinear."""
    ax, ay = a
    bx, by = b
    cx, cy = c
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        return None, math.inf
    ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay)
          + (cx * cx + cy * cy) * (ay - by)) / d
    uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx)
          + (cx * cx + cy * cy) * (bx - ax)) / d
    rad = math.hypot(ax - ux, ay - uy)
    return (ux, uy), rad


class _DualComplex:
    """Delaunay triangulation plus the data needed for alpha-complex tests."""

    def __init__(self, pts: np.ndarray):
        self.pts = pts
        self.n = pts.shape[0]
        self.tri = None
        self.edge_faces: dict = {}
        self.tri_circum: list = []
        if self.n >= 3:
            try:
                self.tri = Delaunay(pts)
            except Exception as exc:  # qhull degeneracy (collinear input)
                raise _Degenerate(f"delaunay failed: {exc}") from exc
            self._build()
        elif self.n == 2:
            self.edge_faces = {(0, 1): []}

    def _build(self):
        simplices = self.tri.simplices
        for t_idx, simplex in enumerate(simplices):
            cc, rad = _circumcenter(*(self.pts[v] for v in simplex))
            self.tri_circum.append((cc, rad, tuple(sorted(simplex))))
            for k in range(3):
                i, j = simplex[k], simplex[(k + 1) % 3]
                key = (min(i, j), max(i, j))
                self.edge_faces.setdefault(key, []).append(t_idx)

    def edge_face_interval(self, i, j):
        """Voronoi face of edge (i, j) as an interval along the bisector.

        Coordinates are signed distances along the bisector direction from
        the midpoint of x_i x_j.  Hull edges give a half-infinite interval.
        """
        pi, pj = self.pts[i], self.pts[j]
        mx = 0.5 * (pi[0] + pj[0])
        my = 0.5 * (pi[1] + pj[1])
        ex = pj[0] - pi[0]
        ey = pj[1] - pi[1]
        d = math.hypot(ex, ey)
        tx, ty = -ey / d, ex / d
        if self.tri is None:  # exactly two points: the full bisector line
            return (mx, my), (tx, ty), (-math.inf, math.inf)
        faces = self.edge_faces[(min(i, j), max(i, j))]
        svals = []
        for t_idx in faces:
            cc, _, simplex = self.tri_circum[t_idx]
            if cc is None:
                raise _Degenerate("collinear Delaunay triangle")
            svals.append((cc[0] - mx) * tx + (cc[1] - my) * ty)
        if len(svals) == 2:
            lo, hi = min(svals), max(svals)
        else:
            # hull edge: the face is a ray leaving the lone circumcenter away
            # from the triangle's third vertex
            (cc, _, simplex) = self.tri_circum[faces[0]]
            k = next(v for v in simplex if v != i and v != j)
            sk = (self.pts[k][0] - mx) * tx + (self.pts[k][1] - my) * ty
            if sk > 0:
                lo, hi = -math.inf, svals[0]
            else:
                lo, hi = svals[0], math.inf
        return (mx, my), (tx, ty), (lo, hi)


def _alpha_counts(pts: np.ndarray, r: float, pairs, box: Window | None = None):
    """V - E + T pieces of the dual complex, optionally restricted to a box.

    ``pairs`` is the set of index pairs at distance < 2 r.  Restriction uses
    the restricted-cover nerve: a simplex is counted when the corresponding
    Voronoi-restricted disc pieces meet inside the box.
    """
    n = pts.shape[0]
    eps = _DEGEN_RTOL * max(r, 1.0)
    if n == 0:
        return 0, 0, 0
    complex_ = _DualComplex(pts)

    # vertices
    if box is None:
        n_v = n
    else:
        neighbor_map = {i: set() for i in range(n)}
        for i, j in complex_.edge_faces:
            neighbor_map[i].add(j)
            neighbor_map[j].add(i)
        n_v = 0
        for i in range(n):
            if _restricted_cell_reaches(pts, i, neighbor_map[i], box, r, eps):
                n_v += 1

    # edges: Delaunay-witnessed pairs whose Voronoi face meets both discs
    n_e = 0
    pair_set = {(min(i, j), max(i, j)) for i, j in pairs}
    for key in complex_.edge_faces:
        if key not in pair_set:
            continue
        i, j = key
        d = math.hypot(*(pts[j] - pts[i]))
        h = r * r - 0.25 * d * d
        if h <= 0.0:
            continue
        h = math.sqrt(h)
        m, t, (lo, hi) = complex_.edge_face_interval(i, j)
        lo, hi = max(lo, -h), min(hi, h)
        if box is not None:
            blo, bhi = _line_box_interval(m, t, box)
            lo, hi = max(lo, blo), min(hi, bhi)
        if abs(hi - lo) <= eps:
            raise _Degenerate("edge witness on the boundary")
        if hi > lo:
            n_e += 1

    # triangles: circumradius at most r, circumcenter inside the box
    n_t = 0
    for cc, rad, _simplex in complex_.tri_circum:
        if cc is None:
            continue
        if abs(rad - r) <= eps:
            raise _Degenerate("cocircular triple at radius r")
        if rad < r:
            if box is None or _point_in_box(cc, box, eps):
                n_t += 1
    return n_v, n_e, n_t


def _point_in_box(p, box: Window, eps: float) -> bool:
    lx, ly = box.lower
    ux, uy = box.upper
    if (abs(p[0] - lx) <= eps or abs(p[0] - ux) <= eps
            or abs(p[1] - ly) <= eps or abs(p[1] - uy) <= eps):
        raise _Degenerate("dual vertex on the box boundary")
    return lx < p[0] < ux and ly < p[1] < uy


def _line_box_interval(m, t, box: Window):
    """Parameter interval of the line m + s t inside a closed box."""
    lo, hi = -math.inf, math.inf
    for axis in range(2):
        mv, tv = m[axis], t[axis]
        lov, hiv = box.lower[axis], box.upper[axis]
        if abs(tv) < 1e-300:
            if not (lov <= mv <= hiv):
                return math.inf, -math.inf
            continue
        s0 = (lov - mv) / tv
        s1 = (hiv - mv) / tv
        if s0 > s1:
            s0, s1 = s1, s0
        lo, hi = max(lo, s0), min(hi, s1)
    return lo, hi


def _restricted_cell_reaches(pts, i, neighbors, box: Window, r, eps) -> bool:
    """Whether the Voronoi cell of point i, clipped to the box, meets B(x_i, r)."""
    # clip the box polygon by the bisector halfplane of each neighbour
    poly = [
        (box.lower[0], box.lower[1]),
        (box.upper[0], box.lower[1]),
        (box.upper[0], box.upper[1]),
        (box.lower[0], box.upper[1]),
    ]
    xi = pts[i]
    for j in neighbors:
        xj = pts[j]
        # halfplane: |p - xi|^2 <= |p - xj|^2, i.e. n . p <= c
        nx, ny = xj[0] - xi[0], xj[1] - xi[1]
        c = 0.5 * (xj[0] ** 2 + xj[1] ** 2 - xi[0] ** 2 - xi[1] ** 2)
        poly = _clip_halfplane(poly, nx, ny, c)
        if not poly:
            return False
    dist = _dist_point_polygon(xi, poly)
    if abs(dist - r) <= eps:
        raise _Degenerate("restricted cell tangent to its disc")
    return dist < r


def _clip_halfplane(poly, nx, ny, c):
    """Sutherland-Hodgman clip of a convex polygon by n . p <= c."""
    out = []
    m = len(poly)
    for k in range(m):
        p = poly[k]
        q = poly[(k + 1) % m]
        fp = nx * p[0] + ny * p[1] - c
        fq = nx * q[0] + ny * q[1] - c
        if fp <= 0.0:
            out.append(p)
            if fq > 0.0:
                t = fp / (fp - fq)
                out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
        elif fq <= 0.0:
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def _dist_point_polygon(p, poly) -> float:
    """Distance from a point to a convex polygon (0 when inside)."""
    m = len(poly)
    if m == 0:
        return math.inf
    if m == 1:
        return math.hypot(p[0] - poly[0][0], p[1] - poly[0][1])
    inside = True
    best = math.inf
    for k in range(m):
        a = poly[k]
        b = poly[(k + 1) % m]
        ex, ey = b[0] - a[0], b[1] - a[1]
        px, py = p[0] - a[0], p[1] - a[1]
        cross = ex * py - ey * px  # polygon is CCW: negative means outside
        ll = ex * ex + ey * ey
        t = 0.0 if ll == 0.0 else max(0.0, min(1.0, (px * ex + py * ey) / ll))
        qx, qy = a[0] + t * ex, a[1] + t * ey
        best = min(best, math.hypot(p[0] - qx, p[1] - qy))
        if cross < 0.0:
            inside = False
    return 0.0 if inside else best


# ---------------------------------------------------------------------------
# perturbation wrapper
# ---------------------------------------------------------------------------

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def _jitter(pts: np.ndarray, magnitude: float) -> np.ndarray:
    """Deterministic per-index perturbation used to break geometric ties."""
    idx = np.arange(1, pts.shape[0] + 1, dtype=np.float64)
    ang = idx * _GOLDEN_ANGLE
    offset = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return pts + magnitude * offset


def _with_perturbation(pts: np.ndarray, r: float, fn):
    """Run fn(points) retrying with growing deterministic jitter on ties."""
    magnitude = 1e-9 * max(r, 1.0)
    events = 0
    current = pts
    for attempt in range(6):
        try:
            return fn(current), events
        except _Degenerate:
            events += 1
            current = _jitter(pts, magnitude)
            magnitude *= 16.0
    raise RuntimeError("could not resolve geometric degeneracy by perturbation")


# ---------------------------------------------------------------------------
# public functionals
# ---------------------------------------------------------------------------

def _neighbor_pairs(pts: np.ndarray, r: float, eps: float):
    """Index pairs at centre distance < 2 r (tangency raises)."""
    if pts.shape[0] < 2:
        return []
    tree = cKDTree(pts)
    cand = tree.query_pairs(2.0 * r * (1.0 + 1e-9) + eps, output_type="ndarray")
    pairs = []
    for i, j in cand:
        d = math.hypot(pts[j][0] - pts[i][0], pts[j][1] - pts[i][1])
        if abs(d - 2.0 * r) <= eps:
            raise _Degenerate("tangent circles")
        if d < 2.0 * r:
            pairs.append((int(i), int(j)))
    return pairs


def _component_count(n: int, pairs) -> int:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    return len({find(i) for i in range(n)})


def _functionals_once(pts: np.ndarray, r: float):
    n = pts.shape[0]
    if n == 0:
        return 0.0, 0.0, 0, 0, 0
    eps = _DEGEN_RTOL * max(r, 1.0)
    pairs = _neighbor_pairs(pts, r, eps)
    neighbors = {i: [] for i in range(n)}
    for i, j in pairs:
        neighbors[i].append(j)
        neighbors[j].append(i)

    area = 0.0
    perimeter = 0.0
    for i in range(n):
        covered = []
        for j in neighbors[i]:
            iv = _pair_cover_interval(pts[i], pts[j], r, eps)
            if iv is not None:
                covered.append(iv)
        merged = _merge_intervals(_normalize_intervals(covered))
        total_cover = sum(b - a for a, b in merged)
        if total_cover >= TWO_PI:
            continue
        for a, b in _complement_intervals(merged):
            area += _green_arc(pts[i], r, a, b)
            perimeter += r * (b - a)

    n_cc = _component_count(n, pairs)
    n_v, n_e, n_t = _alpha_counts(pts, r, pairs, box=None)
    euler = n_v - n_e + n_t
    n_holes = n_cc - euler
    if n_holes < 0:
        raise _Degenerate("negative hole count")
    return area, perimeter, euler, n_cc, n_holes


def minkowski_functionals(du: DiscUnion) -> MinkowskiSummary:
    """Exact area, perimeter, Euler characteristic of the disc union."""
    pts = du.centers.points
    (area, perim, euler, n_cc, n_holes), events = _with_perturbation(
        pts, du.radius, lambda p: _functionals_once(p, du.radius))
    return MinkowskiSummary(area, perim, euler, n_cc, n_holes, events)


def _circle_outside_box_intervals(c, r, box: Window, eps):
    """Angular intervals of a circle lying outside the closed box."""
    out = []
    lx, ly = box.lower
    ux, uy = box.upper
    for bound, is_lower, trig in ((lx, True, "cos"), (ux, False, "cos"),
                                  (ly, True, "sin"), (uy, False, "sin")):
        coord = c[0] if trig == "cos" else c[1]
        u = (bound - coord) / r
        if abs(abs(u) - 1.0) <= eps / r:
            raise _Degenerate("circle tangent to box edge")
        if is_lower:
            if u <= -1.0:
                continue
            if u >= 1.0:
                return [(0.0, TWO_PI)]
        else:
            if u >= 1.0:
                continue
            if u <= -1.0:
                return [(0.0, TWO_PI)]
        if trig == "cos":
            a = math.acos(u)
            # cos(theta) < u  <->  theta in (a, 2 pi - a)
            iv = (a, TWO_PI - a) if is_lower else (-a, a)
        else:
            a = math.asin(u)
            # sin(theta) < u  <->  theta in (pi - a, 2 pi + a)
            iv = (math.pi - a, TWO_PI + a) if is_lower else (a, math.pi - a)
        if iv[1] > iv[0]:
            out.append(iv)
    return out


def _edge_chord_intervals(c, r, a0, direction, length, eps):
    """Chord of disc (c, r) on the segment a0 + t * direction, t in [0, length]."""
    # signed distance from centre to the segment's line
    nx, ny = -direction[1], direction[0]
    dist = (c[0] - a0[0]) * nx + (c[1] - a0[1]) * ny
    if abs(abs(dist) - r) <= eps:
        raise _Degenerate("circle tangent to box edge line")
    if abs(dist) >= r:
        return None
    half = math.sqrt(r * r - dist * dist)
    tc = (c[0] - a0[0]) * direction[0] + (c[1] - a0[1]) * direction[1]
    t0, t1 = tc - half, tc + half
    t0, t1 = max(t0, 0.0), min(t1, length)
    if t0 >= t1:
        return None
    return (t0, t1)


def _merge_linear(intervals):
    if not intervals:
        return []
    intervals = sorted(intervals)
    merged = [list(intervals[0])]
    for a, b in intervals[1:]:
        if a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def _clipped_once(pts: np.ndarray, r: float, box: Window):
    n = pts.shape[0]
    eps = _DEGEN_RTOL * max(r, 1.0)
    lx, ly = box.lower
    ux, uy = box.upper

    # discs whose closure meets the box
    relevant = []
    for i in range(n):
        qx = min(max(pts[i][0], lx), ux)
        qy = min(max(pts[i][1], ly), uy)
        d = math.hypot(pts[i][0] - qx, pts[i][1] - qy)
        if abs(d - r) <= eps:
            raise _Degenerate("disc tangent to the box")
        if d < r:
            relevant.append(i)

    if not relevant:
        return 0.0, 0.0, 0.0, 0, 0

    pairs = _neighbor_pairs(pts, r, eps)
    neighbors = {i: [] for i in range(n)}
    for i, j in pairs:
        neighbors[i].append(j)
        neighbors[j].append(i)

    area = 0.0
    arc_length = 0.0
    for i in relevant:
        covered = [iv for j in neighbors[i]
                   for iv in [_pair_cover_interval(pts[i], pts[j], r, eps)]
                   if iv is not None]
        covered += _circle_outside_box_intervals(pts[i], r, box, eps)
        merged = _merge_intervals(_normalize_intervals(covered))
        total_cover = sum(b - a for a, b in merged)
        if total_cover >= TWO_PI:
            continue
        for a, b in _complement_intervals(merged):
            area += _green_arc(pts[i], r, a, b)
            arc_length += r * (b - a)

    # straight boundary pieces: portions of the (CCW) box edges inside the union
    edges = (
        ((lx, ly), (1.0, 0.0), ux - lx),   # bottom
        ((ux, ly), (0.0, 1.0), uy - ly),   # right
        ((ux, uy), (-1.0, 0.0), ux - lx),  # top
        ((lx, uy), (0.0, -1.0), uy - ly),  # left
    )
    edge_length = 0.0
    edge_cover = []
    for a0, direction, length in edges:
        chords = []
        for i in relevant:
            iv = _edge_chord_intervals(pts[i], r, a0, direction, length, eps)
            if iv is not None:
                chords.append(iv)
        merged = _merge_linear(chords)
        edge_cover.append(merged)
        for t0, t1 in merged:
            p = (a0[0] + t0 * direction[0], a0[1] + t0 * direction[1])
            q = (a0[0] + t1 * direction[0], a0[1] + t1 * direction[1])
            area += _green_segment(p, q)
            edge_length += t1 - t0

    sub = pts
    n_v, n_e, n_t = _alpha_counts(sub, r, pairs, box=box)
    euler = n_v - n_e + n_t

    # components of the union's trace on the left + bottom double edge
    left = _merge_linear([iv for i in relevant for iv in
                          [_edge_chord_intervals(pts[i], r, (lx, ly), (0.0, 1.0),
                                                 uy - ly, eps)] if iv is not None])
    bottom = _merge_linear([iv for i in relevant for iv in
                            [_edge_chord_intervals(pts[i], r, (lx, ly), (1.0, 0.0),
                                                   ux - lx, eps)] if iv is not None])
    corner_dist = min(math.hypot(pts[i][0] - lx, pts[i][1] - ly) for i in relevant)
    if abs(corner_dist - r) <= eps:
        raise _Degenerate("disc boundary through the box corner")
    corner_covered = corner_dist < r
    n_double = len(left) + len(bottom) - (1 if corner_covered else 0)
    return area, arc_length, edge_length, euler, n_double


def clipped_functionals(du: DiscUnion, box: Window) -> ClippedSummary:
    """Functionals of the union clipped to an axis-aligned box."""
    if box.dimension != 2:
        raise ValueError("clipping box must be planar")
    pts = du.centers.points
    (area, arcs, edge, euler, ndouble), events = _with_perturbation(
        pts, du.radius, lambda p: _clipped_once(p, du.radius, box))
    return ClippedSummary(area, arcs, edge, euler, ndouble, events)


# ---------------------------------------------------------------------------
# insertion deltas (used for conditional energies of geometric interactions)
# ---------------------------------------------------------------------------

def _insertion_once(local_pts: np.ndarray, x, r, need_euler):
    """(d_area, d_perimeter, d_euler) of adding a disc at x.

    ``local_pts`` must contain every existing centre within 2 r of x for the
    area/perimeter deltas and within 6 r for the Euler delta.
    """
    eps = _DEGEN_RTOL * max(r, 1.0)
    x = (float(x[0]), float(x[1]))
    n = local_pts.shape[0]

    near = []  # centres overlapping the new disc
    for i in range(n):
        d = math.hypot(local_pts[i][0] - x[0], local_pts[i][1] - x[1])
        if d <= eps:
            raise _Degenerate("duplicate centre")
        if abs(d - 2.0 * r) <= eps:
            raise _Degenerate("tangent to the new disc")
        if d < 2.0 * r:
            near.append(i)

    # arcs of the new circle outside every existing disc
    covered = []
    for i in near:
        iv = _pair_cover_interval(x, local_pts[i], r, eps)
        if iv is not None:
            covered.append(iv)
    merged = _merge_intervals(_normalize_intervals(covered))
    d_area = 0.0
    d_per = 0.0
    if sum(b - a for a, b in merged) < TWO_PI:
        for a, b in _complement_intervals(merged):
            d_area += _green_arc(x, r, a, b)
            d_per += r * (b - a)

    # arcs of existing circles that the new disc swallows (they bounded the
    # uncovered pocket, so they close the Green contour with reversed sign,
    # and they leave the union's perimeter)
    for i in near:
        inside_new = _pair_cover_interval(local_pts[i], x, r, eps)
        if inside_new is None:
            continue
        covered_i = []
        for j in near:
            if j == i:
                continue
            iv = _pair_cover_interval(local_pts[i], local_pts[j], r, eps)
            if iv is not None:
                covered_i.append(iv)
        pieces = _normalize_intervals([inside_new])
        blocked = _merge_intervals(_normalize_intervals(covered_i))
        exposed = _subtract_intervals(pieces, blocked)
        for a, b in exposed:
            d_area -= _green_arc(local_pts[i], r, a, b)
            d_per -= r * (b - a)

    d_euler = 0
    if need_euler:
        pairs_before = _neighbor_pairs(local_pts, r, eps)
        v0, e0, t0 = _alpha_counts(local_pts, r, pairs_before)
        with_x = np.vstack([local_pts, np.array(x)[None, :]])
        pairs_after = _neighbor_pairs(with_x, r, eps)
        v1, e1, t1 = _alpha_counts(with_x, r, pairs_after)
        d_euler = (v1 - e1 + t1) - (v0 - e0 + t0)
    return d_area, d_per, d_euler


def _subtract_intervals(pieces, blocked):
    """Set difference of normalized interval lists on [0, 2*pi]."""
    out = []
    for a, b in pieces:
        cursor = a
        for ba, bb in blocked:
            if bb <= cursor or ba >= b:
                continue
            if ba > cursor:
                out.append((cursor, ba))
            cursor = max(cursor, bb)
            if cursor >= b:
                break
        if cursor < b:
            out.append((cursor, b))
    return out


def disc_insertion_delta(local_centers: np.ndarray, x, r: float,
                         need_euler: bool) -> tuple[float, float, int]:
    """Change of (area, perimeter, Euler) when a disc is added at x.

    The caller supplies the existing centres within 2 r of x (6 r when the
    Euler delta is needed); farther discs provably cancel.
    """
    (da, dp, de), _events = _with_perturbation(
        np.asarray(local_centers, dtype=np.float64).reshape(-1, 2), r,
        lambda p: _insertion_once(p, x, r, need_euler))
    return da, dp, de


# ---------------------------------------------------------------------------
# pixel-grid oracle (tests only)
# ---------------------------------------------------------------------------

_STRUCTURE_8 = np.ones((3, 3), dtype=int)
_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int)


def raster_oracle(du: DiscUnion, resolution: float,
                  box: Window | None = None) -> MinkowskiSummary:
    """Pixel-grid approximation of the functionals.

    Area by pixel counting, components/holes by flood fill (8-connected
    foreground, 4-connected background), perimeter by marching squares on the
    signed distance field.  Converges to the exact values as the resolution
    shrinks; accuracy is the caller's concern.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    pts = du.centers.points
    r = du.radius
    h = float(resolution)
    if pts.shape[0] == 0:
        return MinkowskiSummary(0.0, 0.0, 0, 0, 0)
    if box is None:
        lo = pts.min(axis=0) - r - 4 * h
        hi = pts.max(axis=0) + r + 4 * h
    else:
        lo, hi = box.lower.copy(), box.upper.copy()
    nx = int(math.ceil((hi[0] - lo[0]) / h)) + 1
    ny = int(math.ceil((hi[1] - lo[1]) / h)) + 1
    xs = lo[0] + h * (np.arange(nx) + 0.5)
    ys = lo[1] + h * (np.arange(ny) + 0.5)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    dist = np.full(gx.shape, np.inf)
    for cx, cy in pts:
        d = np.hypot(gx - cx, gy - cy)
        np.minimum(dist, d, out=dist)
    signed = dist - r
    fore = signed < 0
    if box is not None:
        fore &= (gx >= lo[0]) & (gx < hi[0]) & (gy >= lo[1]) & (gy < hi[1])

    area = float(fore.sum()) * h * h
    labels, n_components = _label_count(fore, _STRUCTURE_8)
    bg_labels, n_bg = _label_count(~fore, _STRUCTURE_4)
    border = np.zeros_like(fore)
    border[0, :] = border[-1, :] = border[:, 0] = border[:, -1] = True
    touching = set(np.unique(bg_labels[border & (bg_labels > 0)]).tolist())
    # Count only holes resolvable at this resolution: a hole must reach depth
    # 2h inside the complement, which discards single-pixel slivers pinched
    # off at arc crossings (a discretization artifact, not topology).
    n_holes = 0
    if n_bg:
        depth = ndimage.maximum(signed, labels=bg_labels,
                                index=np.arange(1, n_bg + 1))
        depth = np.atleast_1d(depth)
        for lab in range(1, n_bg + 1):
            if lab not in touching and depth[lab - 1] >= 2.0 * h:
                n_holes += 1
    euler = n_components - n_holes

    perimeter = 0.0
    if box is None:
        for contour in find_contours(signed, 0.0):
            seg = np.diff(contour, axis=0)
            perimeter += float(np.hypot(seg[:, 0], seg[:, 1]).sum()) * h
    return MinkowskiSummary(area, perimeter, int(euler), int(n_components),
                            int(n_holes))


def _label_count(mask, structure):
    labels, count = ndimage.label(mask, structure=structure)
    return labels, count


def min_feature_scale(du: DiscUnion) -> float:
    """Smallest geometric feature of the union (used to flag near-degeneracy).

    The minimum over disc pairs of the centre distance and the tangency gap
    |2r - d| (the thickness of the lens or of the separating slot), and over
    Delaunay triples of |circumradius - r| (the depth of the hole or of the
    triple overlap around the dual vertex).  A pixel oracle can only resolve
    topology whose feature scale exceeds a few pixel widths.
    """
    pts = du.centers.points
    r = du.radius
    if pts.shape[0] < 2:
        return math.inf
    best = math.inf
    tree = cKDTree(pts)
    for i, j in tree.query_pairs(2.0 * r * 1.5, output_type="ndarray"):
        d = math.hypot(*(pts[j] - pts[i]))
        best = min(best, d, abs(2.0 * r - d))
    if pts.shape[0] >= 3:
        try:
            tri = Delaunay(pts)
            for simplex in tri.simplices:
                cc, rad = _circumcenter(*(pts[v] for v in simplex))
                if cc is not None and math.isfinite(rad):
                    best = min(best, abs(rad - r))
        except Exception:
            return 0.0
    return best
