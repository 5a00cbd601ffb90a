"""Planar and torus geometry helpers shared by tracing and topology."""
from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from .dh import TWO_PI, wrap_angle


def seg_intersect(a0, a1, b0, b1):
    """Proper intersection point of segments [a0,a1] and [b0,b1], or None."""
    d1 = (a1[0] - a0[0], a1[1] - a0[1])
    d2 = (b1[0] - b0[0], b1[1] - b0[1])
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(den) < 1e-15:
        return None
    dx, dy = b0[0] - a0[0], b0[1] - a0[1]
    s = (dx * d2[1] - dy * d2[0]) / den
    u = (dx * d1[1] - dy * d1[0]) / den
    if 0.0 <= s <= 1.0 and 0.0 <= u <= 1.0:
        return (a0[0] + s * d1[0], a0[1] + s * d1[1]), s, u
    return None


def point_segment_dist(px, py, ax, ay, bx, by):
    return _point_segment_foot(px, py, ax, ay, bx, by)[0]


def _point_segment_foot(px, py, ax, ay, bx, by):
    vx, vy = bx - ax, by - ay
    wx, wy = px - ax, py - ay
    vv = vx * vx + vy * vy
    t = 0.0 if vv == 0.0 else min(1.0, max(0.0, (wx * vx + wy * vy) / vv))
    fx, fy = ax + t * vx, ay + t * vy
    return math.hypot(px - fx, py - fy), (fx, fy)


class SegmentHash:
    """Uniform spatial hash over planar segments for pair queries."""

    def __init__(self, cell: float):
        self.cell = cell
        self.buckets = defaultdict(list)
        self.segs = []

    def add(self, tag, a, b):
        idx = len(self.segs)
        self.segs.append((tag, a, b))
        c = self.cell
        i0, i1 = sorted((int(math.floor(a[0] / c)), int(math.floor(b[0] / c))))
        j0, j1 = sorted((int(math.floor(a[1] / c)), int(math.floor(b[1] / c))))
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                self.buckets[(i, j)].append(idx)

    def candidate_pairs(self):
        seen = set()
        for key in sorted(self.buckets):
            lst = self.buckets[key]
            for ii in range(len(lst)):
                for jj in range(ii + 1, len(lst)):
                    pair = (lst[ii], lst[jj]) if lst[ii] < lst[jj] else (lst[jj], lst[ii])
                    if pair not in seen:
                        seen.add(pair)
                        yield pair

    def near(self, x, y, radius: int = 1):
        i0 = int(math.floor(x / self.cell))
        j0 = int(math.floor(y / self.cell))
        out = []
        for i in range(i0 - radius, i0 + radius + 1):
            for j in range(j0 - radius, j0 + radius + 1):
                out.extend(self.buckets.get((i, j), ()))
        return out


def polyline_min_dist(point, polylines) -> float:
    """Distance from a planar point to a collection of (n, 2) polylines."""
    px, py = float(point[0]), float(point[1])
    best = math.inf
    for poly in polylines:
        for k in range(len(poly) - 1):
            d = point_segment_dist(px, py, poly[k, 0], poly[k, 1], poly[k + 1, 0], poly[k + 1, 1])
            if d < best:
                best = d
    return best


# --------------------------------------------------------------------------
# torus-aware helpers: points live in [-pi, pi)^2, segments take the short way
# --------------------------------------------------------------------------

def unwrap_segment(a, b):
    """Endpoint b shifted to the representative nearest to a."""
    d = wrap_angle(np.asarray(b, float) - np.asarray(a, float))
    return np.asarray(a, float), np.asarray(a, float) + d


def split_torus_polyline(vertices, closed: bool, jump: float = math.pi):
    """Split a torus polyline into planar pieces with no wrap jumps.

    Returns a list of (k, 2) arrays in unwrapped coordinates whose first
    vertex lies in [-pi, pi)^2.
    """
    v = np.asarray(vertices, float)
    if len(v) == 0:
        return []
    pts = [v[0]]
    pieces = []
    n = len(v)
    last = v[0].copy()
    rng = range(1, n + 1) if closed else range(1, n)
    for k in rng:
        cur = v[k % n]
        step = wrap_angle(cur - last)
        nxt = pts[-1] + step
        if np.max(np.abs(step)) > jump:
            pieces.append(np.array(pts))
            pts = [wrap_angle(cur)]
        else:
            pts.append(nxt)
        last = cur
    pieces.append(np.array(pts))
    return pieces


def torus_point_polyline_dist(point, polylines_closed) -> float:
    """Torus distance from a (theta2, theta3) point to closed torus polylines.

    polylines_closed: iterable of (n, 2) vertex arrays treated cyclically.
    """
    p = np.asarray(point, float)
    best = math.inf
    for poly in polylines_closed:
        n = len(poly)
        for k in range(n):
            a = poly[k]
            b = poly[(k + 1) % n]
            a0, b0 = unwrap_segment(a, b)
            # shift the point to the representative nearest the segment start
            pp = a0 + wrap_angle(p - a0)
            d = point_segment_dist(pp[0], pp[1], a0[0], a0[1], b0[0], b0[1])
            if d < best:
                best = d
    return best


class TorusCurveIndex:
    """KD-tree accelerated torus distance queries against closed polylines."""

    def __init__(self, polylines_closed):
        from scipy.spatial import cKDTree

        segs = []
        mids = []
        self.max_half = 0.0
        for poly in polylines_closed:
            n = len(poly)
            for k in range(n):
                a, b = unwrap_segment(poly[k], poly[(k + 1) % n])
                segs.append((a, b))
                mids.append(0.5 * (a + b))
                self.max_half = max(self.max_half, 0.5 * float(np.hypot(*(b - a))))
        self.segs = segs
        self.empty = len(segs) == 0
        if not self.empty:
            m = wrap_angle(np.array(mids))
            # 3x3 tiling turns torus distance into plain Euclidean distance
            tiles = []
            self.tile_of = []
            for dx in (-TWO_PI, 0.0, TWO_PI):
                for dy in (-TWO_PI, 0.0, TWO_PI):
                    tiles.append(m + np.array([dx, dy]))
                    self.tile_of.extend(range(len(segs)))
            self.tree = cKDTree(np.vstack(tiles))
            self.tile_of = np.array(self.tile_of)

    def dist(self, point, k: int = 16) -> float:
        return self.nearest(point, k)[0]

    def nearest(self, point, k: int = 16):
        """(distance, closest point) on the indexed curves, torus metric."""
        if self.empty:
            return math.inf, None
        p = wrap_angle(np.asarray(point, float))
        dd, ii = self.tree.query(p, k=min(k, len(self.tile_of)))
        best = math.inf
        best_pt = None
        for d_mid, idx in zip(np.atleast_1d(dd), np.atleast_1d(ii)):
            if d_mid - self.max_half > best:
                continue
            a, b = self.segs[self.tile_of[idx]]
            pp = a + wrap_angle(p - a)
            d, foot = _point_segment_foot(pp[0], pp[1], a[0], a[1], b[0], b[1])
            if d < best:
                best = d
                best_pt = wrap_angle(np.array(foot))
        return best, best_pt
