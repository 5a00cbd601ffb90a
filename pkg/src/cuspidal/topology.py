"""Aspects, pseudosingularities, reduced aspects and the cuspidality verdict.

Aspects are the connected components of the torus minus the critical-point
curves; pseudosingularities are nonsingular preimages of critical values
(PS = f^-1(f(S)) \\ S); reduced aspects are components of the complement of
S union PS.  The verdict (existence of a cusp) is cross-validated against an
independent oracle: sampling regular workspace points and asking whether two
IK solutions ever share an aspect.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .dh import (
    TWO_PI,
    CrossSectionPoint,
    DhParams,
    JointConfig,
    det_jacobian,
    fk_arrays,
    singularity_scale,
    validate_params,
    wrap_angle,
)
from .errors import CuspidalError, NonGenericRobotError, StartOrGoalSingularError
from .geometry import TorusCurveIndex, seg_intersect, split_torus_polyline, unwrap_segment
from .critical import (
    DEFAULT_GRID_N,
    critical_values,
    find_cusps,
    find_nodes,
    genericity_check,
    region_census,
    trace_critical_points,
)
from .reduction import conic_classify, solve_ik_cross_section

PS_EXCLUSION_RADIUS = 1e-2
PATH_DET_TOL = 1e-4  # times singularity scale
_SINGULAR_CELL_TOL = 1e-12


# --------------------------------------------------------------------------
# grid maps
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AspectMap:
    """Aspect labels on the torus cell grid; -1 marks singular cells."""

    grid_n: int
    labels: np.ndarray        # (N, N) int32
    count: int
    det_center: np.ndarray    # (N, N) det J at cell centers

    @property
    def cell_size(self) -> float:
        return TWO_PI / self.grid_n

    def cell_of(self, theta2: float, theta3: float):
        h = self.cell_size
        i = int((float(wrap_angle(theta2)) + math.pi) // h) % self.grid_n
        j = int((float(wrap_angle(theta3)) + math.pi) // h) % self.grid_n
        return i, j

    def label_of(self, theta2: float, theta3: float) -> int:
        i, j = self.cell_of(theta2, theta3)
        return int(self.labels[i, j])

    def center(self, i: int, j: int):
        h = self.cell_size
        return (-math.pi + (i + 0.5) * h, -math.pi + (j + 0.5) * h)


@dataclass(frozen=True)
class ReducedAspectMap:
    """Refinement of the AspectMap by the pseudosingularity curves."""

    grid_n: int
    labels: np.ndarray
    count: int
    parent_aspect: np.ndarray  # (count,) aspect label per reduced label

    def label_of(self, theta2: float, theta3: float) -> int:
        h = TWO_PI / self.grid_n
        i = int((float(wrap_angle(theta2)) + math.pi) // h) % self.grid_n
        j = int((float(wrap_angle(theta3)) + math.pi) // h) % self.grid_n
        return int(self.labels[i, j])


@dataclass(frozen=True)
class PseudoSingularitySet:
    """Nonsingular preimages of the critical values, chained into polylines."""

    polylines: tuple          # of (k, 2) arrays, open chains on the torus
    sources: tuple            # source JointCurve index per polyline
    exclusion_radius: float

    def total_points(self) -> int:
        return sum(len(c) for c in self.polylines)


@dataclass(frozen=True)
class JointPath:
    waypoints: np.ndarray     # (m, 2) torus points theta2, theta3
    theta1_start: float
    theta1_end: float
    min_det: float

    def __len__(self):
        return len(self.waypoints)


@dataclass(frozen=True)
class PathCheck:
    min_det: float
    valid: bool


@dataclass(frozen=True)
class TopologyMaps:
    """Everything label_solutions and path queries need, built once."""

    aspects: AspectMap
    reduced: ReducedAspectMap
    ps: PseudoSingularitySet
    s_index: TorusCurveIndex
    ps_index: TorusCurveIndex
    boundary_tol: float


@dataclass(frozen=True)
class SolutionLabel:
    config: JointConfig
    multiplicity: int
    aspect: int
    reduced_aspect: int
    on_boundary: bool
    singular_cell: bool


@dataclass(frozen=True)
class CrossValidation:
    points_examined: int
    same_aspect_found: bool
    witness: tuple | None      # (rho, z) with two IKS in one aspect
    theorem2_violations: tuple


@dataclass(frozen=True)
class CuspidalityReport:
    verdict: bool
    cusps: tuple
    nodes: tuple
    aspect_count: int
    reduced_aspect_count: int
    genericity: object
    cross_validation: CrossValidation
    census: object
    conic_kind: str
    anomalies: tuple
    work: dict

    @property
    def agrees(self) -> bool:
        return self.verdict == self.cross_validation.same_aspect_found


# --------------------------------------------------------------------------
# flood fill with blocked edges
# --------------------------------------------------------------------------

def _center_grid(p: DhParams, grid_n: int):
    h = TWO_PI / grid_n
    centers = -math.pi + h * (np.arange(grid_n) + 0.5)
    c2, c3 = np.meshgrid(centers, centers, indexing="ij")
    return det_jacobian(p, c2, c3)


def _block_edges_with_polylines(blocked_r, blocked_u, grid_n, pieces):
    """Mark dual edges (center-to-center) crossed by any polyline piece."""
    h = TWO_PI / grid_n

    def cell_of(x, y):
        i = int((float(wrap_angle(x)) + math.pi) // h) % grid_n
        j = int((float(wrap_angle(y)) + math.pi) // h) % grid_n
        return i, j

    def center_near(i, j, ref):
        base = np.array([-math.pi + (i + 0.5) * h, -math.pi + (j + 0.5) * h])
        return ref + wrap_angle(base - ref)

    for piece in pieces:
        for k in range(len(piece) - 1):
            a = piece[k]
            b = piece[k + 1]
            lo_i = int(math.floor((min(a[0], b[0]) + math.pi) / h)) - 1
            hi_i = int(math.floor((max(a[0], b[0]) + math.pi) / h)) + 1
            lo_j = int(math.floor((min(a[1], b[1]) + math.pi) / h)) - 1
            hi_j = int(math.floor((max(a[1], b[1]) + math.pi) / h)) + 1
            mid = 0.5 * (a + b)
            for ii in range(lo_i, hi_i + 1):
                for jj in range(lo_j, hi_j + 1):
                    i = ii % grid_n
                    j = jj % grid_n
                    c0 = center_near(i, j, mid)
                    # east edge (i,j)-(i+1,j) and north edge (i,j)-(i,j+1)
                    if not blocked_r[i, j] and seg_intersect(a, b, c0, c0 + (h, 0.0)):
                        blocked_r[i, j] = True
                    if not blocked_u[i, j] and seg_intersect(a, b, c0, c0 + (0.0, h)):
                        blocked_u[i, j] = True


def _components(det_c, blocked_r, blocked_u, grid_n, excluded=None):
    """Connected components over open edges; excluded cells get label -1."""
    pos = det_c >= 0
    open_r = (pos == np.roll(pos, -1, axis=0)) & ~blocked_r
    open_u = (pos == np.roll(pos, -1, axis=1)) & ~blocked_u
    if excluded is not None:
        open_r &= ~excluded & ~np.roll(excluded, -1, axis=0)
        open_u &= ~excluded & ~np.roll(excluded, -1, axis=1)
    idx = np.arange(grid_n * grid_n).reshape(grid_n, grid_n)
    rows = np.concatenate([idx[open_r], idx[open_u]])
    cols = np.concatenate([np.roll(idx, -1, axis=0)[open_r], np.roll(idx, -1, axis=1)[open_u]])
    graph = coo_matrix((np.ones(len(rows), dtype=bool), (rows, cols)),
                       shape=(grid_n * grid_n, grid_n * grid_n))
    n_comp, raw = connected_components(graph, directed=False)
    raw = raw.reshape(grid_n, grid_n)
    # renumber by first row-major appearance so labels are deterministic
    remap = -np.ones(n_comp, dtype=np.int32)
    keep = np.ones((grid_n, grid_n), dtype=bool) if excluded is None else ~excluded
    nxt = 0
    flat = raw.ravel()
    keep_flat = keep.ravel()
    for k, v in enumerate(flat):
        if keep_flat[k] and remap[v] < 0:
            remap[v] = nxt
            nxt += 1
    labels = remap[flat].reshape(grid_n, grid_n)
    labels[~keep] = -1
    return nxt, labels


def _polyline_pieces(curves):
    pieces = []
    for c in curves:
        pieces.extend(split_torus_polyline(c.vertices, c.closed))
    return pieces


def compute_aspects(p: DhParams, curves, grid_n: int = DEFAULT_GRID_N) -> AspectMap:
    """Flood fill of the torus grid with edges blocked at sign changes of
    det J and at crossings of the traced critical-point polylines."""
    det_c = _center_grid(p, grid_n)
    blocked_r = np.zeros((grid_n, grid_n), dtype=bool)
    blocked_u = np.zeros((grid_n, grid_n), dtype=bool)
    _block_edges_with_polylines(blocked_r, blocked_u, grid_n, _polyline_pieces(curves))
    count, labels = _components(det_c, blocked_r, blocked_u, grid_n)
    labels = labels.astype(np.int32)
    scale = singularity_scale(p)
    labels[np.abs(det_c) < _SINGULAR_CELL_TOL * scale] = -1
    return AspectMap(grid_n, labels, count, det_c)


def _ps_candidates(p: DhParams, s_index, exclusion_radius: float, scale: float,
                   theta2: float, theta3: float):
    """Pseudosingular preimages of the critical value of one S point.

    Membership is geometric (farther than the exclusion radius from every
    critical curve); a |det J| floor would delete genuine PS branches that
    run close to S with small but nonzero determinant.
    """
    x, y, z = fk_arrays(p, 0.0, theta2, theta3)
    target = CrossSectionPoint(float(np.hypot(x, y)), float(z))
    try:
        sols = solve_ik_cross_section(p, target)
    except CuspidalError:
        return []
    cands = []
    for s in sols.solutions:
        pt = np.array([s.config.theta2, s.config.theta3])
        if s_index.dist(pt) <= exclusion_radius:
            continue
        cands.append(pt)
    return cands


def compute_pseudosingularities(p: DhParams, curves,
                                exclusion_radius: float = PS_EXCLUSION_RADIUS) -> PseudoSingularitySet:
    """PS = f^-1(f(S)) \\ S, chained into polylines along each source curve.

    For every sample on every critical curve, the IK preimages of its
    critical value that stay farther than the exclusion radius from all
    critical curves (torus metric) are pseudosingular points; consecutive
    samples link them into chains by nearest-neighbor continuity.  Where a
    preimage moves faster than the source step resolves, the source interval
    is subdivided (refined back onto the critical curve) so chains do not
    tear on fast stretches.
    """
    scale = singularity_scale(p)
    s_index = TorusCurveIndex([c.vertices for c in curves])
    chain_gap = max(6.0 * TWO_PI / max(len(c) for c in curves) if curves else 0.1, 0.05)
    polylines = []
    sources = []
    for ci, curve in enumerate(curves):
        verts = curve.vertices
        n = len(verts)
        active: list = []   # list of [tail_point, [points...]]
        done: list = []
        prev_vertex = None
        for k in range(n):
            cur_vertex = verts[k]
            cands = _ps_candidates(p, s_index, exclusion_radius, scale,
                                   float(cur_vertex[0]), float(cur_vertex[1]))
            used_a, used_b = _greedy_match(active, cands, chain_gap)
            # fast stretches: walk subdivided source samples to carry the
            # chain tail forward, then retry the vertex candidates
            if prev_vertex is not None:
                for ai, chain in enumerate(active):
                    if ai in used_a:
                        continue
                    if _extend_through_subdivision(
                            p, s_index, exclusion_radius, scale, chain,
                            prev_vertex, cur_vertex, chain_gap):
                        for bi, pt in enumerate(cands):
                            if bi in used_b:
                                continue
                            if float(np.hypot(*wrap_angle(pt - chain[0]))) < chain_gap:
                                chain[1].append(pt)
                                chain[0] = pt
                                used_a.add(ai)
                                used_b.add(bi)
                                break
            survivors = []
            for ai, chain in enumerate(active):
                if ai in used_a:
                    survivors.append(chain)
                else:
                    # branch dies inside [prev, cur]: walk the end toward the
                    # death point (sqrt-fast near S) before retiring
                    if prev_vertex is not None:
                        _extend_end_bisect(p, s_index, exclusion_radius, scale,
                                           chain[1], prev_vertex, cur_vertex,
                                           chain_gap, forward=True)
                    done.append(chain[1])
            active = survivors
            for bi, pt in enumerate(cands):
                if bi not in used_b:
                    newborn = [pt, [pt]]
                    if prev_vertex is not None:
                        _extend_end_bisect(p, s_index, exclusion_radius, scale,
                                           newborn[1], prev_vertex, cur_vertex,
                                           chain_gap, forward=False)
                    active.append(newborn)
            prev_vertex = cur_vertex
        done.extend(chain[1] for chain in active)
        # reconnect across the cyclic seam of the source curve
        merged = _merge_chain_ends(done, chain_gap)
        for chain in merged:
            chain = _trim_singular_ends(p, chain, scale, s_index, exclusion_radius)
            if len(chain) >= 2:
                polylines.append(np.array(chain))
                sources.append(ci)
    return PseudoSingularitySet(tuple(polylines), tuple(sources), exclusion_radius)


def _trim_singular_ends(p: DhParams, chain, scale: float, s_index, exclusion_radius):
    """Drop terminating stubs that run into the critical curves.

    PS branches end on S, so |det J| decays to zero at the chain ends; only
    points that are both under the det floor and hugging S are dropped (the
    excluded boundary band covers them for the flood fill).  Interior
    stretches with small determinant are genuine PS and must stay.
    """
    bound = 1e-4 * scale
    reach = 2.0 * exclusion_radius

    def is_stub(pt) -> bool:
        return (abs(float(det_jacobian(p, pt[0], pt[1]))) <= bound
                and s_index.dist(pt) <= reach)

    lo, hi = 0, len(chain)
    while lo < hi and is_stub(chain[lo]):
        lo += 1
    while hi > lo and is_stub(chain[hi - 1]):
        hi -= 1
    return list(chain[lo:hi])


def _greedy_match(active, cands, gap):
    pairs = []
    for ai, chain in enumerate(active):
        for bi, pt in enumerate(cands):
            d = float(np.hypot(*wrap_angle(pt - chain[0])))
            if d < gap:
                pairs.append((d, ai, bi))
    pairs.sort()
    used_a, used_b = set(), set()
    for _, ai, bi in pairs:
        if ai in used_a or bi in used_b:
            continue
        used_a.add(ai)
        used_b.add(bi)
        active[ai][1].append(cands[bi])
        active[ai][0] = cands[bi]
    return used_a, used_b


def _extend_through_subdivision(p, s_index, exclusion_radius, scale, chain,
                                prev_vertex, cur_vertex, gap, steps: int = 8) -> bool:
    """Advance a chain tail through subdivided source samples between two
    consecutive curve vertices; returns True if any progress was made."""
    from .critical import _refine_on_zero_set

    a, b = unwrap_segment(prev_vertex, cur_vertex)
    progressed = False
    for j in range(1, steps):
        mid = a + (b - a) * (j / steps)
        refined = _refine_on_zero_set(p, mid[None, :], scale)[0]
        for pt in _ps_candidates(p, s_index, exclusion_radius, scale,
                                 float(refined[0]), float(refined[1])):
            if float(np.hypot(*wrap_angle(pt - chain[0]))) < gap:
                chain[1].append(pt)
                chain[0] = pt
                progressed = True
                break
    return progressed


def _extend_end_bisect(p, s_index, exclusion_radius, scale, points,
                       prev_vertex, cur_vertex, gap, forward: bool,
                       iters: int = 16) -> None:
    """Walk a chain end toward its birth/death point inside one source step.

    Pseudosingular branches appear and disappear with square-root speed at
    their endpoints on the critical curves, so the end can move several
    chain gaps within a single source step; bisection on the source interval
    resolves the blow-up with a widened match radius.  `forward=True`
    appends (death of a surviving chain), `forward=False` prepends (birth).
    """
    from .critical import _refine_on_zero_set

    a, b = unwrap_segment(prev_vertex, cur_vertex)
    # existence is monotone near the endpoint: a dying branch exists for
    # fractions below the death point, a newborn one above the birth point
    lo, hi = 0.0, 1.0
    end = np.asarray(points[-1] if forward else points[0], float)
    gathered = []
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        sample = a + (b - a) * mid
        refined = _refine_on_zero_set(p, sample[None, :], scale)[0]
        best = None
        best_d = 3.0 * gap
        for pt in _ps_candidates(p, s_index, exclusion_radius, scale,
                                 float(refined[0]), float(refined[1])):
            d = float(np.hypot(*wrap_angle(pt - end)))
            if d < best_d:
                best, best_d = pt, d
        if best is not None:
            end = best
            gathered.append(best)
            if forward:
                lo = mid
            else:
                hi = mid
        else:
            if forward:
                hi = mid
            else:
                lo = mid
    if forward:
        points.extend(gathered)
    else:
        for pt in gathered:
            points.insert(0, pt)


def _merge_chain_ends(chains, gap):
    """Concatenate chains whose ends meet, in any of the four orientations."""
    chains = [list(c) for c in chains if c]
    changed = True
    while changed:
        changed = False
        for i in range(len(chains)):
            if changed:
                break
            for j in range(len(chains)):
                if i == j:
                    continue
                tail = np.asarray(chains[i][-1])
                head_j = np.asarray(chains[j][0])
                tail_j = np.asarray(chains[j][-1])
                if float(np.hypot(*wrap_angle(head_j - tail))) < gap:
                    chains[i].extend(chains[j])
                elif float(np.hypot(*wrap_angle(tail_j - tail))) < gap:
                    chains[i].extend(reversed(chains[j]))
                else:
                    continue
                del chains[j]
                changed = True
                break
    return chains


def compute_reduced_aspects(p: DhParams, curves, ps: PseudoSingularitySet,
                            grid_n: int = DEFAULT_GRID_N) -> ReducedAspectMap:
    """Flood fill blocking on S, PS and short closure segments that reconnect
    PS chain ends to the critical curves (PS branches terminate on S).

    Pseudosingularity branches can run inside the exclusion band around S,
    where no PS polyline exists to block and where cell-center predicates
    cannot resolve which side of the boundary a cell is on.  That band is
    therefore treated as boundary territory: its cells are labeled -1 and
    removed from the connectivity, which is the honest resolution-limited
    reading of the reduced-aspect decomposition (extra splitting is safe,
    leaking between reduced aspects is not).
    """
    det_c = _center_grid(p, grid_n)
    blocked_r = np.zeros((grid_n, grid_n), dtype=bool)
    blocked_u = np.zeros((grid_n, grid_n), dtype=bool)
    pieces = _polyline_pieces(curves)
    for chain in ps.polylines:
        pieces.extend(split_torus_polyline(chain, closed=False))
    s_index = TorusCurveIndex([c.vertices for c in curves])
    for chain in ps.polylines:
        for end in (chain[0], chain[-1]):
            d, foot = s_index.nearest(end)
            if foot is not None and d < 6.0 * ps.exclusion_radius:
                a, b = unwrap_segment(end, foot)
                pieces.append(np.array([a, b]))
    _block_edges_with_polylines(blocked_r, blocked_u, grid_n, pieces)
    if ps.total_points():
        _block_count_changes_near(p, grid_n, blocked_r, blocked_u,
                                  _cells_of_polylines(pieces, grid_n, dilate=2))
    # no pseudosingularities means S is the only boundary: no corridor to seal
    band = (_curve_band(curves, grid_n, ps.exclusion_radius)
            if ps.total_points() else None)
    count, labels = _components(det_c, blocked_r, blocked_u, grid_n, excluded=band)
    labels = labels.astype(np.int32)

    aspect_map = compute_aspects(p, curves, grid_n)
    parent = np.full(max(count, 1), -1, dtype=np.int32)
    flat_r = labels.ravel()
    flat_a = aspect_map.labels.ravel()
    for k in range(len(flat_r)):
        r = flat_r[k]
        if r >= 0 and parent[r] < 0:
            parent[r] = flat_a[k]
    scale = singularity_scale(p)
    labels[np.abs(det_c) < _SINGULAR_CELL_TOL * scale] = -1
    return ReducedAspectMap(grid_n, labels, count, parent)


def _cells_of_polylines(pieces, grid_n: int, dilate: int = 0):
    """Mask of cells touched by unwrapped polyline pieces, dilated 4-ways."""
    h = TWO_PI / grid_n
    mask = np.zeros((grid_n, grid_n), dtype=bool)
    for piece in pieces:
        pts = wrap_angle(np.asarray(piece))
        ii = ((pts[:, 0] + math.pi) // h).astype(int) % grid_n
        jj = ((pts[:, 1] + math.pi) // h).astype(int) % grid_n
        mask[ii, jj] = True
    for _ in range(dilate):
        grown = mask.copy()
        for shift in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            grown |= np.roll(np.roll(mask, shift[0], axis=0), shift[1], axis=1)
        mask = grown
    return mask


def _block_count_changes_near(p: DhParams, grid_n: int, blocked_r, blocked_u, mask) -> None:
    """Block edges inside `mask` whose endpoint IK counts differ.

    The multiplicity-free solution count is locally constant away from
    f^-1(f(S)), so a count change across an edge certifies a boundary
    crossing regardless of how the PS polylines were chained (chains that
    swap partners at crossings leave sub-cell gaps no polyline spans).
    """
    from .reduction import ik_counts

    h = TWO_PI / grid_n
    centers = -math.pi + h * (np.arange(grid_n) + 0.5)
    need = mask | np.roll(mask, -1, axis=0) | np.roll(mask, -1, axis=1)
    ii, jj = np.nonzero(need)
    x, y, z = fk_arrays(p, 0.0, centers[ii], centers[jj])
    counts = -np.ones((grid_n, grid_n), dtype=int)
    counts[ii, jj] = ik_counts(p, np.hypot(x, y), z)
    right = np.roll(counts, -1, axis=0)
    up = np.roll(counts, -1, axis=1)
    edge_r = mask | np.roll(mask, -1, axis=0)
    edge_u = mask | np.roll(mask, -1, axis=1)
    blocked_r |= edge_r & (counts >= 0) & (right >= 0) & (counts != right)
    blocked_u |= edge_u & (counts >= 0) & (up >= 0) & (counts != up)


def _curve_band(curves, grid_n: int, exclusion_radius: float):
    """Cells within roughly one exclusion radius of the traced curves."""
    h = TWO_PI / grid_n
    band = np.zeros((grid_n, grid_n), dtype=bool)
    for c in curves:
        ii = ((c.vertices[:, 0] + math.pi) // h).astype(int) % grid_n
        jj = ((c.vertices[:, 1] + math.pi) // h).astype(int) % grid_n
        band[ii, jj] = True
    for _ in range(int(math.ceil(exclusion_radius / h)) + 1):
        grown = band.copy()
        for shift in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            grown |= np.roll(np.roll(band, shift[0], axis=0), shift[1], axis=1)
        band = grown
    return band


def build_topology(p: DhParams, curves, grid_n: int = DEFAULT_GRID_N,
                   ps: PseudoSingularitySet | None = None,
                   boundary_tol: float | None = None) -> TopologyMaps:
    aspects = compute_aspects(p, curves, grid_n)
    if ps is None:
        ps = compute_pseudosingularities(p, curves)
    reduced = compute_reduced_aspects(p, curves, ps, grid_n)
    s_index = TorusCurveIndex([c.vertices for c in curves])
    ps_index = TorusCurveIndex([np.vstack([c, c[::-1]]) for c in ps.polylines])
    if boundary_tol is None:
        boundary_tol = TWO_PI / grid_n
    return TopologyMaps(aspects, reduced, ps, s_index, ps_index, boundary_tol)


def label_solutions(p: DhParams, maps: TopologyMaps, target: CrossSectionPoint):
    """Aspect and reduced-aspect labels for every IK solution of the target.

    Solutions inside the unresolved band around the critical curves carry
    reduced label -1 and are flagged on_boundary.
    """
    sols = solve_ik_cross_section(p, target)
    out = []
    for s in sols.solutions:
        pt = np.array([s.config.theta2, s.config.theta3])
        aspect = maps.aspects.label_of(pt[0], pt[1])
        reduced = maps.reduced.label_of(pt[0], pt[1])
        d_s = maps.s_index.dist(pt)
        d_ps = maps.ps_index.dist(pt)
        on_boundary = min(d_s, d_ps) < maps.boundary_tol or reduced < 0
        out.append(SolutionLabel(s.config, s.multiplicity, aspect, reduced,
                                 on_boundary, aspect < 0))
    return out


# --------------------------------------------------------------------------
# paths
# --------------------------------------------------------------------------

def find_nonsingular_path(p: DhParams, maps: TopologyMaps,
                          q_start: JointConfig, q_goal: JointConfig) -> JointPath | None:
    """A* on the aspect grid between two configurations, or None when they
    lie in different aspects.  theta1 is irrelevant to singularities and is
    carried only at the endpoints."""
    scale = singularity_scale(p)
    tol = PATH_DET_TOL * scale
    for q in (q_start, q_goal):
        if abs(float(det_jacobian(p, q.theta2, q.theta3))) <= tol:
            raise StartOrGoalSingularError("configuration is singular within tolerance")
    amap = maps.aspects
    n = amap.grid_n
    h = amap.cell_size
    start = amap.cell_of(q_start.theta2, q_start.theta3)
    goal = amap.cell_of(q_goal.theta2, q_goal.theta3)
    if amap.labels[start] != amap.labels[goal] or amap.labels[start] < 0:
        return None
    label = amap.labels[start]
    det_abs = np.abs(amap.det_center) / scale
    allowed = (amap.labels == label) & (np.abs(amap.det_center) > 3.0 * tol)
    allowed[start] = True
    allowed[goal] = True

    def heuristic(c):
        d2 = abs(wrap_angle((c[0] - goal[0]) * h))
        d3 = abs(wrap_angle((c[1] - goal[1]) * h))
        return math.hypot(d2, d3)

    dist = {start: 0.0}
    prev = {}
    pq = [(heuristic(start), start)]
    visited = set()
    while pq:
        _, cur = heapq.heappop(pq)
        if cur == goal:
            break
        if cur in visited:
            continue
        visited.add(cur)
        i, j = cur
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nb = ((i + di) % n, (j + dj) % n)
            if not allowed[nb]:
                continue
            cost = h * (1.0 + 0.05 / (float(det_abs[nb]) + 1e-3))
            nd = dist[cur] + cost
            if nd < dist.get(nb, math.inf):
                dist[nb] = nd
                prev[nb] = cur
                heapq.heappush(pq, (nd + heuristic(nb), nb))
    if goal not in dist:
        return None
    cells = [goal]
    while cells[-1] != start:
        cells.append(prev[cells[-1]])
    cells.reverse()
    pts = [np.array([q_start.theta2, q_start.theta3])]
    for c in cells[1:-1]:
        pts.append(np.array(amap.center(*c)))
    pts.append(np.array([q_goal.theta2, q_goal.theta3]))
    waypoints = np.array(pts)
    path = JointPath(waypoints, q_start.theta1, q_goal.theta1, 0.0)
    check = verify_path(p, path)
    return JointPath(waypoints, q_start.theta1, q_goal.theta1, check.min_det)


def verify_path(p: DhParams, path: JointPath, samples_per_segment: int = 10) -> PathCheck:
    """Dense |det J| audit along the path; valid iff min > 1e-4 scale."""
    scale = singularity_scale(p)
    w = path.waypoints
    min_det = math.inf
    if len(w) == 1:
        min_det = abs(float(det_jacobian(p, w[0, 0], w[0, 1])))
    for k in range(len(w) - 1):
        a, b = unwrap_segment(w[k], w[k + 1])
        ts = np.linspace(0.0, 1.0, max(samples_per_segment, 2))
        pts = a[None, :] + ts[:, None] * (b - a)[None, :]
        vals = np.abs(det_jacobian(p, pts[:, 0], pts[:, 1]))
        min_det = min(min_det, float(np.min(vals)))
    return PathCheck(min_det, min_det > PATH_DET_TOL * scale)


# --------------------------------------------------------------------------
# verdict
# --------------------------------------------------------------------------

def _sample_regular_points(p: DhParams, census, maps: TopologyMaps, samples: int):
    """Deterministic stratified sample of regular points with >= 2 IKS.

    Four-solution cells are taken first (same-aspect pairs can only occur
    where at least four solutions exist), then two-solution cells.
    """
    rc, zc = census.centers()
    counts = census.counts
    cand4 = [(i, j) for i in range(counts.shape[0]) for j in range(counts.shape[1])
             if counts[i, j] >= 4]
    cand2 = [(i, j) for i in range(counts.shape[0]) for j in range(counts.shape[1])
             if counts[i, j] == 2]
    ordered = []
    for cells, budget in ((cand4, samples), (cand2, samples)):
        if not cells:
            continue
        stride = max(1, len(cells) // budget)
        ordered.extend(cells[::stride])
    picked = []
    for (i, j) in ordered:
        if len(picked) >= samples:
            break
        target = CrossSectionPoint(float(rc[i]), float(zc[j]))
        labels = label_solutions(p, maps, target)
        if len(labels) < 2:
            continue
        if any(l.on_boundary or l.singular_cell or l.multiplicity != 1 for l in labels):
            continue
        picked.append((target, labels))
    return picked


def _sample_cusp_rings(p: DhParams, census, maps: TopologyMaps, cusps):
    """Clean sample points on small rings around each cusp.

    Same-aspect pairs concentrate near cusps; when the four-solution region
    is small, the stratified census sample can miss it entirely.
    """
    rc, zc = census.centers()
    if len(rc) < 2:
        return []
    cell = math.hypot(float(rc[1] - rc[0]), float(zc[1] - zc[0]))
    picked = []
    for c in cusps:
        for radius in (cell, 2 * cell, 4 * cell):
            for k in range(8):
                ang = TWO_PI * k / 8
                rho = c.rho + radius * math.cos(ang)
                z = c.z + radius * math.sin(ang)
                if rho <= 0:
                    continue
                target = CrossSectionPoint(rho, z)
                try:
                    labels = label_solutions(p, maps, target)
                except CuspidalError:
                    continue
                if len(labels) < 2:
                    continue
                if any(l.on_boundary or l.singular_cell or l.multiplicity != 1
                       for l in labels):
                    continue
                picked.append((target, labels))
    return picked


def _has_shared_aspect(labels) -> bool:
    seen = set()
    for l in labels:
        if l.aspect in seen:
            return True
        seen.add(l.aspect)
    return False


def is_cuspidal(p: DhParams, grid_n: int = DEFAULT_GRID_N, census_n: int = 128,
                samples: int = 200) -> CuspidalityReport:
    """Full cuspidality analysis with cross-validation.

    The verdict is cusp existence; the independent oracle looks for a
    sampled regular point whose IK solutions share an aspect.  Both results
    and their agreement are recorded.  Raises NonGenericRobotError when the
    genericity check fails.
    """
    validate_params(p)
    curves = trace_critical_points(p, grid_n)
    wcurves = critical_values(p, curves)
    cusps = find_cusps(p, wcurves)
    genericity = genericity_check(p, grid_n, curves=curves,
                                  workspace_curves=wcurves, cusps=cusps)
    if not genericity.is_generic:
        raise NonGenericRobotError(genericity)
    nodes = find_nodes(p, wcurves)
    census = region_census(p, grid_n, census_n=census_n,
                           curves=curves, workspace_curves=wcurves)
    maps = build_topology(p, curves, grid_n)
    picked = _sample_regular_points(p, census, maps, samples)
    picked.extend(_sample_cusp_rings(p, census, maps, cusps))

    witness = None
    theorem2 = []
    for target, labels in picked:
        if witness is None and _has_shared_aspect(labels):
            witness = (target.rho, target.z)
        seen = set()
        for l in labels:
            if l.reduced_aspect in seen:
                theorem2.append((target.rho, target.z, l.reduced_aspect))
            seen.add(l.reduced_aspect)

    anomalies = []
    if not curves:
        anomalies.append("empty critical set")
    if len(picked) < samples:
        anomalies.append(f"only {len(picked)} regular sample points available")
    if (bool(np.any(census.counts >= 4))
            and not any(len(labels) >= 4 for _, labels in picked)):
        # every four-solution region is thinner than the sampling can resolve
        # (all candidate points have boundary-flagged solutions), so the
        # same-aspect oracle cannot inspect the regions where pairs may live
        anomalies.append("four-solution regions unresolved at this resolution")

    cross = CrossValidation(len(picked), witness is not None, witness, tuple(theorem2))
    work = {
        "grid_cells": grid_n * grid_n,
        "census_cells": census_n * census_n,
        "curve_vertices": int(sum(len(c) for c in curves)),
        "pseudosingular_points": maps.ps.total_points(),
        "cross_validation_points": len(picked),
    }
    return CuspidalityReport(
        verdict=len(cusps) > 0,
        cusps=tuple(cusps),
        nodes=tuple(nodes),
        aspect_count=maps.aspects.count,
        reduced_aspect_count=maps.reduced.count,
        genericity=genericity,
        cross_validation=cross,
        census=census,
        conic_kind=conic_classify(p).kind,
        anomalies=tuple(anomalies),
        work=work,
    )
