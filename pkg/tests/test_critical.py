import math

import numpy as np
import pytest

from cuspidal import (
    CrossSectionPoint,
    DhParams,
    conic_coefficients,
    det_jacobian,
    genericity_check,
    quartic_from_conic,
    region_census,
    singularity_scale,
    solve_quartic,
    trace_critical_points,
    critical_values,
    find_cusps,
    find_nodes,
    wrap_angle,
)
from cuspidal.errors import DegenerateGeometryError
from cuspidal.geometry import polyline_min_dist, seg_intersect

from conftest import (
    NODE_ROBOT,
    NONGENERIC_CURVE,
    NONGENERIC_QUAD,
    NONORTHO_NONCUSPIDAL,
    REFERENCE,
    TEST_GRID,
    random_valid_params,
)


def _min_dist_to(wcurves, point):
    return polyline_min_dist(point, [w.vertices for w in wcurves])


# --------------------------------------------------------------------------
# tracing
# --------------------------------------------------------------------------

def test_traced_vertices_lie_on_zero_set(analysis):
    scale = singularity_scale(REFERENCE)
    h = 2 * math.pi / TEST_GRID
    for c in analysis.curves(REFERENCE):
        vals = det_jacobian(REFERENCE, c.vertices[:, 0], c.vertices[:, 1])
        assert float(np.max(np.abs(vals))) < 1e-6 * scale
        assert c.closed
        steps = np.abs(wrap_angle(np.roll(c.vertices, -1, axis=0) - c.vertices))
        assert float(np.max(np.hypot(steps[:, 0], steps[:, 1]))) < 3 * h


def test_reference_has_two_curves(analysis):
    assert len(analysis.curves(REFERENCE)) == 2


def test_trace_rejects_coarse_grid():
    with pytest.raises(ValueError):
        trace_critical_points(REFERENCE, 32)


def test_resolution_stability_hausdorff():
    """Marching plus refinement pins the curves well below one coarse cell."""
    coarse = trace_critical_points(REFERENCE, 128)
    fine = trace_critical_points(REFERENCE, 256)
    pts_c = np.vstack([c.vertices for c in coarse])
    pts_f = np.vstack([c.vertices for c in fine])

    def directed(a, b):
        worst = 0.0
        for pt in a:
            d = np.abs(wrap_angle(b - pt))
            worst = max(worst, float(np.min(np.hypot(d[:, 0], d[:, 1]))))
        return worst

    h = 2 * math.pi / 128
    assert directed(pts_c[::5], pts_f) < h
    assert directed(pts_f[::5], pts_c) < h


def test_workspace_vertices_nonnegative_rho(analysis):
    for wc in analysis.wcurves(NODE_ROBOT):
        assert float(np.min(wc.vertices[:, 0])) >= 0.0


def test_reference_curve_passes_single_tangency_value(analysis):
    assert _min_dist_to(analysis.wcurves(REFERENCE), (2.913, 0.1)) < 0.05


def test_node_robot_curve_hits_node_value_twice(analysis):
    """Two distinct curve parameters map near the node point."""
    target = (2.84, 3.79)
    hits = []
    for wc in analysis.wcurves(NODE_ROBOT):
        d = np.hypot(wc.vertices[:, 0] - target[0], wc.vertices[:, 1] - target[1])
        close = np.nonzero(d < 0.05)[0]
        if len(close) == 0:
            continue
        # group contiguous runs of indices (cyclic) into separate passes
        groups = 1
        for a, b in zip(close[:-1], close[1:]):
            if b - a > 5:
                groups += 1
        hits.append((wc.source_index, groups, len(close)))
    assert sum(g for _, g, _ in hits) >= 2


def test_image_consistency_every_vertex_multiple_root(analysis):
    for wc in analysis.wcurves(REFERENCE):
        for rho, z in wc.vertices[::7]:
            m = quartic_from_conic(conic_coefficients(REFERENCE, CrossSectionPoint(rho, z)))
            roots = solve_quartic(m)
            assert any(mult >= 2 for _, mult in roots.roots)


# --------------------------------------------------------------------------
# cusps
# --------------------------------------------------------------------------

def test_reference_has_four_cusps(analysis):
    cusps = analysis.cusps(REFERENCE)
    assert len(cusps) == 4
    best = min(math.hypot(c.rho - 2.48, c.z - 1.96) for c in cusps)
    assert best < 0.05


def test_cusp_residual_invariants(analysis):
    scale = singularity_scale(REFERENCE)
    for c in analysis.cusps(REFERENCE):
        assert max(c.res_m, c.res_m1, c.res_m2) < 1e-7 * scale
        assert c.abs_m3 > 1e-4 * scale


def test_noncuspidal_robot_has_no_cusps(analysis):
    assert analysis.cusps(NONORTHO_NONCUSPIDAL) == []


def test_node_robot_has_no_cusps(analysis):
    assert analysis.cusps(NODE_ROBOT) == []


def test_cusps_shift_with_d1(analysis):
    shifted = DhParams(0.7, REFERENCE.d2, REFERENCE.d3, REFERENCE.a1,
                       REFERENCE.a2, REFERENCE.a3, REFERENCE.alpha1, REFERENCE.alpha2)
    curves = trace_critical_points(shifted, TEST_GRID)
    cusps = find_cusps(shifted, critical_values(shifted, curves))
    base = analysis.cusps(REFERENCE)
    assert len(cusps) == len(base)
    for b in base:
        match = min(math.hypot(c.rho - b.rho, c.z - (b.z + 0.7)) for c in cusps)
        assert match < 1e-6


def test_cusps_on_critical_value_set(analysis):
    for c in analysis.cusps(REFERENCE):
        assert _min_dist_to(analysis.wcurves(REFERENCE), (c.rho, c.z)) < 0.02


def test_cusp_locations_stable_under_grid_doubling(analysis):
    scale = singularity_scale(REFERENCE)
    coarse = analysis.cusps(REFERENCE, 128)
    fine = analysis.cusps(REFERENCE, 256)
    assert len(coarse) == len(fine) == 4
    for c in coarse:
        d = min(math.hypot(c.rho - f.rho, c.z - f.z) for f in fine)
        assert d < 1e-3 * scale


def test_node_locations_stable_under_grid_doubling(analysis):
    scale = singularity_scale(NODE_ROBOT)
    coarse = analysis.nodes(NODE_ROBOT, 128)
    fine = analysis.nodes(NODE_ROBOT, 256)
    assert len(coarse) == len(fine) == 2
    for c in coarse:
        d = min(math.hypot(c.rho - f.rho, c.z - f.z) for f in fine)
        assert d < 1e-3 * scale


# --------------------------------------------------------------------------
# nodes
# --------------------------------------------------------------------------

def test_node_robot_node_location(analysis):
    nodes = analysis.nodes(NODE_ROBOT)
    best = min(math.hypot(n.rho - 2.84, n.z - 3.79) for n in nodes)
    assert best < 0.05
    for n in nodes:
        assert abs(wrap_angle(2 * math.atan(n.t1) - 2 * math.atan(n.t2))) > 1e-4


def test_node_count_matches_intersection_oracle(analysis):
    """Brute-force transversal-crossing sweep over the polylines is the
    reference count.

    Tangential self-contacts (mirror-symmetric branches touching on the
    symmetry axis with a shared double root) are not nodes; their apparent
    polyline crossing angle shrinks with resolution, so the oracle filters
    by transversality.
    """
    for robot in (REFERENCE, NODE_ROBOT):
        wcs = analysis.wcurves(robot)
        segs = []
        for wc in wcs:
            n = len(wc)
            for k in range(n):
                segs.append((wc.source_index, k, n, wc.vertices[k], wc.vertices[(k + 1) % n]))
        crossings = []
        for i in range(len(segs)):
            ci, ki, ni, a0, a1 = segs[i]
            for j in range(i + 1, len(segs)):
                cj, kj, nj, b0, b1 = segs[j]
                if ci == cj and min((ki - kj) % ni, (kj - ki) % ni) <= 1:
                    continue
                hit = seg_intersect(a0, a1, b0, b1)
                if hit is None:
                    continue
                va = a1 - a0
                vb = b1 - b0
                sin_ang = abs(va[0] * vb[1] - va[1] * vb[0]) / (
                    math.hypot(*va) * math.hypot(*vb))
                if sin_ang > 0.05:
                    crossings.append(hit[0])
        # dedupe raw crossings within the node dedup radius
        dedup = []
        radius = 1e-4 * singularity_scale(robot)
        for pt in sorted(crossings):
            if all(math.hypot(pt[0] - q[0], pt[1] - q[1]) > radius for q in dedup):
                dedup.append(pt)
        assert len(analysis.nodes(robot)) == len(dedup)


# --------------------------------------------------------------------------
# genericity
# --------------------------------------------------------------------------

def test_paper_robots_are_generic(analysis):
    for robot in (REFERENCE, NODE_ROBOT, NONORTHO_NONCUSPIDAL):
        rep = genericity_check(robot, TEST_GRID,
                               curves=analysis.curves(robot),
                               workspace_curves=analysis.wcurves(robot),
                               cusps=analysis.cusps(robot))
        assert rep.is_generic, rep.evidence


def test_degenerate_geometry_rejected_before_genericity():
    with pytest.raises(DegenerateGeometryError):
        genericity_check(DhParams(0, 1, 0, 1, 2, 0.0, -1.5, 1.5), TEST_GRID)


def test_quadruple_root_robot_flagged():
    rep = genericity_check(NONGENERIC_QUAD, TEST_GRID)
    assert not rep.is_generic
    kinds = [e["kind"] for e in rep.evidence]
    assert "quadruple_root" in kinds
    witness = next(e for e in rep.evidence if e["kind"] == "quadruple_root")
    assert witness["residual"] < 1e-8 * singularity_scale(NONGENERIC_QUAD)


def test_degenerate_curve_robot_flagged():
    rep = genericity_check(NONGENERIC_CURVE, TEST_GRID)
    assert not rep.is_generic
    kinds = [e["kind"] for e in rep.evidence]
    assert "curve_gradient" in kinds


# --------------------------------------------------------------------------
# census
# --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def ref_census(analysis):
    return region_census(REFERENCE, TEST_GRID, census_n=96,
                         curves=analysis.curves(REFERENCE),
                         workspace_curves=analysis.wcurves(REFERENCE))


@pytest.fixture(scope="module")
def node_census(analysis):
    return region_census(NODE_ROBOT, TEST_GRID, census_n=96,
                         curves=analysis.curves(NODE_ROBOT),
                         workspace_curves=analysis.wcurves(NODE_ROBOT))


def test_census_audit_passes(ref_census, node_census):
    for census in (ref_census, node_census):
        assert census.audited_pairs > 50
        assert census.audit_ok, census.violations[:3]


def test_census_boundary_samples_intermediate(ref_census, node_census):
    for census in (ref_census, node_census):
        assert census.boundary_samples
        for s in census.boundary_samples:
            assert s.count == s.low + 1 == s.high - 1


def test_node_robot_has_2_and_4_regions(node_census):
    present = set(node_census.counts.ravel().tolist())
    assert {0, 2, 4} <= present


def test_reference_four_region_touches_cusps(ref_census, analysis):
    rc, zc = ref_census.centers()
    rg, zg = np.meshgrid(rc, zc, indexing="ij")
    four = np.column_stack([rg[ref_census.counts == 4], zg[ref_census.counts == 4]])
    assert len(four)
    cell = math.hypot(rc[1] - rc[0], zc[1] - zc[0])
    for c in analysis.cusps(REFERENCE):
        d = np.min(np.hypot(four[:, 0] - c.rho, four[:, 1] - c.z))
        assert d < 4 * cell


def test_counts_outside_reach_are_zero(ref_census):
    assert ref_census.counts[0, 0] == 0
    assert ref_census.counts[-1, -1] == 0
    assert ref_census.counts[0, -1] == 0
