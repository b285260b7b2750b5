import math

import numpy as np
import pytest
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, cKDTree

from polypack.inversive import ACC_TO_LORENTZ, circle_to_cap
from polypack.packing import enumerate_orbit, reflection_matrices
from polypack.rootsys import random_reduced_word, replay
from polypack.titscone import (
    Kind,
    ProjectivePoint,
    Verdict,
    alternating_dots,
    apply_coreflection_chart,
    edge_tangency_report,
    export_cone_mesh,
    fundamental_polyhedron,
    membership,
    mirror_plane,
    project_rp3,
    tangent_cone,
    verify_inversion_action,
    weight_cloud,
    z_partial,
    z_tail_bound,
)


def chart_line_distance(a, b):
    d = b - a
    return float(np.linalg.norm(np.cross(a, d)) / np.linalg.norm(d))


def test_z_depth_zero(packings):
    cfg, rs = packings("octahedron")
    s = np.full(rs.m, 0.3)
    assert z_partial(rs, cfg.curvatures, s, 0).value == pytest.approx(math.exp(-cfg.curvatures @ s))


def test_z_counts_terms(packings):
    cfg, rs = packings("tetrahedron")
    r = z_partial(rs, cfg.curvatures, np.ones(rs.m), 5)
    assert r.terms == 1 + sum(4 * 3 ** (k - 1) for k in range(1, 6))
    assert r.level_sums.shape == (6, 1)


def test_z_thread_independent(packings):
    cfg, rs = packings("cube")
    s = np.column_stack([np.ones(rs.m), np.full(rs.m, 0.2)])
    a = z_partial(rs, cfg.curvatures, s, 6, threads=1, frontier=500)
    b = z_partial(rs, cfg.curvatures, s, 6, threads=4, frontier=500)
    np.testing.assert_array_equal(a.values, b.values)
    c = z_partial(rs, cfg.curvatures, s, 6)
    np.testing.assert_allclose(a.values, c.values, rtol=1e-12)


@pytest.mark.parametrize("name", ["tetrahedron", "octahedron"])
def test_z_truncated_symmetry(packings, name):
    cfg, rs = packings(name)
    s = np.full(rs.m, 0.05)
    k = 4
    for j in range(rs.n):
        s2 = rs.coreflections[j] @ s
        # words of length k - 1 at s2 are words of length <= k at s, and back
        assert z_partial(rs, cfg.curvatures, s2, k - 1).value <= z_partial(rs, cfg.curvatures, s, k).value * (1 + 1e-12)
        assert z_partial(rs, cfg.curvatures, s, k - 1).value <= z_partial(rs, cfg.curvatures, s2, k).value * (1 + 1e-12)


@pytest.mark.parametrize("name", ["tetrahedron", "cube"])
def test_z_tail_bound(packings, name):
    cfg, rs = packings(name)
    s = np.full(rs.m, 0.4)
    values = [z_partial(rs, cfg.curvatures, s, d).value for d in range(8)]
    for d in range(7):
        assert values[d + 1] - values[d] <= z_tail_bound(rs, cfg.curvatures, s, d) * (1 + 1e-12)
    assert z_tail_bound(rs, cfg.curvatures, s, 10) < z_tail_bound(rs, cfg.curvatures, s, 5)


def test_tail_bound_rejects_outside_domain(packings):
    cfg, rs = packings("octahedron")
    with pytest.raises(ValueError):
        z_tail_bound(rs, cfg.curvatures, -np.ones(rs.m), 3)


def test_z_saturates(packings):
    cfg, rs = packings("octahedron")
    r = z_partial(rs, cfg.curvatures, -np.ones(rs.m), 4)
    assert r.saturated[0] and r.value == math.inf


@pytest.mark.parametrize("name", ["octahedron", "cube", "icosahedron"])
def test_membership_examples(packings, name):
    _, rs = packings(name)
    v = membership(rs, np.ones(rs.m))
    assert v.verdict is Verdict.CONVERGES and v.word == ()
    v = membership(rs, -np.ones(rs.m))
    assert v.verdict is Verdict.DIVERGES and v.iterations == 0
    for i in range(rs.m):
        assert membership(rs, np.eye(rs.m)[i]).verdict is Verdict.DIVERGES


def test_membership_invariance_and_witness(packings, rng):
    cfg, rs = packings("octahedron")
    seen = set()
    for _ in range(200):
        s = rng.normal(size=rs.m) + 0.3
        v = membership(rs, s)
        if v.verdict is Verdict.UNDETERMINED:
            continue
        seen.add(v.verdict)
        for j in range(rs.n):
            assert membership(rs, rs.coreflections[j] @ s).verdict is v.verdict
        if v.verdict is Verdict.DIVERGES:
            dots = alternating_dots(rs, cfg.curvatures, v.final_weight, v.witness, steps=20)
            assert np.all(np.diff(dots) <= 1e-9 * np.abs(dots).max())
    assert seen == {Verdict.CONVERGES, Verdict.DIVERGES}


def test_membership_undetermined_budget(packings):
    _, rs = packings("octahedron")
    s = rs.coreflections[0] @ rs.coreflections[1] @ rs.coreflections[2] @ np.ones(rs.m)
    v = membership(rs, s, max_iter=1)
    assert v.verdict is Verdict.UNDETERMINED
    with pytest.raises(ValueError):
        membership(rs, s, max_iter=0)


def test_convexity_probe(packings, rng):
    _, rs = packings("cube")
    conv = []
    for _ in range(400):
        s = rng.normal(size=rs.m) + 0.5
        if membership(rs, s).verdict is Verdict.CONVERGES:
            conv.append(s)
    assert len(conv) >= 20
    for a, b in zip(conv[::2], conv[1::2]):
        assert membership(rs, 0.5 * (a + b)).verdict is Verdict.CONVERGES


def test_fundamental_weights_octahedron(packings):
    _, rs = packings("octahedron")
    pts = [project_rp3(rs, np.eye(6)[i]) for i in range(6)]
    assert all(p.kind is Kind.SPACELIKE for p in pts)
    V = fundamental_polyhedron(rs)
    # regular octahedron: all adjacent vertex pairs at one distance, opposite pairs at another
    dist = {(i, j): np.linalg.norm(V[i] - V[j]) for i in range(6) for j in range(i + 1, 6)}
    adj = [dist[e] for e in rs.graph.edges]
    assert np.ptp(adj) < 1e-9
    for i, j in rs.graph.edges:
        assert chart_line_distance(V[i], V[j]) == pytest.approx(1.0, abs=1e-9)
        mid = project_rp3(rs, np.eye(6)[i] + np.eye(6)[j])
        assert mid.kind is Kind.LIGHTLIKE


@pytest.mark.parametrize("name", ["octahedron", "cube", "icosahedron"])
def test_initial_domain_has_polyhedron_faces(packings, name):
    _, rs = packings(name)
    V = np.array([project_rp3(rs, np.eye(rs.m)[i]).homogeneous for i in range(rs.m)])
    # the cone over the weights may cross t = 0, so use an affine chart in which it is bounded
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    lp = linprog(np.zeros(4), A_ub=-V, b_ub=-np.ones(len(V)), bounds=[(None, None)] * 4)
    assert lp.success
    f = lp.x
    basis = np.linalg.svd(f[None, :])[2][1:]
    pts = (V / (V @ f)[:, None]) @ basis.T
    hull = ConvexHull(pts)
    groups = {}
    for simplex, eq in zip(hull.simplices, hull.equations):
        key = tuple(np.round(eq, 8))
        groups.setdefault(key, set()).update(simplex.tolist())
    assert {frozenset(g) for g in groups.values()} == {frozenset(f) for f in rs.graph.faces}
    chart = fundamental_polyhedron(rs)
    for i, j in rs.graph.edges:
        assert chart_line_distance(chart[i], chart[j]) == pytest.approx(1.0, abs=1e-8)


def test_tuples_are_lightlike_via_duality(packings):
    cfg, rs = packings("cube")
    for nd in enumerate_orbit(cfg, 2):
        p = project_rp3(rs, rs.G_tilde @ nd.curvatures)
        assert p.kind is Kind.LIGHTLIKE


def test_kernel_weight_has_no_image(packings):
    _, rs = packings("octahedron")
    with pytest.raises(ValueError):
        project_rp3(rs, rs.kernel_basis[:, 0])


def test_tangent_cone_examples():
    tc = tangent_cone(np.array([0.0, 0.0, math.sqrt(2)]))
    np.testing.assert_allclose(tc.base_center, (0, 0, 1 / math.sqrt(2)), atol=1e-15)
    assert tc.base_radius == pytest.approx(1 / math.sqrt(2))
    far = tangent_cone(np.array([1e7, 0.0, 0.0]))
    assert far.base_radius == pytest.approx(1.0, abs=1e-12)
    inf = tangent_cone(ProjectivePoint(np.array([1.0, 0.0, 0.0, 0.0])))
    assert inf.apex is None and inf.base_radius == pytest.approx(1.0)
    with pytest.raises(ValueError):
        tangent_cone(np.array([0.1, 0.2, 0.3]))


def test_cloud_bases_are_packing_circles(packings):
    cfg, rs = packings("octahedron")
    cloud = weight_cloud(rs, 2, dedup=False)
    assert len(weight_cloud(rs, 0)) == rs.m
    nodes = {nd.word: nd for nd in enumerate_orbit(cfg, 2)}
    for cp in cloud:
        assert cp.point.kind is Kind.SPACELIKE
        tc = tangent_cone(cp.point)
        n, k = circle_to_cap(nodes[cp.word].circles[:, cp.vertex])
        np.testing.assert_allclose(tc.base_normal, n, atol=1e-9)
        assert tc.base_offset == pytest.approx(k, abs=1e-9)


def test_cone_equivariance(packings):
    _, rs = packings("cube")
    s = np.eye(rs.m)[3]
    for j in range(rs.n):
        image = tangent_cone(project_rp3(rs, rs.coreflections[j] @ s))
        # inverting the base circle of the original cone in mirror j
        base = tangent_cone(project_rp3(rs, s))
        t = np.linspace(0, 2 * np.pi, 9)[:-1]
        e1 = np.cross(base.base_normal, [1.0, 0.3, 0.1])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(base.base_normal, e1)
        ring = base.base_center + base.base_radius * (np.outer(np.cos(t), e1) + np.outer(np.sin(t), e2))
        moved = apply_coreflection_chart(rs, j, ring)
        np.testing.assert_allclose(moved @ image.base_normal, image.base_offset, atol=1e-9)


@pytest.mark.parametrize("name", ["octahedron", "cube", "triangular_prism"])
def test_inversion_action(packings, name):
    _, rs = packings(name)
    for j in range(rs.n):
        rep = verify_inversion_action(rs, j, samples=1000, seed=j)
        assert rep.max_error < 1e-8
        assert rep.cap_swap_failures == 0
        # points of the mirror circle stay put
        n, k = mirror_plane(rs, j)
        e1 = np.cross(n, [0.3, 1.0, 0.2])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        t = np.linspace(0, 2 * np.pi, 7)
        r = math.sqrt(1 - k * k)
        pts = k * n + r * (np.outer(np.cos(t), e1) + np.outer(np.sin(t), e2))
        np.testing.assert_allclose(apply_coreflection_chart(rs, j, pts), pts, atol=1e-9)


def test_edge_forms(packings):
    _, rs = packings("cube")
    for e in edge_tangency_report(rs):
        if e.adjacent:
            assert abs(e.discriminant) < 1e-9
        else:
            assert e.discriminant < 0


def test_cone_mesh_depth_zero(packings):
    cfg, rs = packings("octahedron")
    mesh = export_cone_mesh(rs, 0)
    assert len(mesh["cones"]) == 6
    assert mesh["polyhedron"]["faces"] == [list(f) for f in cfg.graph.faces]
    for cone in mesh["cones"]:
        n, k = circle_to_cap(cfg.C[:, cone["vertex"]])
        assert np.linalg.norm(cone["base_center"]) == pytest.approx(k, abs=1e-12)
        np.testing.assert_allclose(cone["base_center"], k * n, atol=1e-12)
    with pytest.raises(ValueError):
        export_cone_mesh(rs, -1)


def test_cloud_approaches_residual_set(packings, rng):
    cfg, rs = packings("tetrahedron")
    R = reflection_matrices(cfg)
    samples = []
    for _ in range(200):
        T = np.eye(4)
        for j in random_reduced_word(cfg.n, 9, rng):
            T = T @ R[j]
        X = T @ cfg.C
        v = ACC_TO_LORENTZ @ (X[:, 0] + X[:, 1])  # tangency point of two adjacent circles
        samples.append(v[:3] / v[3])
    samples = np.array(samples)
    assert np.allclose(np.linalg.norm(samples, axis=1), 1.0, atol=1e-6)

    def eps(depth):
        pts = np.array([cp.point.chart for cp in weight_cloud(rs, depth) if not cp.point.at_infinity])
        return float(cKDTree(pts).query(samples)[0].max())

    e4, e6 = eps(4), eps(6)
    assert e6 < e4
