import numpy as np
import pytest
from scipy.ndimage import maximum_filter

from voldeid.errors import DegenerateInput, InvalidCount, TooFewPoints
from voldeid.hull import (
    TriMesh,
    brute_force_hull,
    convex_hull,
    hull_2d,
    voxelize_hull,
)
from voldeid.volume import rng_from

TETRA = np.array([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)])


def vertex_set(mesh: TriMesh) -> np.ndarray:
    v = np.rint(mesh.vertices).astype(np.int64)
    return np.unique(v, axis=0)


def ball_points(rng, n, center=15, radius=10):
    pts = []
    while len(pts) < n:
        p = rng.integers(center - radius, center + radius + 1, 3)
        if ((p - center) ** 2).sum() <= radius * radius:
            pts.append(p)
    return np.array(pts)


def sphere_shell_points(rng, n_dirs, center, radius):
    """Unique lattice points: sphere samples rounded, kept if inside the ball."""
    u = rng.normal(size=(n_dirs, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    p = np.rint(center + radius * u).astype(np.int64)
    keep = ((p - center) ** 2).sum(axis=1) <= radius * radius + 1e-9
    return np.unique(p[keep], axis=0)


# ---------------------------------------------------------------- convex hull


def test_tetrahedron_hull():
    mesh = convex_hull(TETRA)
    assert mesh.num_vertices == 4
    assert mesh.num_triangles == 4
    assert np.array_equal(vertex_set(mesh), np.unique(TETRA, axis=0))


def test_cube_with_interior_points():
    s = 32
    corners = np.array([(i, j, k) for i in (0, s - 1) for j in (0, s - 1)
                        for k in (0, s - 1)])
    rng = np.random.default_rng(17)
    interior = rng.integers(1, s - 1, (50, 3))
    pts = np.vstack([corners, interior])
    mesh = convex_hull(pts)
    assert np.array_equal(vertex_set(mesh), np.unique(corners, axis=0))
    assert np.array_equal(brute_force_hull(pts), np.unique(corners, axis=0))


def test_coplanar_raises():
    rng = np.random.default_rng(2)
    flat = np.column_stack([rng.integers(0, 50, 100), rng.integers(0, 50, 100),
                            np.full(100, 5)])
    with pytest.raises(DegenerateInput):
        convex_hull(flat)


def test_collinear_raises():
    line = np.array([(i, 2 * i, 3 * i) for i in range(10)])
    with pytest.raises(DegenerateInput):
        convex_hull(line)


def test_too_few_points():
    with pytest.raises(TooFewPoints):
        convex_hull(TETRA[:3])
    dup = np.array([(0, 0, 0), (0, 0, 0), (1, 1, 1), (1, 1, 1)])
    with pytest.raises(TooFewPoints):
        convex_hull(dup)


def test_point_validation():
    with pytest.raises(ValueError):
        convex_hull(np.array([(0.5, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]))
    mesh = convex_hull(TETRA.astype(np.float64))
    assert mesh.num_vertices == 4
    with pytest.raises(ValueError):
        convex_hull(np.full((4, 3), 10**7))


def test_swallowed_boundary_points_dropped():
    # edge midpoints, face centers, and the body center all lie on the hull
    # boundary or inside; none may survive as vertices
    c = 8
    corners = np.array([(i, j, k) for i in (0, c) for j in (0, c) for k in (0, c)])
    extras = np.array([
        (4, 0, 0), (0, 4, 0), (0, 0, 4), (c, 4, c), (4, c, c),
        (4, 4, 0), (4, 0, 4), (0, 4, 4), (4, 4, c),
        (4, 4, 4),
    ])
    pts = np.vstack([extras, corners])
    mesh = convex_hull(pts)
    assert np.array_equal(vertex_set(mesh), np.unique(corners, axis=0))


def test_full_lattice_cube():
    g = np.arange(5)
    pts = np.array(np.meshgrid(g, g, g, indexing="ij")).reshape(3, -1).T
    mesh = convex_hull(pts)
    corners = np.array([(i, j, k) for i in (0, 4) for j in (0, 4) for k in (0, 4)])
    assert np.array_equal(vertex_set(mesh), np.unique(corners, axis=0))


def test_permutation_invariance():
    rng = np.random.default_rng(8)
    pts = ball_points(rng, 40)
    base = vertex_set(convex_hull(pts))
    for _ in range(5):
        shuffled = pts[rng.permutation(len(pts))]
        assert np.array_equal(vertex_set(convex_hull(shuffled)), base)


def test_large_cloud_restarts_schedule():
    rng = np.random.default_rng(5)
    pts = sphere_shell_points(rng, 800, 31.5, 20.0)
    mesh = convex_hull(pts)
    assert mesh.num_vertices > 16  # needs at least one doubling restart
    mask = voxelize_hull(mesh, 64, None).data
    assert mask[tuple(pts.T)].all()


# ---------------------------------------------------------------- brute force


def test_brute_force_tetrahedron():
    assert np.array_equal(brute_force_hull(TETRA), np.unique(TETRA, axis=0))


def test_brute_force_cube_centroid():
    s = 10
    corners = np.array([(i, j, k) for i in (0, s) for j in (0, s) for k in (0, s)])
    pts = np.vstack([corners, [[5, 5, 5]]])
    assert np.array_equal(brute_force_hull(pts), np.unique(corners, axis=0))


def test_brute_force_caps_input():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        brute_force_hull(ball_points(rng, 61))
    with pytest.raises(TooFewPoints):
        brute_force_hull(TETRA[:2])


def test_oracle_cross_check_100_trials():
    for trial in range(100):
        rng = np.random.default_rng(1000 + trial)
        pts = ball_points(rng, 30)
        want = brute_force_hull(pts)
        got = vertex_set(convex_hull(pts))
        assert np.array_equal(got, want), f"trial {trial}"


# ------------------------------------------------------------------- trimesh


def test_trimesh_validation():
    mesh = convex_hull(TETRA * 4)
    with pytest.raises(ValueError):
        TriMesh(vertices=mesh.vertices, triangles=np.array(
            [[0, 1, 7], [0, 2, 1], [0, 3, 2], [1, 2, 3]]))
    with pytest.raises(DegenerateInput):
        TriMesh(vertices=mesh.vertices, triangles=np.array(
            [[0, 0, 1], [0, 2, 1], [0, 3, 2], [1, 2, 3]]))
    flipped = mesh.triangles.copy()
    flipped[0] = flipped[0, ::-1]
    with pytest.raises(ValueError):
        TriMesh(vertices=mesh.vertices, triangles=flipped)
    bulged = mesh.vertices.copy()
    bulged = np.vstack([bulged, [[10.0, 10.0, 10.0]]])
    with pytest.raises(ValueError):
        TriMesh(vertices=bulged, triangles=mesh.triangles)


def test_trimesh_immutable():
    mesh = convex_hull(TETRA)
    with pytest.raises(ValueError):
        mesh.vertices[0, 0] = 5.0


# ----------------------------------------------------------------- voxelize


def test_voxelize_full_domain_cube():
    s = 16
    corners = np.array([(i, j, k) for i in (0, s - 1) for j in (0, s - 1)
                        for k in (0, s - 1)])
    mesh = convex_hull(corners)
    out = voxelize_hull(mesh, s, None)
    assert out.data.all()


def test_voxelize_single_plane_matches_direct_eval():
    pts = np.array([(1, 1, 1), (12, 2, 1), (2, 13, 1), (3, 3, 14)])
    mesh = convex_hull(pts)
    s, seed = 16, 9
    got = voxelize_hull(mesh, s, 1, seed=seed).data

    chosen = int(rng_from(seed).permutation(mesh.num_triangles)[0])
    a, b, c = mesh.vertices[mesh.triangles[chosen]]
    n = np.cross(b - a, c - a)
    n /= np.linalg.norm(n)
    if n @ (a - mesh.centroid) < 0:
        n = -n
    grid = np.array(np.meshgrid(*[np.arange(s)] * 3, indexing="ij"),
                    dtype=np.float64).reshape(3, -1).T
    keep = (grid @ n - n @ a) <= 1e-6 * s
    assert np.array_equal(got, keep.reshape(s, s, s).astype(np.float32))


def test_voxelize_invalid_count():
    mesh = convex_hull(TETRA)
    with pytest.raises(InvalidCount):
        voxelize_hull(mesh, 8, 0)
    with pytest.raises(InvalidCount):
        voxelize_hull(mesh, 8, -2)


def test_voxelize_mesh_must_fit():
    mesh = convex_hull(TETRA * 10)
    with pytest.raises(ValueError):
        voxelize_hull(mesh, 8, None)


def test_voxelize_monotone_in_triangle_count():
    rng = np.random.default_rng(23)
    mesh = convex_hull(ball_points(rng, 40))
    prev = voxelize_hull(mesh, 32, 1, seed=4).data
    for k in (3, 8, 20, None):
        cur = voxelize_hull(mesh, 32, k, seed=4).data
        assert not np.any(cur > prev)  # growing the prefix only removes voxels
        prev = cur


def test_voxelize_contains_input_points():
    rng = np.random.default_rng(31)
    pts = ball_points(rng, 60)
    mask = voxelize_hull(convex_hull(pts), 32, None).data
    assert mask[tuple(pts.T)].all()


def test_sphere_hull_volume():
    # surface points of a digitized centered ball: its 26-connected boundary
    rng = np.random.default_rng(77)
    s, r = 64, 12.0
    c = (s - 1) / 2.0
    ax = np.arange(s) - c
    d2 = ax[:, None, None] ** 2 + ax[None, :, None] ** 2 + ax[None, None, :] ** 2
    ball = d2 <= r * r
    from scipy.ndimage import binary_erosion
    shell = ball & ~binary_erosion(ball, structure=np.ones((3, 3, 3), bool))
    pts = np.argwhere(shell)
    assert len(pts) >= 2000
    mesh = convex_hull(pts)
    mask = voxelize_hull(mesh, 64, None).data
    count = mask.sum()
    target = 4.0 / 3.0 * np.pi * r**3
    assert abs(count - target) <= 0.05 * target

    # convexity up to discretization: midpoints of set-voxel pairs stay
    # within one voxel of the set
    dil = maximum_filter(mask, size=3)
    vox = np.argwhere(mask)
    ii = rng.integers(0, len(vox), 10_000)
    jj = rng.integers(0, len(vox), 10_000)
    mid = np.rint((vox[ii] + vox[jj]) / 2.0).astype(np.int64)
    assert dil[tuple(mid.T)].all()


# ------------------------------------------------------------------- hull 2d


def test_hull_2d_square():
    pts = np.array([(0, 0), (4, 0), (0, 4), (4, 4), (2, 0), (2, 2), (0, 2)])
    corners = hull_2d(pts)
    assert sorted(map(tuple, corners)) == [(0, 0), (0, 4), (4, 0), (4, 4)]
    # CCW cycle check via the shoelace sign
    x, y = corners[:, 0], corners[:, 1]
    area2 = np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    assert area2 > 0


def test_hull_2d_degenerate():
    assert len(hull_2d(np.array([(1, 1), (3, 3), (2, 2)]))) == 2
    assert len(hull_2d(np.array([(5, 5)]))) == 1
