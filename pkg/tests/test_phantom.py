"""Tests for synthetic phantom generation."""

import numpy as np
import pytest

from voldeid.errors import InvalidPhantomParams
from voldeid.evaluate import match_distance, render_face
from voldeid.hull import convex_hull
from voldeid.phantom import PhantomParams, generate_phantom, generate_pool
from voldeid.surface import SurfaceParams, sample_surface_points, surface_representation
from voldeid.volume import binarize, otsu_threshold

_FACE_COS = np.cos(np.deg2rad(50.0))


def test_same_seed_bit_identical():
    a = generate_phantom(42)
    b = generate_phantom(42)
    assert np.array_equal(a.scan.data, b.scan.data)
    assert np.array_equal(a.brain.data, b.brain.data)
    assert a.identity == b.identity


def test_brain_inside_binarized_head():
    p = generate_phantom(3)
    delta = otsu_threshold(p.scan)
    head = binarize(p.scan, delta)
    assert not np.any((p.brain.data > 0) & (head.data == 0))


def test_distinct_identities_render_apart():
    a = render_face(generate_phantom(10).scan)
    b = render_face(generate_phantom(11).scan)
    assert match_distance(a, b) > 0.005


def test_out_of_bounds_params_rejected():
    with pytest.raises(InvalidPhantomParams):
        PhantomParams(semi_axes=(0.15, 0.30, 0.27))
    with pytest.raises(InvalidPhantomParams):
        PhantomParams(semi_axes=(0.29, 0.40, 0.27))
    with pytest.raises(InvalidPhantomParams):
        PhantomParams(nose_size_range=(0.02, 0.09))
    with pytest.raises(InvalidPhantomParams):
        PhantomParams(jaw_width_range=(0.1, 0.8))
    with pytest.raises(InvalidPhantomParams):
        PhantomParams(side=8)


def test_pool_ids_and_distinct_identities():
    pool = generate_pool(8, seed=2)
    assert [p.subject_id for p in pool] == list(range(8))
    assert len({p.identity.nose_size for p in pool}) == 8
    again = generate_pool(8, seed=2)
    assert np.array_equal(pool[3].scan.data, again[3].scan.data)


def test_head_carve_stays_behind_rim_plane():
    # the face carve bounds every head voxel's anterior extent; the ring
    # outside the carve window still reaches the full ellipsoid
    for seed in range(6):
        p = generate_phantom(seed)
        a = p.identity.semi_axes
        side = p.scan.side
        c = (side - 1) / 2.0
        idx = np.argwhere(p.scan.data >= 0.25)
        u1 = (idx[:, 1] - c) / a[1]
        assert u1.max() <= 0.66
        assert u1.max() >= 0.57


def test_hull_vertices_avoid_the_face():
    # identity relief must never supply hull vertices: any vertex inside the
    # carve window has to come from the rim region, not the face surface
    p = generate_phantom(9)
    z = surface_representation(p.scan, SurfaceParams(num_rotations=16, delta=0.25,
                                                     seed=4))
    pts = sample_surface_points(z, seed=4, cap=10000)
    mesh = convex_hull(pts)
    a = np.array(p.identity.semi_axes)
    c = (p.scan.side - 1) / 2.0
    u = (mesh.vertices - c) / a
    rho = np.linalg.norm(u, axis=1)
    in_window = u[:, 1] > _FACE_COS * rho
    assert np.any(in_window)  # rim vertices exist
    assert u[in_window, 1].min() >= 0.58


def test_vary_head_size_mode():
    pool = generate_pool(6, PhantomParams(vary_head_size=True), seed=4)
    sizes = {p.identity.semi_axes for p in pool}
    assert len(sizes) == 6
    fixed = generate_pool(6, seed=4)
    assert len({p.identity.semi_axes for p in fixed}) == 1
