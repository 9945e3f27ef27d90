import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meshftle.mesh import Mesh, generate_grid_2d, generate_grid_3d
from meshftle.preprocess import (
    FaceIndex,
    build_face_index,
    build_faces_per_point,
    build_faces_per_point_scan,
    count_faces_per_point,
    incident_faces,
)
from oracles import naive_face_index, random_mesh_arrays


@pytest.fixture
def unit_square():
    coords = [[0, 0], [1, 0], [0, 1], [1, 1]]
    return Mesh(2, coords, [[0, 1, 2], [1, 3, 2]])


def test_counts_unit_square(unit_square):
    assert count_faces_per_point(unit_square).tolist() == [1, 3, 5, 6]
    assert naive_face_index(4, [[0, 1, 2], [1, 3, 2]])[0] == [1, 3, 5, 6]


def test_counts_single_triangle():
    m = Mesh(2, [[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    assert count_faces_per_point(m).tolist() == [1, 2, 3]


def test_counts_3x3_grid():
    m = generate_grid_2d(3, 3)
    offsets = count_faces_per_point(m)
    expect, _ = naive_face_index(9, m.simplices.tolist())
    assert offsets.tolist() == expect
    assert offsets[-1] == 24


def test_face_ids_unit_square(unit_square):
    idx = build_face_index(unit_square)
    assert idx.face_ids.tolist() == [0, 0, 1, 0, 1, 1]


def test_face_ids_single_triangle():
    m = Mesh(2, [[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    assert build_face_index(m).face_ids.tolist() == [0, 0, 0]


@pytest.mark.parametrize("build", [build_faces_per_point, build_faces_per_point_scan])
def test_range_build_writes_only_its_segments(unit_square, build):
    offsets = count_faces_per_point(unit_square)
    out = np.full(6, -1)
    seg = build(unit_square, offsets, (2, 4), out=out)
    full = build_face_index(unit_square).face_ids
    assert seg.tolist() == full[3:6].tolist()
    assert out.tolist() == [-1, -1, -1, 0, 1, 1]


def test_incident_faces(unit_square):
    idx = build_face_index(unit_square)
    assert incident_faces(idx, 0) == (0, 1)
    assert incident_faces(idx, 1) == (1, 2)
    assert incident_faces(idx, 3) == (5, 1)
    with pytest.raises(IndexError):
        incident_faces(idx, 4)


def test_bad_range(unit_square):
    offsets = count_faces_per_point(unit_square)
    with pytest.raises(ValueError):
        build_faces_per_point(unit_square, offsets, (3, 5))
    with pytest.raises(ValueError):
        build_faces_per_point(unit_square, offsets, (3, 2))


@pytest.mark.parametrize("seed", range(20))
def test_oracle_equivalence_random(seed):
    rng = np.random.default_rng(seed)
    dim = 2 + seed % 2
    coords, faces = random_mesh_arrays(rng, dim)
    m = Mesh(dim, coords, faces)
    idx = build_face_index(m)
    offsets, face_ids = naive_face_index(len(coords), faces.tolist())
    assert idx.offsets.tolist() == offsets
    assert idx.face_ids.tolist() == face_ids
    scan = build_faces_per_point_scan(m, idx.offsets, (0, m.n_points))
    assert scan.tolist() == face_ids


@given(seed=st.integers(0, 2**32 - 1), cuts=st.lists(st.floats(0, 1), max_size=6))
@settings(max_examples=60, deadline=None)
def test_disjoint_cover_composes(seed, cuts):
    rng = np.random.default_rng(seed)
    coords, faces = random_mesh_arrays(rng, 2)
    m = Mesh(2, coords, faces)
    n = m.n_points
    bounds = sorted({0, n, *(int(c * n) for c in cuts)})
    offsets = count_faces_per_point(m)
    out = np.full(m.faces.size, -1)
    for b, e in zip(bounds[:-1], bounds[1:]):
        build_faces_per_point(m, offsets, (b, e), out=out)
    assert np.array_equal(out, build_face_index(m).face_ids)


@pytest.mark.parametrize("mesh", [generate_grid_2d(6, 5), generate_grid_3d(4, 3, 3)], ids=["2d", "3d"])
def test_index_invariants(mesh):
    idx = build_face_index(mesh)
    assert np.all(np.diff(idx.offsets) >= 0)
    assert idx.offsets[-1] == mesh.n_faces * mesh.verts_per_face
    seen = []
    for p in range(mesh.n_points):
        fids = idx.faces_of(p)
        assert np.all(np.diff(fids) > 0)
        for f in fids:
            assert p in mesh.simplices[f]
            seen.append((int(f), p))
    assert len(seen) == len(set(seen)) == mesh.faces.size


def test_face_index_equality():
    m = generate_grid_2d(3, 3)
    assert build_face_index(m) == FaceIndex(*naive_face_index_arrays(m))


def naive_face_index_arrays(m):
    offsets, ids = naive_face_index(m.n_points, m.simplices.tolist())
    return np.array(offsets), np.array(ids)
