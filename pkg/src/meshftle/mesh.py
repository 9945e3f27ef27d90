"""Simplex meshes, flowmaps, structured-grid generators and the text file formats.

Coordinates file::

    <n_points> <dim>
    x y [z]            # n_points lines
    ...

Faces file::

    <n_faces> <verts_per_face>
    i j k [l]          # zero-based point indices
    ...

A flowmap file has the same layout as a coordinates file.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidDimensionError, LengthMismatchError, MeshFormatError

__all__ = [
    "Mesh",
    "Flowmap",
    "grid_counts",
    "generate_grid_2d",
    "generate_grid_3d",
    "read_mesh",
    "write_mesh",
    "read_flowmap",
    "write_flowmap",
    "read_table",
    "write_table",
]

REAL_FMT = "%.17g"  # round-trips every float64


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Point coordinates plus triangle (2D) or tetrahedron (3D) connectivity.

    ``coords`` and ``faces`` are flat, row-major per point / per face, exactly
    as they are laid out in the input files.
    """

    dim: int
    coords: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise InvalidDimensionError(f"dim must be 2 or 3, got {self.dim}")
        object.__setattr__(self, "coords", _frozen(self.coords, np.float64))
        object.__setattr__(self, "faces", _frozen(self.faces, np.int64))
        if self.coords.size % self.dim:
            raise LengthMismatchError(
                f"coords length {self.coords.size} is not a multiple of dim={self.dim}"
            )
        if self.faces.size % self.verts_per_face:
            raise LengthMismatchError(
                f"faces length {self.faces.size} is not a multiple of "
                f"verts_per_face={self.verts_per_face}"
            )
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= self.n_points):
            bad = int(np.flatnonzero((self.faces < 0) | (self.faces >= self.n_points))[0])
            raise MeshFormatError(
                f"face {bad // self.verts_per_face} references point {self.faces[bad]} "
                f"outside [0, {self.n_points})"
            )

    @property
    def verts_per_face(self) -> int:
        return self.dim + 1

    @property
    def n_points(self) -> int:
        return self.coords.size // self.dim

    @property
    def n_faces(self) -> int:
        return self.faces.size // self.verts_per_face

    @property
    def points(self) -> np.ndarray:
        """(n_points, dim) view of ``coords``."""
        return self.coords.reshape(-1, self.dim)

    @property
    def simplices(self) -> np.ndarray:
        """(n_faces, verts_per_face) view of ``faces``."""
        return self.faces.reshape(-1, self.verts_per_face)

    def signed_measures(self) -> np.ndarray:
        """Signed area (2D) or volume (3D) of every simplex."""
        p = self.points[self.simplices]
        edges = p[:, 1:, :] - p[:, :1, :]
        return np.linalg.det(edges) / math.factorial(self.dim)

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.coords, other.coords)
            and np.array_equal(self.faces, other.faces)
        )


@dataclass(frozen=True, eq=False)
class Flowmap:
    """Advected position of every mesh point between ``t0`` and ``t1``."""

    t0: float
    t1: float
    values: np.ndarray = field(repr=False)
    dim: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise InvalidDimensionError(f"dim must be 2 or 3, got {self.dim}")
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        if self.values.size % self.dim:
            raise LengthMismatchError(
                f"flowmap length {self.values.size} is not a multiple of dim={self.dim}"
            )

    @property
    def positions(self) -> np.ndarray:
        """(n_points, dim) view of ``values``."""
        return self.values.reshape(-1, self.dim)

    @property
    def interval(self) -> float:
        return self.t1 - self.t0

    def check(self, mesh: Mesh) -> None:
        if self.dim != mesh.dim or self.values.size != mesh.n_points * mesh.dim:
            raise LengthMismatchError(
                f"flowmap has {self.values.size} values, mesh needs "
                f"{mesh.n_points} x {mesh.dim} = {mesh.n_points * mesh.dim}"
            )

    def __eq__(self, other):
        if not isinstance(other, Flowmap):
            return NotImplemented
        return (
            self.t0 == other.t0
            and self.dim == other.dim
            and self.t1 == other.t1
            and np.array_equal(self.values, other.values)
        )


# --------------------------------------------------------------------------
# structured grids

def grid_counts(extents: Sequence[int]) -> tuple[int, int]:
    """(n_points, n_faces) of the generated grid with the given per-axis extents,
    without materialising it."""
    extents = [int(e) for e in extents]
    _check_extents(extents)
    cells = math.prod(e - 1 for e in extents)
    per_cell = 2 if len(extents) == 2 else 6
    return math.prod(extents), per_cell * cells


def _check_extents(extents):
    if len(extents) not in (2, 3):
        raise InvalidDimensionError(f"expected 2 or 3 extents, got {len(extents)}")
    for axis, e in zip("xyz", extents):
        if e < 2:
            raise InvalidDimensionError(f"n{axis} must be >= 2, got {e}")


def _axis(n, lo, hi, name):
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise InvalidDimensionError(f"{name} range must satisfy min < max, got [{lo}, {hi}]")
    return lo + np.arange(n, dtype=np.float64) * ((hi - lo) / (n - 1))


def generate_grid_2d(nx: int, ny: int, x_range=(0.0, 1.0), y_range=(0.0, 1.0)) -> Mesh:
    """Uniform nx*ny lattice, each cell split into two triangles along its
    lower-left to upper-right diagonal. Point (i, j) has index ``j*nx + i``."""
    _check_extents([nx, ny])
    xs = _axis(nx, *x_range, "x")
    ys = _axis(ny, *y_range, "y")
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    coords = np.stack([X.ravel(), Y.ravel()], axis=1)

    j, i = np.meshgrid(np.arange(ny - 1), np.arange(nx - 1), indexing="ij")
    ll = (j * nx + i).ravel()
    lr, ul = ll + 1, ll + nx
    ur = ul + 1
    tris = np.empty((ll.size, 2, 3), dtype=np.int64)
    tris[:, 0] = np.stack([ll, lr, ur], axis=1)
    tris[:, 1] = np.stack([ll, ur, ul], axis=1)
    return Mesh(2, coords, tris)


# Kuhn subdivision: one tetrahedron per axis ordering, all sharing the main diagonal.
_KUHN_ORDERS = list(itertools.permutations(range(3)))


def _perm_parity(perm):
    inversions = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
    return inversions % 2


def generate_grid_3d(nx: int, ny: int, nz: int, ranges=((0.0, 1.0),) * 3) -> Mesh:
    """Uniform nx*ny*nz lattice, each cube split into six positively oriented
    tetrahedra around its (0,0,0)-(1,1,1) diagonal. Point (i, j, k) has index
    ``(k*ny + j)*nx + i``."""
    _check_extents([nx, ny, nz])
    if len(ranges) != 3:
        raise InvalidDimensionError("generate_grid_3d needs three axis ranges")
    xs, ys, zs = (_axis(n, *r, a) for n, r, a in zip((nx, ny, nz), ranges, "xyz"))
    Z, Y, X = np.meshgrid(zs, ys, xs, indexing="ij")
    coords = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    k, j, i = np.meshgrid(np.arange(nz - 1), np.arange(ny - 1), np.arange(nx - 1), indexing="ij")
    base = ((k * ny + j) * nx + i).ravel()
    stride = (1, nx, nx * ny)
    tets = np.empty((base.size, 6, 4), dtype=np.int64)
    for t, order in enumerate(_KUHN_ORDERS):
        a, b, c = (stride[d] for d in order)
        verts = [base, base + a, base + a + b, base + a + b + c]
        if _perm_parity(order):
            verts[2], verts[3] = verts[3], verts[2]
        tets[:, t] = np.stack(verts, axis=1)
    return Mesh(3, coords, tets)


# --------------------------------------------------------------------------
# file I/O

def write_table(path, values: np.ndarray, cols: int, fmt: str) -> None:
    """Write ``<rows> <cols>`` then one row per line."""
    arr = np.asarray(values).reshape(-1, cols)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{arr.shape[0]} {cols}\n")
        if arr.size:
            np.savetxt(fh, arr, fmt=fmt, delimiter=" ")


def read_table(path, dtype=np.float64, expect_cols=None) -> np.ndarray:
    """Parse a ``<rows> <cols>`` headed table, returning a (rows, cols) array.

    Errors carry the 1-based line number of the offending line.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if not lines or not lines[0].strip():
        raise MeshFormatError("missing header", path, 1)
    header = lines[0].split()
    try:
        rows, cols = (int(h) for h in header)
    except ValueError:
        raise MeshFormatError(f"malformed header {lines[0]!r}, expected '<count> <width>'", path, 1)
    if rows < 0 or cols < 1:
        raise MeshFormatError(f"malformed header {lines[0]!r}", path, 1)
    if expect_cols is not None and cols != expect_cols:
        raise MeshFormatError(f"header declares width {cols}, expected {expect_cols}", path, 1)

    body = lines[1 : 1 + rows]
    if len(body) < rows:
        raise MeshFormatError(
            f"truncated body: header declares {rows} rows, found {len(body)}",
            path,
            len(lines) + 1,
        )
    for extra, line in enumerate(lines[1 + rows :], start=2 + rows):
        if line.strip():
            raise MeshFormatError("unexpected data after declared rows", path, extra)

    tokens = [line.split() for line in body]
    for lineno, tok in enumerate(tokens, start=2):
        if len(tok) != cols:
            raise MeshFormatError(f"expected {cols} values, found {len(tok)}", path, lineno)
    if rows == 0:
        return np.empty((0, cols), dtype=dtype)
    try:
        return np.array(tokens, dtype=dtype)
    except ValueError:
        pass
    conv = int if np.issubdtype(dtype, np.integer) else float
    for lineno, tok in enumerate(tokens, start=2):
        for t in tok:
            try:
                conv(t)
            except ValueError:
                raise MeshFormatError(f"non-numeric token {t!r}", path, lineno) from None
    raise MeshFormatError("unparseable body", path)  # pragma: no cover


def write_mesh(mesh: Mesh, coords_path, faces_path) -> None:
    write_table(coords_path, mesh.coords, mesh.dim, REAL_FMT)
    write_table(faces_path, mesh.faces, mesh.verts_per_face, "%d")


def read_mesh(coords_path, faces_path) -> Mesh:
    coords = read_table(coords_path, np.float64)
    dim = coords.shape[1]
    if dim not in (2, 3):
        raise MeshFormatError(f"coordinates width must be 2 or 3, got {dim}", coords_path, 1)
    faces = read_table(faces_path, np.int64, expect_cols=dim + 1)
    n_points = coords.shape[0]
    bad = np.flatnonzero(((faces < 0) | (faces >= n_points)).any(axis=1))
    if bad.size:
        row = int(bad[0])
        raise MeshFormatError(
            f"face index out of range [0, {n_points}): {faces[row].tolist()}",
            faces_path,
            row + 2,
        )
    return Mesh(dim, coords, faces)


def write_flowmap(flowmap: Flowmap, path) -> None:
    write_table(path, flowmap.values, flowmap.dim, REAL_FMT)


def read_flowmap(path, mesh: Mesh, t0: float = 0.0, t1: float = 1.0) -> Flowmap:
    """Read a flowmap for ``mesh``. The file stores positions only, so the
    integration interval comes from the caller."""
    values = read_table(path, np.float64)
    if values.shape != (mesh.n_points, mesh.dim):
        raise LengthMismatchError(
            f"flowmap is {values.shape[0]} x {values.shape[1]}, mesh needs "
            f"{mesh.n_points} x {mesh.dim}",
            path,
            1,
        )
    return Flowmap(t0, t1, values, mesh.dim)
