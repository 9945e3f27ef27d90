"""Point -> incident-face index (a CSR layout over mesh points).

``offsets[p]`` is the inclusive cumulative number of incident faces of points
``0..p``, so point ``p`` owns ``face_ids[start:offsets[p]]`` with
``start = 0 if p == 0 else offsets[p - 1]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh

__all__ = [
    "FaceIndex",
    "count_faces_per_point",
    "build_faces_per_point",
    "build_faces_per_point_scan",
    "build_face_index",
    "incident_faces",
    "segment_bounds",
]


@dataclass(frozen=True, eq=False)
class FaceIndex:
    offsets: np.ndarray
    face_ids: np.ndarray

    @property
    def n_points(self) -> int:
        return self.offsets.size

    def faces_of(self, p: int) -> np.ndarray:
        start, length = incident_faces(self, p)
        return self.face_ids[start : start + length]

    def __eq__(self, other):
        if not isinstance(other, FaceIndex):
            return NotImplemented
        return np.array_equal(self.offsets, other.offsets) and np.array_equal(
            self.face_ids, other.face_ids
        )


def count_faces_per_point(mesh: Mesh) -> np.ndarray:
    """Cumulative incident-face counts: one increment per (face, vertex) slot,
    then an inclusive prefix sum."""
    counts = np.bincount(mesh.faces, minlength=mesh.n_points).astype(np.int64)
    return np.cumsum(counts)


def segment_bounds(offsets: np.ndarray, begin: int, end: int) -> tuple[int, int]:
    """Slot interval ``[start, stop)`` of ``face_ids`` owned by points ``[begin, end)``."""
    n = offsets.size
    if not (0 <= begin <= end <= n):
        raise ValueError(f"point range [{begin}, {end}) is not inside [0, {n})")
    start = 0 if begin == 0 else int(offsets[begin - 1])
    stop = start if end == begin else int(offsets[end - 1])
    return start, stop


def build_faces_per_point(mesh: Mesh, offsets: np.ndarray, point_range, out=None) -> np.ndarray:
    """Fill the face-id segments of the points in ``point_range``.

    Writes into ``out`` (a full-length ``face_ids`` buffer) when given, touching
    only the slots owned by the range, and returns the filled segment. Face ids
    of each point come out in ascending order. Disjoint ranges may be filled
    concurrently into the same ``out``.
    """
    begin, end = (int(v) for v in point_range)
    start, stop = segment_bounds(offsets, begin, end)

    flat = mesh.faces
    slots = np.flatnonzero((flat >= begin) & (flat < end))
    owners = flat[slots]
    # stable sort keeps slots, hence face ids, ascending per point
    order = np.argsort(owners, kind="stable")
    segment = slots[order] // mesh.verts_per_face
    if segment.size != stop - start:
        raise ValueError(
            f"offsets are inconsistent with the mesh: range [{begin}, {end}) has "
            f"{segment.size} incidences, offsets claim {stop - start}"
        )
    if out is not None:
        out[start:stop] = segment
    return segment


def build_faces_per_point_scan(mesh: Mesh, offsets: np.ndarray, point_range, out=None) -> np.ndarray:
    """Per-point linear scan over faces, stopping once the point's count is met.

    Same contract as :func:`build_faces_per_point`; quadratic, meant for small
    meshes and cross-checking.
    """
    begin, end = (int(v) for v in point_range)
    start, stop = segment_bounds(offsets, begin, end)
    faces = mesh.faces.tolist()
    vpf = mesh.verts_per_face
    n_faces = mesh.n_faces
    segment = np.empty(stop - start, dtype=np.int64)
    for ip in range(begin, end):
        first = 0 if ip == 0 else int(offsets[ip - 1])
        wanted = int(offsets[ip]) - first
        count = 0
        iface = 0
        while iface < n_faces and count < wanted:
            for ipf in range(vpf):
                if faces[iface * vpf + ipf] == ip:
                    segment[first - start + count] = iface
                    count += 1
            iface += 1
    if out is not None:
        out[start:stop] = segment
    return segment


def build_face_index(mesh: Mesh) -> FaceIndex:
    offsets = count_faces_per_point(mesh)
    face_ids = np.empty(mesh.faces.size, dtype=np.int64)
    build_faces_per_point(mesh, offsets, (0, mesh.n_points), out=face_ids)
    return FaceIndex(offsets, face_ids)


def incident_faces(index: FaceIndex, p: int) -> tuple[int, int]:
    """(segment start, segment length) of point ``p``."""
    if not 0 <= p < index.n_points:
        raise IndexError(f"point {p} out of range [0, {index.n_points})")
    start = 0 if p == 0 else int(index.offsets[p - 1])
    return start, int(index.offsets[p]) - start
