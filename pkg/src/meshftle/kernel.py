"""FTLE kernel: neighbour selection, flowmap gradient, Cauchy-Green tensor,
closed-form largest eigenvalue and the per-point exponent.

Symmetric matrices are plain ``(..., dim, dim)`` float64 arrays; the
eigenvalue routines broadcast over leading axes so the range kernel can feed
them a whole batch of points at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateNeighborhoodError,
    InvalidIntervalError,
    LengthMismatchError,
    NonSymmetricInputError,
)
from .mesh import REAL_FMT, Flowmap, Mesh, read_table, write_table
from .preprocess import FaceIndex, build_face_index, segment_bounds

__all__ = [
    "LAMBDA_FLOOR",
    "FILL_VALUE",
    "SYMMETRY_RTOL",
    "FtleField",
    "green_gauss_neighbors",
    "neighbors_range",
    "grad_tensor_2d",
    "grad_tensor_3d",
    "cauchy_green_range",
    "max_eigenvalue_2d",
    "max_eigenvalue_3d",
    "max_eigenvalue",
    "ftle_point",
    "compute_ftle_range",
    "compute_ftle",
    "write_field",
    "read_field",
]

LAMBDA_FLOOR = 1e-300
FILL_VALUE = -math.inf
SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class FtleField:
    """Per-point FTLE values. ``n_filled`` counts entries set to ``fill``
    (degenerate neighbourhoods or eigenvalues at/below the floor)."""

    t_eval: float
    values: np.ndarray = field(repr=False)
    n_filled: int = 0
    fill: float = FILL_VALUE

    def __eq__(self, other):
        if not isinstance(other, FtleField):
            return NotImplemented
        return (
            self.t_eval == other.t_eval
            and self.n_filled == other.n_filled
            and self.values.tobytes() == other.values.tobytes()
        )


# --------------------------------------------------------------------------
# neighbour selection

def neighbors_range(mesh: Mesh, index: FaceIndex, point_range) -> np.ndarray:
    """Directional neighbours of every point in ``point_range``.

    Returns an int array of shape ``(end - begin, dim, 2)`` holding, per axis,
    the (lower, upper) neighbour. Candidates are the vertices of the point's
    incident faces other than the point itself. On each side of each axis the
    winner is the candidate with the smallest axial offset, then the smallest
    squared offset across the remaining axes, then the smallest index. A side
    without candidates falls back to the point itself.
    """
    begin, end = (int(v) for v in point_range)
    start, stop = segment_bounds(index.offsets, begin, end)
    dim = mesh.dim
    pts = np.arange(begin, end, dtype=np.int64)
    result = np.repeat(pts, 2 * dim).reshape(-1, dim, 2)
    if stop == start:
        return result

    lengths = np.diff(index.offsets[begin:end], prepend=start)
    owner = np.repeat(pts, lengths)
    cand = mesh.simplices[index.face_ids[start:stop]]
    owner = np.repeat(owner, mesh.verts_per_face)
    q = cand.ravel()
    keep = q != owner
    owner, q = owner[keep], q[keep]

    P = mesh.points
    offset = P[q] - P[owner]
    for d in range(dim):
        perp = np.zeros(q.size)
        for e in range(dim):
            if e != d:
                perp += offset[:, e] * offset[:, e]
        axial = offset[:, d]
        for side, sel in enumerate((axial < 0, axial > 0)):
            o, c = owner[sel], q[sel]
            order = np.lexsort((c, perp[sel], np.abs(axial[sel]), o))
            o, c = o[order], c[order]
            first = np.ones(o.size, dtype=bool)
            first[1:] = o[1:] != o[:-1]
            result[o[first] - begin, d, side] = c[first]
    return result


def green_gauss_neighbors(p: int, mesh: Mesh, index: FaceIndex):
    """((lower, upper) per axis) for point ``p``; see :func:`neighbors_range`.

    Raises DegenerateNeighborhoodError when some axis has no neighbour on
    either side.
    """
    if not 0 <= p < mesh.n_points:
        raise IndexError(f"point {p} out of range [0, {mesh.n_points})")
    nb = neighbors_range(mesh, index, (p, p + 1))[0]
    for d in range(mesh.dim):
        if nb[d, 0] == p and nb[d, 1] == p:
            raise DegenerateNeighborhoodError(
                f"point {p} has no neighbour along axis {'xyz'[d]}"
            )
    return tuple((int(lo), int(hi)) for lo, hi in nb)


# --------------------------------------------------------------------------
# gradient and Cauchy-Green tensor

def cauchy_green_range(mesh: Mesh, flowmap: Flowmap, index: FaceIndex, point_range):
    """(C, degenerate) for every point of the range.

    ``C`` has shape ``(m, dim, dim)`` and is the Gram matrix of the flowmap
    gradient, each gradient column a (central or one-sided) difference between
    the point's directional neighbours. ``degenerate`` marks points whose
    difference divisor vanished; their ``C`` rows are zero.
    """
    begin, end = (int(v) for v in point_range)
    dim = mesh.dim
    nb = neighbors_range(mesh, index, (begin, end))
    P = mesh.points
    F = flowmap.positions
    lo, hi = nb[:, :, 0], nb[:, :, 1]

    h = np.empty((end - begin, dim))
    for d in range(dim):
        h[:, d] = P[hi[:, d], d] - P[lo[:, d], d]
    degenerate = (h == 0).any(axis=1)
    h[h == 0] = 1.0

    # grad[:, i, d] = dF_i / dx_d
    grad = np.empty((end - begin, dim, dim))
    for d in range(dim):
        for i in range(dim):
            grad[:, i, d] = (F[hi[:, d], i] - F[lo[:, d], i]) / h[:, d]
    grad[degenerate] = 0.0

    C = np.empty((end - begin, dim, dim))
    for d in range(dim):
        for e in range(dim):
            acc = grad[:, 0, d] * grad[:, 0, e]
            for i in range(1, dim):
                acc = acc + grad[:, i, d] * grad[:, i, e]
            C[:, d, e] = acc
    return C, degenerate


def _grad_tensor(p, mesh, flowmap, index, dim):
    if mesh.dim != dim:
        raise ValueError(f"grad_tensor_{dim}d called on a {mesh.dim}D mesh")
    flowmap.check(mesh)
    green_gauss_neighbors(p, mesh, index)  # raises on degenerate neighbourhoods
    C, _ = cauchy_green_range(mesh, flowmap, index, (p, p + 1))
    return C[0]


def grad_tensor_2d(p: int, mesh: Mesh, flowmap: Flowmap, index: FaceIndex) -> np.ndarray:
    """2x2 Cauchy-Green tensor (grad F)^T grad F at point ``p``."""
    return _grad_tensor(p, mesh, flowmap, index, 2)


def grad_tensor_3d(p: int, mesh: Mesh, flowmap: Flowmap, index: FaceIndex) -> np.ndarray:
    """3x3 Cauchy-Green tensor (grad F)^T grad F at point ``p``."""
    return _grad_tensor(p, mesh, flowmap, index, 3)


# --------------------------------------------------------------------------
# eigenvalues

def _unwrap(x, scalar):
    return float(x) if scalar else x


def _pow2_normalize(m):
    """Divide each matrix by a power of two near its largest |entry| so squares
    neither underflow nor overflow; exact, so results rescale bit-for-bit."""
    scale = np.abs(m).max(axis=(-2, -1))
    _, exp = np.frexp(np.where(scale > 0, scale, 1.0))
    return np.ldexp(m, -exp[..., None, None]), exp


def max_eigenvalue_2d(m):
    """Largest eigenvalue of 2x2 matrices ``[[a, b], [c, d]]`` via the quadratic
    formula ``(a + d + sqrt((a - d)^2 + 4bc)) / 2``.

    A negative discriminant below ``-1e-12 * max|entry|^2`` means the input is
    not symmetric enough to have real eigenvalues; smaller negatives clamp to 0.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape[-2:] != (2, 2):
        raise ValueError(f"expected (..., 2, 2) input, got shape {m.shape}")
    scalar = m.ndim == 2
    m, exp = _pow2_normalize(m)
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    disc = (a - d) * (a - d) + 4.0 * (b * c)
    scale = np.abs(m).max(axis=(-2, -1))
    if np.any(disc < -SYMMETRY_RTOL * scale * scale):
        raise NonSymmetricInputError("2x2 input has complex eigenvalues")
    sq = np.sqrt(np.maximum(disc, 0.0))
    return _unwrap(np.ldexp((a + d + sq) / 2.0, exp), scalar)


def max_eigenvalue_3d(m):
    """Largest eigenvalue of symmetric 3x3 matrices, closed form.

    Shift by ``q = tr/3``, scale by ``p = sqrt(tr((A - qI)^2) / 6)`` and read the
    roots of the depressed cubic as ``q + 2p cos((acos(det(B)/2) + 2k pi) / 3)``.
    Diagonal inputs return their largest diagonal entry exactly.

    When ``det(B)/2 < 0`` the two largest roots may nearly coincide, where the
    arccos form only resolves them to ~sqrt(eps). The smallest root is well
    separated there, so it is deflated away and the largest is read from the
    remaining 2x2 block, whose discriminant is a sum of squares.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape[-2:] != (3, 3):
        raise ValueError(f"expected (..., 3, 3) input, got shape {m.shape}")
    scalar = m.ndim == 2
    m, exp = _pow2_normalize(m)
    scale = np.abs(m).max(axis=(-2, -1))
    asym = np.abs(m - np.swapaxes(m, -1, -2)).max(axis=(-2, -1))
    if np.any(asym > SYMMETRY_RTOL * scale):
        raise NonSymmetricInputError("3x3 input is not symmetric")
    m = (m + np.swapaxes(m, -1, -2)) / 2.0

    a00, a11, a22 = m[..., 0, 0], m[..., 1, 1], m[..., 2, 2]
    a01, a02, a12 = m[..., 0, 1], m[..., 0, 2], m[..., 1, 2]
    off = a01 * a01 + a02 * a02 + a12 * a12
    q = (a00 + a11 + a22) / 3.0
    b00, b11, b22 = a00 - q, a11 - q, a22 - q
    p = np.sqrt((b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * off) / 6.0)

    diagonal = off == 0
    ps = np.where(diagonal, 1.0, p)
    b00, b11, b22 = b00 / ps, b11 / ps, b22 / ps
    b01, b02, b12 = a01 / ps, a02 / ps, a12 / ps
    det = (
        b00 * (b11 * b22 - b12 * b12)
        - b01 * (b01 * b22 - b12 * b02)
        + b02 * (b01 * b12 - b11 * b02)
    )
    r = np.clip(det / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    lam = q + 2.0 * p * np.cos(phi)

    close_top = (r < 0) & ~diagonal
    if np.any(close_top):
        lam_min = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
        lam = np.where(close_top, _deflated_max(m, lam_min), lam)
    lam = np.where(diagonal, np.maximum(np.maximum(a00, a11), a22), lam)
    return _unwrap(np.ldexp(lam, exp), scalar)


def _deflated_max(m, lam_min):
    """Largest eigenvalue of the 2x2 block of ``m`` orthogonal to the
    eigenvector of the simple eigenvalue ``lam_min``."""
    shifted = m - lam_min[..., None, None] * np.eye(3)
    r0, r1, r2 = shifted[..., 0, :], shifted[..., 1, :], shifted[..., 2, :]
    crosses = np.stack([np.cross(r0, r1), np.cross(r0, r2), np.cross(r1, r2)], axis=-2)
    norms = np.linalg.norm(crosses, axis=-1)
    best = np.argmax(norms, axis=-1)
    v = np.take_along_axis(crosses, best[..., None, None], axis=-2)[..., 0, :]
    v = v / np.maximum(np.take_along_axis(norms, best[..., None], axis=-1), 1e-300)
    # any unit vector not parallel to v, then Gram-Schmidt
    pick = np.argmin(np.abs(v), axis=-1)
    e = np.eye(3)[pick]
    u = e - np.sum(e * v, axis=-1, keepdims=True) * v
    u = u / np.linalg.norm(u, axis=-1, keepdims=True)
    w = np.cross(v, u)
    Au = np.einsum("...ij,...j->...i", m, u)
    Aw = np.einsum("...ij,...j->...i", m, w)
    a = np.sum(u * Au, axis=-1)
    d = np.sum(w * Aw, axis=-1)
    b = np.sum(u * Aw, axis=-1)
    half = (a - d) / 2.0
    return (a + d) / 2.0 + np.sqrt(half * half + b * b)


def max_eigenvalue(m):
    m = np.asarray(m)
    if m.shape[-1] == 2:
        return max_eigenvalue_2d(m)
    return max_eigenvalue_3d(m)


# --------------------------------------------------------------------------
# FTLE

def _check_t_eval(t_eval):
    if not (t_eval > 0 and math.isfinite(t_eval)):
        raise InvalidIntervalError(f"t_eval must be a positive finite number, got {t_eval}")


def ftle_point(lambda_max: float, t_eval: float, lambda_floor=LAMBDA_FLOOR, fill=FILL_VALUE) -> float:
    """``log(sqrt(lambda_max)) / t_eval``, or ``fill`` when ``lambda_max <= lambda_floor``."""
    _check_t_eval(t_eval)
    if not lambda_max > lambda_floor:
        return fill
    return math.log(math.sqrt(lambda_max)) / t_eval


def compute_ftle_range(
    mesh: Mesh,
    flowmap: Flowmap,
    index: FaceIndex,
    t_eval: float,
    point_range,
    out: np.ndarray,
    lambda_floor=LAMBDA_FLOOR,
    fill=FILL_VALUE,
) -> int:
    """Write the FTLE of points ``[begin, end)`` into ``out[begin:end]``.

    Only the slots of the range are touched, so disjoint ranges can run
    concurrently against one shared ``out``. Returns the number of points set
    to ``fill``.
    """
    _check_t_eval(t_eval)
    flowmap.check(mesh)
    if index.n_points != mesh.n_points:
        raise LengthMismatchError(
            f"face index covers {index.n_points} points, mesh has {mesh.n_points}"
        )
    begin, end = (int(v) for v in point_range)
    if begin == end:
        return 0
    C, degenerate = cauchy_green_range(mesh, flowmap, index, (begin, end))
    lam = max_eigenvalue_2d(C) if mesh.dim == 2 else max_eigenvalue_3d(C)
    good = (lam > lambda_floor) & ~degenerate
    safe = np.where(good, lam, 1.0)
    out[begin:end] = np.where(good, np.log(np.sqrt(safe)) / t_eval, fill)
    return int(np.count_nonzero(~good))


def compute_ftle(mesh: Mesh, flowmap: Flowmap, index: FaceIndex | None = None, t_eval=None, **kw) -> FtleField:
    """Whole-mesh FTLE on the calling thread. ``t_eval`` defaults to the
    flowmap's ``t1 - t0``."""
    if index is None:
        index = build_face_index(mesh)
    if t_eval is None:
        t_eval = flowmap.interval
    values = np.empty(mesh.n_points)
    n_filled = compute_ftle_range(mesh, flowmap, index, t_eval, (0, mesh.n_points), values, **kw)
    return FtleField(t_eval, values, n_filled, kw.get("fill", FILL_VALUE))


def write_field(ftle: FtleField, path) -> None:
    """One value per line under an ``<n_points> 1`` header."""
    write_table(path, ftle.values, 1, REAL_FMT)


def read_field(path) -> np.ndarray:
    return read_table(path, np.float64, expect_cols=1).ravel()
