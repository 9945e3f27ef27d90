"""Synthetic velocity fields and a fixed-step RK4 integrator that turns them
into flowmaps on a mesh. Affine and identity specs short-circuit to exact
flowmaps for oracle tests."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrationDivergedError, InvalidDimensionError
from .mesh import Flowmap, Mesh
from .scheduler import partition_range

__all__ = [
    "FlowSpec",
    "double_gyre",
    "abc",
    "identity",
    "affine",
    "velocity",
    "advect",
    "integrate_flowmap",
]

KINDS = ("double_gyre", "abc", "identity", "affine")


@dataclass(frozen=True)
class FlowSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown flow kind {self.kind!r}, expected one of {KINDS}")
        p = self.params
        if self.kind == "double_gyre":
            if not p["A"] > 0:
                raise ValueError(f"double gyre needs A > 0, got {p['A']}")
            if not 0 <= p["epsilon"] < 0.5:
                raise ValueError(f"double gyre needs 0 <= epsilon < 0.5, got {p['epsilon']}")
        elif self.kind == "abc":
            if not all(math.isfinite(p[k]) for k in "ABC"):
                raise ValueError("ABC parameters must be finite")
        elif self.kind == "affine":
            mat = np.asarray(p["matrix"], dtype=float)
            if mat.shape not in ((2, 2), (3, 3)):
                raise InvalidDimensionError(f"affine matrix must be 2x2 or 3x3, got {mat.shape}")
            off = np.asarray(p.get("offset", np.zeros(len(mat))), dtype=float)
            if off.shape != (len(mat),):
                raise InvalidDimensionError("affine offset length must match the matrix")

    @property
    def dim(self) -> int | None:
        """Spatial dimension the field lives in, or None if any."""
        if self.kind == "double_gyre":
            return 2
        if self.kind == "abc":
            return 3
        if self.kind == "affine":
            return len(self.params["matrix"])
        return None


def double_gyre(A=0.1, epsilon=0.25, omega=2 * math.pi / 10) -> FlowSpec:
    return FlowSpec("double_gyre", {"A": float(A), "epsilon": float(epsilon), "omega": float(omega)})


def abc(A=math.sqrt(3), B=math.sqrt(2), C=1.0) -> FlowSpec:
    return FlowSpec("abc", {"A": float(A), "B": float(B), "C": float(C)})


def identity() -> FlowSpec:
    return FlowSpec("identity")


def affine(matrix, offset=None) -> FlowSpec:
    matrix = tuple(tuple(float(v) for v in row) for row in matrix)
    if offset is None:
        offset = (0.0,) * len(matrix)
    return FlowSpec("affine", {"matrix": matrix, "offset": tuple(float(v) for v in offset)})


def velocity(spec: FlowSpec, position, t: float) -> np.ndarray:
    """Velocity at ``position`` (shape ``(dim,)`` or ``(n, dim)``) and time ``t``."""
    x = np.asarray(position, dtype=np.float64)
    p = spec.params
    if spec.kind == "identity":
        return np.zeros_like(x)
    if spec.kind == "affine":
        raise TypeError("an affine spec defines a flowmap directly, not a velocity field")
    if x.shape[-1] != spec.dim:
        raise InvalidDimensionError(f"{spec.kind} is {spec.dim}D, position has {x.shape[-1]} components")
    if spec.kind == "double_gyre":
        A, eps, om = p["A"], p["epsilon"], p["omega"]
        a = eps * math.sin(om * t)
        b = 1.0 - 2.0 * a
        px, py = x[..., 0], x[..., 1]
        f = a * px * px + b * px
        dfdx = 2.0 * a * px + b
        u = -math.pi * A * np.sin(math.pi * f) * np.cos(math.pi * py)
        v = math.pi * A * np.cos(math.pi * f) * np.sin(math.pi * py) * dfdx
        return np.stack([u, v], axis=-1)
    A, B, C = p["A"], p["B"], p["C"]
    px, py, pz = x[..., 0], x[..., 1], x[..., 2]
    u = A * np.sin(pz) + C * np.cos(py)
    v = B * np.sin(px) + A * np.cos(pz)
    w = C * np.sin(py) + B * np.cos(px)
    return np.stack([u, v, w], axis=-1)


def advect(spec: FlowSpec, points, t0: float, t1: float, n_steps: int, first_index: int = 0) -> np.ndarray:
    """Classical RK4 with ``n_steps`` fixed steps of ``(t1 - t0)/n_steps``.

    ``t1 < t0`` integrates backwards. ``first_index`` only shifts point numbers
    in divergence errors.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    x = np.array(points, dtype=np.float64)
    if spec.kind == "identity":
        return x
    if spec.kind == "affine":
        mat = np.asarray(spec.params["matrix"])
        off = np.asarray(spec.params["offset"])
        return x @ mat.T + off
    h = (t1 - t0) / n_steps
    for step in range(n_steps):
        t = t0 + step * h
        # overflow surfaces as non-finite state, reported below
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = velocity(spec, x, t)
            k2 = velocity(spec, x + (0.5 * h) * k1, t + 0.5 * h)
            k3 = velocity(spec, x + (0.5 * h) * k2, t + 0.5 * h)
            k4 = velocity(spec, x + h * k3, t + h)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        bad = ~np.isfinite(x).all(axis=-1)
        if bad.any():
            i = int(np.flatnonzero(bad)[0]) + first_index
            raise IntegrationDivergedError(f"trajectory of point {i} became non-finite at step {step + 1}")
    return x


def integrate_flowmap(mesh: Mesh, spec: FlowSpec, t0: float, t1: float, n_steps: int, workers: int = 1) -> Flowmap:
    """Advect every mesh point from ``t0`` to ``t1``.

    ``workers > 1`` splits the points into contiguous ranges advected on a
    thread pool; the result is identical for any worker count.
    """
    if spec.dim is not None and spec.dim != mesh.dim:
        raise InvalidDimensionError(f"{spec.kind} flow is {spec.dim}D but the mesh is {mesh.dim}D")
    if spec.kind == "identity":
        return Flowmap(t0, t1, mesh.coords.copy(), mesh.dim)
    P = mesh.points
    if workers <= 1:
        return Flowmap(t0, t1, advect(spec, P, t0, t1, n_steps), mesh.dim)

    part = partition_range(mesh.n_points, workers, workers)
    out = np.empty_like(P)

    def run(d):
        b, e = part.bounds(d)
        out[b:e] = advect(spec, P[b:e], t0, t1, n_steps, first_index=b)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for fut in [pool.submit(run, d) for d in range(part.used)]:
            fut.result()
    return Flowmap(t0, t1, out, mesh.dim)
