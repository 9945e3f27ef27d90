"""Multi-device execution model.

* :func:`partition_range` splits ``n`` items into contiguous per-device ranges,
  materialising unused device slots as ``(offset 0, length 1)`` placeholders.
* :func:`run_parallel` runs the preprocessing and FTLE sub-kernels over those
  ranges on a thread pool.
* :func:`detect_dependencies` / :func:`simulate_schedule` model queue
  submissions whose written data regions overlap, and the makespan that
  results on devices of different speeds.
"""
from __future__ import annotations

import csv
import time
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidPartitionError, UnknownDeviceError
from .kernel import FILL_VALUE, FtleField, compute_ftle_range
from .mesh import Flowmap, Mesh
from .preprocess import FaceIndex, build_faces_per_point, count_faces_per_point, segment_bounds

__all__ = [
    "Partition",
    "partition_range",
    "Region",
    "Submission",
    "DeviceProfile",
    "Schedule",
    "detect_dependencies",
    "simulate_schedule",
    "split_submissions",
    "kernel_submissions",
    "RunResult",
    "run_parallel",
    "bench",
    "write_times_csv",
]


# --------------------------------------------------------------------------
# partitioning

@dataclass(frozen=True)
class Partition:
    n: int
    used: int
    offsets: tuple[int, ...]
    ranges: tuple[int, ...]

    @property
    def max_devices(self) -> int:
        return len(self.offsets)

    def bounds(self, d: int) -> tuple[int, int]:
        """Half-open ``[begin, end)`` of device slot ``d``."""
        return self.offsets[d], self.offsets[d] + self.ranges[d]

    def inclusive(self, d: int) -> tuple[int, int]:
        return self.offsets[d], self.offsets[d] + self.ranges[d] - 1


def partition_range(n: int, used: int, max_devices: int) -> Partition:
    """Equal chunks of ``n // used`` for the first ``used`` slots, the remainder
    going to the last used slot; slots past ``used`` get ``(0, 1)``."""
    if not 1 <= used <= max_devices:
        raise InvalidPartitionError(f"need 1 <= used <= max_devices, got used={used}, max_devices={max_devices}")
    if n < used:
        raise InvalidPartitionError(f"cannot split {n} items over {used} devices")
    chunk = n // used
    offsets = [0] * max_devices
    ranges = [1] * max_devices
    for d in range(used):
        offsets[d] = chunk * d
        ranges[d] = chunk
    ranges[used - 1] += n % used
    return Partition(n, used, tuple(offsets), tuple(ranges))


# --------------------------------------------------------------------------
# dependency model and simulator

Region = namedtuple("Region", "data offset length")


@dataclass(frozen=True)
class Submission:
    device: int
    region: Region
    work: Real
    order: int
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "region", Region(*self.region))
        if self.region.length < 1:
            raise ValueError(f"region length must be >= 1, got {self.region.length}")
        if self.work < 0:
            raise ValueError(f"work must be >= 0, got {self.work}")


@dataclass(frozen=True)
class DeviceProfile:
    id: int
    speed: Real

    def __post_init__(self):
        if not self.speed > 0:
            raise ValueError(f"device {self.id} speed must be positive, got {self.speed}")


def _overlap(a: Region, b: Region) -> bool:
    return a.data == b.data and a.offset < b.offset + b.length and b.offset < a.offset + a.length


def detect_dependencies(submissions: Sequence[Submission]) -> list[tuple[int, int]]:
    """Edges ``(i, j)`` (indices into ``submissions``) for every pair where ``i``
    was submitted before ``j`` and both write intersecting ranges of the same
    data."""
    edges = []
    for i, a in enumerate(submissions):
        for j, b in enumerate(submissions):
            if a.order < b.order and _overlap(a.region, b.region):
                edges.append((i, j))
    return sorted(edges)


@dataclass(frozen=True)
class Schedule:
    start: tuple[Fraction, ...]
    finish: tuple[Fraction, ...]
    edges: tuple[tuple[int, int], ...]
    makespan: Fraction

    def device_chains(self, submissions: Sequence[Submission]) -> dict[int, list[int]]:
        chains: dict[int, list[int]] = {}
        for i in sorted(range(len(submissions)), key=lambda i: submissions[i].order):
            chains.setdefault(submissions[i].device, []).append(i)
        return chains


def _speeds(profiles) -> dict:
    if isinstance(profiles, Mapping):
        return {k: DeviceProfile(k, v).speed for k, v in profiles.items()}
    return {p.id: p.speed for p in profiles}


def simulate_schedule(submissions: Sequence[Submission], profiles) -> Schedule:
    """In-order device queues plus data-region dependencies, in exact rationals.

    Each submission lasts ``work / speed`` and starts once both its dependency
    predecessors and the previous submission on its device have finished.
    """
    speeds = _speeds(profiles)
    for s in submissions:
        if s.device not in speeds:
            raise UnknownDeviceError(f"submission {s.order} targets unknown device {s.device}")
    edges = detect_dependencies(submissions)
    preds: dict[int, list[int]] = {}
    for i, j in edges:
        preds.setdefault(j, []).append(i)

    n = len(submissions)
    start = [Fraction(0)] * n
    finish = [Fraction(0)] * n
    device_free: dict[int, Fraction] = {}
    for j in sorted(range(n), key=lambda i: submissions[i].order):
        s = submissions[j]
        ready = device_free.get(s.device, Fraction(0))
        for i in preds.get(j, ()):
            ready = max(ready, finish[i])
        start[j] = ready
        finish[j] = ready + Fraction(s.work) / Fraction(speeds[s.device])
        device_free[s.device] = finish[j]
    makespan = max(finish, default=Fraction(0))
    return Schedule(tuple(start), tuple(finish), tuple(edges), makespan)


def split_submissions(work: int, split: int, n_devices: int | None = None, data=0, first_order: int = 0) -> list[Submission]:
    """``work`` items partitioned into ``split`` disjoint sub-kernels, sub-kernel
    ``d`` going to device ``d % n_devices``."""
    n_devices = split if n_devices is None else n_devices
    part = partition_range(work, split, split)
    return [
        Submission(d % n_devices, Region(data, part.offsets[d], part.ranges[d]), part.ranges[d], first_order + d)
        for d in range(split)
    ]


def kernel_submissions(index: FaceIndex, partition: Partition) -> list[Submission]:
    """Preprocessing then FTLE sub-kernels for each used device slot.

    Preprocessing work is the number of incidence slots the range fills; FTLE
    work is its point count.
    """
    subs = []
    order = 0
    for d in range(partition.used):
        b, e = partition.bounds(d)
        start, stop = segment_bounds(index.offsets, b, e)
        subs.append(Submission(d, Region("face_ids", start, stop - start), stop - start, order, "preprocess"))
        order += 1
    for d in range(partition.used):
        b, e = partition.bounds(d)
        subs.append(Submission(d, Region("ftle", b, e - b), e - b, order, "ftle"))
        order += 1
    return subs


# --------------------------------------------------------------------------
# thread-pool execution

@dataclass
class RunResult:
    field: FtleField
    index: FaceIndex
    partition: Partition
    preprocess_seconds: float
    ftle_seconds: float
    sub_kernel_seconds: dict = field(default_factory=dict)


def run_parallel(
    mesh: Mesh,
    flowmap: Flowmap,
    t_eval: float | None = None,
    used_workers: int = 1,
    max_workers: int | None = None,
    fill: float = FILL_VALUE,
) -> RunResult:
    """Preprocessing sub-kernels, then FTLE sub-kernels, one per used worker.

    Incidence counting runs on the calling thread. Stage times are the
    slowest sub-kernel of each stage. Output is independent of
    ``used_workers``.
    """
    if max_workers is None:
        max_workers = used_workers
    part = partition_range(mesh.n_points, used_workers, max_workers)
    if t_eval is None:
        t_eval = flowmap.interval
    flowmap.check(mesh)

    offsets = count_faces_per_point(mesh)
    face_ids = np.empty(mesh.faces.size, dtype=np.int64)
    values = np.empty(mesh.n_points)
    timings = {"preprocess": [0.0] * part.used, "ftle": [0.0] * part.used}

    def preprocess(d):
        t = time.perf_counter()
        build_faces_per_point(mesh, offsets, part.bounds(d), out=face_ids)
        timings["preprocess"][d] = time.perf_counter() - t

    def ftle(d):
        t = time.perf_counter()
        n = compute_ftle_range(mesh, flowmap, index, t_eval, part.bounds(d), values, fill=fill)
        timings["ftle"][d] = time.perf_counter() - t
        return n

    with ThreadPoolExecutor(max_workers=used_workers) as pool:
        for fut in [pool.submit(preprocess, d) for d in range(part.used)]:
            fut.result()
        index = FaceIndex(offsets, face_ids)
        n_filled = sum(fut.result() for fut in [pool.submit(ftle, d) for d in range(part.used)])

    return RunResult(
        field=FtleField(t_eval, values, n_filled, fill),
        index=index,
        partition=part,
        preprocess_seconds=max(timings["preprocess"]),
        ftle_seconds=max(timings["ftle"]),
        sub_kernel_seconds=timings,
    )


def bench(mesh: Mesh, flowmap: Flowmap, t_eval, worker_counts: Sequence[int], repeats: int = 30, max_workers=None):
    """Timing rows ``(stage, workers, run, seconds)``; a final row per
    (stage, workers) carries ``run == "mean"``."""
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    rows = []
    for w in worker_counts:
        per_stage = {"preprocess": [], "ftle": []}
        for r in range(repeats):
            res = run_parallel(mesh, flowmap, t_eval, w, max_workers or max(worker_counts))
            per_stage["preprocess"].append(res.preprocess_seconds)
            per_stage["ftle"].append(res.ftle_seconds)
            rows.append(("preprocess", w, r, res.preprocess_seconds))
            rows.append(("ftle", w, r, res.ftle_seconds))
        for stage, secs in per_stage.items():
            rows.append((stage, w, "mean", sum(secs) / len(secs)))
    return rows


def write_times_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "workers", "run", "seconds"])
        for stage, workers, run, secs in rows:
            w.writerow([stage, workers, run, f"{secs:.9f}"])
