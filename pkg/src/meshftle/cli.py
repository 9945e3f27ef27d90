"""Command-line driver: ``meshftle {generate-mesh,generate-flowmap,compute,bench,simulate}``."""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import flows
from .errors import FtleError
from .kernel import FILL_VALUE, read_field, write_field
from .mesh import (
    generate_grid_2d,
    generate_grid_3d,
    grid_counts,
    read_flowmap,
    read_mesh,
    write_flowmap,
    write_mesh,
)
from .preprocess import build_face_index
from .scheduler import (
    DeviceProfile,
    bench,
    kernel_submissions,
    partition_range,
    run_parallel,
    simulate_schedule,
    split_submissions,
    write_times_csv,
)


@dataclass(frozen=True)
class RunConfig:
    coords: str
    faces: str
    flowmap: str
    t_eval: float
    used_workers: int = 1
    max_workers: int = 1
    repeats: int = 1
    out_field: str | None = None
    out_times: str | None = None
    fill: float = FILL_VALUE
    dim: int | None = None

    def __post_init__(self):
        if not (self.t_eval > 0 and math.isfinite(self.t_eval)):
            raise ValueError(f"--t-eval must be positive, got {self.t_eval}")
        if self.repeats < 1:
            raise ValueError(f"--repeats must be >= 1, got {self.repeats}")
        if not 1 <= self.used_workers <= self.max_workers:
            raise ValueError(
                f"need 1 <= workers <= max-workers, got {self.used_workers} and {self.max_workers}"
            )


def _csv_numbers(text, conv=float):
    try:
        return [conv(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    return _csv_numbers(text, int)


def _speed_list(text):
    return _csv_numbers(text, Fraction)


def _fmt(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{float(x):.9g}"


# --------------------------------------------------------------------------
# subcommands

def cmd_generate_mesh(args) -> int:
    extents = [args.nx, args.ny] + ([args.nz] if args.dim == 3 else [])
    n_points, n_faces = grid_counts(extents)
    kind = "triangles" if args.dim == 2 else "tetrahedra"
    if args.out_coords or args.out_faces:
        if not (args.out_coords and args.out_faces):
            raise ValueError("--out-coords and --out-faces must be given together")
        if args.dim == 2:
            mesh = generate_grid_2d(args.nx, args.ny, (args.xmin, args.xmax), (args.ymin, args.ymax))
        else:
            mesh = generate_grid_3d(
                args.nx, args.ny, args.nz,
                ((args.xmin, args.xmax), (args.ymin, args.ymax), (args.zmin, args.zmax)),
            )
        write_mesh(mesh, args.out_coords, args.out_faces)
    print(f"points {n_points}")
    print(f"{kind} {n_faces}")
    return 0


def _flow_spec(args, dim):
    kind = args.flow.replace("-", "_")
    params = dict(args.param or [])
    if kind == "identity":
        return flows.identity()
    if kind == "double_gyre":
        return flows.double_gyre(**params)
    if kind == "abc":
        return flows.abc(**params)
    if args.matrix is None:
        raise ValueError("--flow affine needs --matrix")
    n = dim * dim
    if len(args.matrix) != n:
        raise ValueError(f"--matrix needs {n} entries for a {dim}D mesh, got {len(args.matrix)}")
    rows = [args.matrix[i * dim : (i + 1) * dim] for i in range(dim)]
    return flows.affine(rows, args.offset)


def _param(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    return key, float(value)


def cmd_generate_flowmap(args) -> int:
    mesh = read_mesh(args.coords, args.faces)
    spec = _flow_spec(args, mesh.dim)
    fm = flows.integrate_flowmap(mesh, spec, args.t0, args.t1, args.steps, workers=args.workers)
    write_flowmap(fm, args.out)
    print(f"flowmap {args.flow} t0={args.t0} t1={args.t1} steps={args.steps} points {mesh.n_points}")
    return 0


def _load_config(args, workers) -> RunConfig:
    return RunConfig(
        coords=args.coords,
        faces=args.faces,
        flowmap=args.flowmap,
        t_eval=args.t_eval,
        used_workers=workers,
        max_workers=args.max_workers or workers,
        repeats=getattr(args, "repeats", 1),
        out_field=getattr(args, "out_field", None),
        out_times=args.out_times,
        fill=args.fill,
        dim=args.dim,
    )


def _load_inputs(cfg: RunConfig):
    mesh = read_mesh(cfg.coords, cfg.faces)
    if cfg.dim is not None and cfg.dim != mesh.dim:
        raise ValueError(f"--dim {cfg.dim} but the mesh files are {mesh.dim}D")
    fm = read_flowmap(cfg.flowmap, mesh, 0.0, cfg.t_eval)
    return mesh, fm


def cmd_compute(args) -> int:
    cfg = _load_config(args, args.workers)
    mesh, fm = _load_inputs(cfg)
    res = run_parallel(mesh, fm, cfg.t_eval, cfg.used_workers, cfg.max_workers, fill=cfg.fill)
    if cfg.out_field:
        write_field(res.field, cfg.out_field)
        if read_field(cfg.out_field).size != mesh.n_points:
            raise FtleError(f"field file {cfg.out_field} did not validate")
    if cfg.out_times:
        write_times_csv(
            [("preprocess", cfg.used_workers, 0, res.preprocess_seconds),
             ("ftle", cfg.used_workers, 0, res.ftle_seconds)],
            cfg.out_times,
        )
    print(
        f"points {mesh.n_points} workers {cfg.used_workers} degenerate {res.field.n_filled} "
        f"preprocess {res.preprocess_seconds:.6f}s ftle {res.ftle_seconds:.6f}s"
    )
    return 0


def cmd_bench(args) -> int:
    worker_counts = args.workers
    cfg = _load_config(args, max(worker_counts))
    mesh, fm = _load_inputs(cfg)
    rows = bench(mesh, fm, cfg.t_eval, worker_counts, cfg.repeats, cfg.max_workers)
    if cfg.out_times:
        write_times_csv(rows, cfg.out_times)
    for stage, w, run, secs in rows:
        if run == "mean":
            print(f"{stage} workers={w} mean {secs:.6f}s over {cfg.repeats}")
    return 0


def cmd_simulate(args) -> int:
    speeds = args.speeds
    if not speeds:
        raise ValueError("--speeds must list at least one device")
    profiles = [DeviceProfile(d, s) for d, s in enumerate(speeds)]
    if args.coords:
        mesh = read_mesh(args.coords, args.faces)
        index = build_face_index(mesh)
        used = args.split or len(speeds)
        subs = kernel_submissions(index, partition_range(mesh.n_points, used, max(used, len(speeds))))
    else:
        if args.work is None:
            raise ValueError("--work is required unless --coords/--faces are given")
        subs = split_submissions(args.work, args.split or len(speeds), len(speeds))
    sched = simulate_schedule(subs, profiles)
    for dev, chain in sorted(sched.device_chains(subs).items()):
        print(f"device {dev} speed {_fmt(speeds[dev])}")
        for i in chain:
            s = subs[i]
            label = f" {s.label}" if s.label else ""
            print(
                f"  #{s.order}{label} region {s.region.data}[{s.region.offset}:"
                f"{s.region.offset + s.region.length}) work {s.work} "
                f"start {_fmt(sched.start[i])} finish {_fmt(sched.finish[i])}"
            )
    print(f"dependencies {len(sched.edges)}")
    print(f"makespan {_fmt(sched.makespan)}")
    return 0


# --------------------------------------------------------------------------
# argument parsing

def _add_run_inputs(p):
    p.add_argument("--coords", required=True)
    p.add_argument("--faces", required=True)
    p.add_argument("--flowmap", required=True)
    p.add_argument("--t-eval", type=float, required=True)
    p.add_argument("--dim", type=int, choices=(2, 3))
    p.add_argument("--max-workers", type=int)
    p.add_argument("--out-times")
    p.add_argument("--fill", type=float, default=FILL_VALUE, help="value for degenerate points (default -inf)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meshftle", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-mesh", help="structured triangle/tetrahedron grid")
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    for axis in "xyz":
        p.add_argument(f"--n{axis}", type=int, default=2)
        p.add_argument(f"--{axis}min", type=float, default=0.0)
        p.add_argument(f"--{axis}max", type=float, default=1.0)
    p.add_argument("--out-coords")
    p.add_argument("--out-faces")
    p.set_defaults(func=cmd_generate_mesh)

    p = sub.add_parser("generate-flowmap", help="advect mesh points through a synthetic flow")
    p.add_argument("--coords", required=True)
    p.add_argument("--faces", required=True)
    p.add_argument("--flow", required=True, choices=("identity", "affine", "double-gyre", "abc"))
    p.add_argument("--param", type=_param, action="append", help="flow parameter KEY=VALUE, e.g. A=0.1")
    p.add_argument("--matrix", type=_csv_numbers, help="affine matrix, row-major, comma-separated")
    p.add_argument("--offset", type=_csv_numbers)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=15.0)
    p.add_argument("--steps", type=int, default=150)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_flowmap)

    p = sub.add_parser("compute", help="preprocessing + FTLE on a worker pool")
    _add_run_inputs(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-field")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("bench", help="repeat compute and report per-stage times")
    _add_run_inputs(p)
    p.add_argument("--workers", type=_int_list, default=[1], help="comma-separated worker counts")
    p.add_argument("--repeats", type=int, default=30)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("simulate", help="makespan of sub-kernels on devices of given speeds")
    p.add_argument("--speeds", type=_speed_list, required=True)
    p.add_argument("--work", type=int)
    p.add_argument("--split", type=int)
    p.add_argument("--coords")
    p.add_argument("--faces")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FtleError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
