"""Point and simplex counts of the benchmark grids, optionally materialised."""
import argparse
import time

from meshftle.mesh import generate_grid_2d, generate_grid_3d, grid_counts

GRIDS = {
    "2d": ((3162, 3162), lambda: generate_grid_2d(3162, 3162, (0, 2), (0, 1))),
    "3d": ((100, 100, 100), lambda: generate_grid_3d(100, 100, 100)),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--materialize", action="store_true", help="build the meshes, not just count")
    args = ap.parse_args()
    for name, (extents, build) in GRIDS.items():
        points, faces = grid_counts(extents)
        line = f"{name} {'x'.join(map(str, extents))}: points {points} faces {faces}"
        if args.materialize:
            t = time.perf_counter()
            m = build()
            line += f" | built {m.n_points} / {m.n_faces} in {time.perf_counter() - t:.1f}s"
        print(line)


if __name__ == "__main__":
    main()
