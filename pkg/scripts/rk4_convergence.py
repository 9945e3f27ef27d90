"""Step-size study of the RK4 integrator on the Double-Gyre."""
import argparse

import numpy as np

from meshftle.flows import advect, double_gyre
from meshftle.mesh import generate_grid_2d


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", default="75,150,300,600,1200")
    ap.add_argument("--reference", type=int, default=4800)
    args = ap.parse_args()
    P = generate_grid_2d(201, 101, (0.0, 2.0), (0.0, 1.0)).points
    spec = double_gyre()
    ref = advect(spec, P, 0.0, 15.0, args.reference)
    prev = None
    for n in map(int, args.steps.split(",")):
        fwd = advect(spec, P, 0.0, 15.0, n)
        err = np.abs(fwd - ref).max()
        back = np.abs(advect(spec, fwd, 15.0, 0.0, n) - P).max()
        ratio = "" if prev is None else f" ratio {prev / err:.2f}"
        print(f"steps {n:5d}: max error {err:.3e} round trip {back:.3e}{ratio}")
        prev = err


if __name__ == "__main__":
    main()
