"""Makespans of equal splits over mixed-speed devices, in exact rationals."""
import argparse

from meshftle.scheduler import simulate_schedule, split_submissions

CONFIGS = {
    "1 fast": [4],
    "2 fast": [4, 4],
    "2 fast + 2 slow": [4, 4, 1, 1],
    "2 slow": [1, 1],
    "4 slow": [1, 1, 1, 1],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--work", type=int, default=1000)
    args = ap.parse_args()
    for name, speeds in CONFIGS.items():
        subs = split_submissions(args.work, len(speeds))
        span = simulate_schedule(subs, dict(enumerate(speeds))).makespan
        print(f"{name:<16} speeds {speeds!s:<14} makespan {span} ({float(span):.2f})")


if __name__ == "__main__":
    main()
