"""Monte Carlo estimator study for the d = 4 simulation configuration.

    python3 scripts/simulation_tables.py --tables 1 2 --replications 100 --threads 4

Each table prints average estimates and MSE next to the published values.
"""
import argparse
import time

from mgsn.bench import format_table, run_table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tables", type=int, nargs="+", default=[1, 2, 3, 4])
    ap.add_argument("--replications", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    for t in args.tables:
        t0 = time.perf_counter()
        res = run_table(t, args.replications, args.seed, args.threads)
        print(format_table(res))
        print(f"({time.perf_counter() - t0:.0f} s)\n")


if __name__ == "__main__":
    main()
