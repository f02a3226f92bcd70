"""Run the acceptance gate and print one pass/fail line per criterion.

    python3 scripts/run_acceptance.py           # all ten criteria (tables take minutes)
    python3 scripts/run_acceptance.py --quick   # skip the two table reproductions
"""
import argparse
import pathlib
import sys

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    argv = [str(ROOT / "tests" / "test_acceptance.py"), "-q", "-p", "no:cacheprovider", "--rootdir", str(ROOT)]
    if args.quick:
        argv += ["-m", "not slow"]
    return pytest.main(argv)


if __name__ == "__main__":
    sys.exit(main())
