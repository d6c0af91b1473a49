"""Blind search over small quadratic/linear CFs; the tanh(pi/4) CF shows up.

The target is cf(0; b(n)=n^2-2*n+2; a(n)=2*n-1). Its coefficients lie in
[-2, 2], which is exactly the "eq8" search space.
"""

import argparse

from kontinued import constdb, miner

TARGET = "cf(0; b(n)=n^2-2*n+2; a(n)=2*n-1)"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=3)
    parser.add_argument("--budget", type=int, default=30_000)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()

    report = miner.mine(miner.SPACES["eq8"], constdb.load_default(), budget=args.budget, seed=args.seed, threads=args.threads)
    print(report.to_text(), end="")
    hit = next((c for c in report.confirmed_list if c.cf.to_literal() == TARGET), None)
    if hit is None:
        print(f"\n{TARGET} not found; try a larger --budget")
        raise SystemExit(1)
    print(f"\nfound {TARGET} at draw {hit.first_index} ({hit.draws} draws map to it)")


if __name__ == "__main__":
    main()
