"""Throughput of the double-precision Lentz kernel, single core."""

import argparse

from kontinued import miner


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--calls", type=int, default=200_000)
    parser.add_argument("--depth", type=int, default=miner.DEFAULT_DEPTH)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    miner.benchmark(n_calls=1000, depth=args.depth)  # compile
    rates = [miner.benchmark(n_calls=args.calls, depth=args.depth, seed=k) for k in range(args.repeat)]
    print(f"depth {args.depth}, {args.calls} calls x {args.repeat}")
    print(f"best   {max(rates):>12,.0f} evals/s")
    print(f"median {sorted(rates)[len(rates) // 2]:>12,.0f} evals/s")


if __name__ == "__main__":
    main()
