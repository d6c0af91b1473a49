"""Rebuild the bundled constants database from its source list."""

import argparse
import time

from kontinued import constdb


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--source", default=str(constdb.base_source_path()))
    parser.add_argument("--out", required=True)
    parser.add_argument("--prec", type=int, default=constdb.DB_PREC)
    args = parser.parse_args()

    t0 = time.perf_counter()
    db = constdb.build(args.source, args.prec)
    constdb.save(db, args.out)
    print(f"{len(db)} constants at {db.prec} bits -> {args.out} ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
