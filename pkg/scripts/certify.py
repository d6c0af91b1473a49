"""Certify the default identity grid and print a per-identity summary."""

import argparse
import collections
import time

import gmpy2

from kontinued import identities


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--prec", type=int, help="override every case's precision")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("-v", "--verbose", action="store_true", help="print every case")
    args = parser.parse_args()

    t0 = time.perf_counter()
    cases = identities.run_suite(threads=args.threads, prec=args.prec)
    elapsed = time.perf_counter() - t0

    groups = collections.defaultdict(list)
    for case in cases:
        groups[case.id].append(case)
        if args.verbose:
            print(case.describe())
    print(f"{'identity':<26} {'pass':>6} {'max depth':>10} {'worst residual':>16}")
    for ident, group in groups.items():
        worst = max(c.residual for c in group)
        exp = "0" if worst == 0 else f"2^{float(gmpy2.log2(worst)):.0f}"
        depth = max(c.lhs.depth_used for c in group)
        print(f"{ident.value + ' ' + ident.name.lower():<26} {sum(c.passed for c in group):>3}/{len(group):<2} {depth:>10} {exp:>16}")
    print(f"{sum(c.passed for c in cases)}/{len(cases)} Pass in {elapsed:.2f} s")

    for ident, z in ((identities.IdentityId.TANH_CF, {"z": 1}), (identities.IdentityId.SUM_OF_PRODUCTS, {"alpha": 1})):
        print(identities.convergence_compare(ident, z, 256).describe())


if __name__ == "__main__":
    main()
