"""Command-line interface: eval, verify, mine, pslq, db build, db lookup.

Exit codes: 0 success, 1 verdict failure or non-convergence, 2 usage or
parse error, 3 numeric domain error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path

import gmpy2

from kontinued import constdb, identities, miner
from kontinued import numerics as nu
from kontinued.cf_core import CFError, converge, eval_backward, parse_cf
from kontinued.expr import ExprError, as_value
from kontinued.pslq import PrecisionTooLow, pslq

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3


@dataclass
class Config:
    default_prec: int = 256
    confirm_prec: int = 1024
    n_max_depth: int = 2**20
    db_path: str | None = None
    threads: int = 1

    def __post_init__(self):
        for name in ("default_prec", "confirm_prec"):
            if getattr(self, name) < nu.MIN_PREC:
                raise ValueError(f"{name} must be >= {nu.MIN_PREC}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.n_max_depth < 1:
            raise ValueError("n_max_depth must be >= 1")

    @classmethod
    def from_file(cls, path) -> Config:
        """Read ``key = value`` lines; ``#`` starts a comment."""
        kinds = {f.name: f.type for f in dataclasses.fields(cls)}
        values = {}
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in kinds:
                raise ValueError(f"{path}:{lineno}: expected one of {', '.join(kinds)} as key=value")
            values[key] = value if key == "db_path" else int(value, 0)
        return cls(**values)


class UsageError(Exception):
    pass


def _digits(prec: int) -> int:
    return max(2, nu.digits_for(prec))


def _fmt(x, prec: int) -> str:
    if not gmpy2.is_finite(x):
        return str(x)
    return nu.to_digits(x, _digits(prec))


def _open_db(path, config: Config) -> constdb.ConstDB:
    path = path or config.db_path
    return constdb.load(path) if path else constdb.load_default()


# ---------------------------------------------------------------------------
# subcommands


def cmd_eval(args, config: Config, out) -> int:
    prec = args.prec or config.default_prec
    cf = parse_cf(args.literal, prec)
    if args.depth:
        value = eval_backward(cf, args.depth, prec)
        print(f"{_fmt(value, prec)}", file=out)
        print(f"depth={args.depth} status=FixedDepth", file=out)
        return EXIT_OK
    rep = converge(cf, prec, n_max=config.n_max_depth)
    print(_fmt(rep.value, prec), file=out)
    print(f"depth={rep.depth_used} status={rep.status} error={_fmt(rep.error_estimate, 74)}", file=out)
    return EXIT_OK if rep.ok else EXIT_FAIL


def _verify_params(args) -> dict:
    return {k: getattr(args, k) for k in ("alpha", "xi", "x", "z") if getattr(args, k) is not None}


def cmd_verify(args, config: Config, out) -> int:
    prec = args.prec
    if args.suite:
        if args.suite != "default":
            raise UsageError(f"unknown suite {args.suite!r}")
        cases = identities.run_suite(threads=args.threads or config.threads, prec=prec)
        for case in cases:
            print(case.describe(), file=out)
        n_pass = sum(c.passed for c in cases)
        print(f"{n_pass}/{len(cases)} Pass", file=out)
        return EXIT_OK if n_pass == len(cases) else EXIT_FAIL
    if not args.id:
        raise UsageError("verify needs --id or --suite")
    try:
        ident = identities.IdentityId.parse(args.id)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    params = _verify_params(args)
    prec = prec or config.default_prec
    if args.compare:
        rep = identities.convergence_compare(ident, params, prec)
        print(rep.describe(), file=out)
        return EXIT_OK
    case = identities.verify(ident, params, prec, n_max=config.n_max_depth)
    print(case.describe(), file=out)
    print(f"lhs={_fmt(case.lhs.value, prec)}", file=out)
    print(f"rhs={_fmt(case.rhs, prec)}", file=out)
    return EXIT_OK if case.passed else EXIT_FAIL


def cmd_mine(args, config: Config, out) -> int:
    space = miner.SPACES[args.space]
    db = _open_db(args.db, config)
    report = miner.mine(
        space,
        db,
        budget=args.budget,
        seed=args.seed,
        prec_confirm=args.prec_confirm or config.confirm_prec,
        threads=args.threads or config.threads,
    )
    text = report.to_text()
    out.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_pslq(args, config: Config, out) -> int:
    prec = args.prec or config.default_prec
    xs = [as_value(v, prec + nu.GUARD_BITS) for v in args.values]
    rel = pslq(xs, max_norm=args.max_norm, prec=prec)
    if rel.found:
        print(f"Found ({', '.join(str(c) for c in rel.coefficients)}) residual={nu.to_digits(rel.residual, 6)}", file=out)
    else:
        print(f"Exhausted: no relation with sup norm <= {args.max_norm} (norm bound {nu.to_digits(rel.norm_bound, 6)})", file=out)
    return EXIT_OK


def cmd_db_build(args, config: Config, out) -> int:
    source = args.source or constdb.base_source_path()
    db = constdb.build(source, args.prec)
    constdb.save(db, args.out)
    print(f"wrote {len(db)} constants at {db.prec} bits to {args.out}", file=out)
    return EXIT_OK


def cmd_db_lookup(args, config: Config, out) -> int:
    db = _open_db(args.db, config)
    y = float(as_value(args.value, 128))
    hits = db.prefilter_hits(y, args.tol)
    if not hits:
        print("no match", file=out)
        return EXIT_OK
    seen = set()
    for entry, p, q, r in sorted(hits, key=lambda h: (abs(h[1]) + abs(h[2]) + abs(h[3]), h[0].id)):
        key = (entry.id, p, q, r)
        if key in seen:
            continue
        seen.add(key)
        print(f"{entry.id}\t({q}*c + {r})/{p}\t{entry.expr.text}", file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kontinued", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a continued fraction literal")
    p.add_argument("literal", help='e.g. "cf(0; b(n)=1; a(n)=1)"')
    p.add_argument("--prec", type=int)
    p.add_argument("--depth", type=int, help="fixed depth instead of adaptive convergence")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="certify an identity or the default suite")
    p.add_argument("--id", help="eq1..eq9 or the identity name")
    p.add_argument("--alpha")
    p.add_argument("--xi")
    p.add_argument("--x")
    p.add_argument("--z")
    p.add_argument("--prec", type=int)
    p.add_argument("--suite", help="'default' runs the certification grid")
    p.add_argument("--threads", type=int)
    p.add_argument("--compare", action="store_true", help="convergence comparison (eq8, eq9)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("mine", help="random search for new identities")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--space", choices=sorted(miner.SPACES), default="default")
    p.add_argument("--db")
    p.add_argument("--prec-confirm", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="also write the report here")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("pslq", help="integer relation among values")
    p.add_argument("values", nargs="+", help="numbers or expressions such as 'ln(2)'")
    p.add_argument("--max-norm", type=int, default=1000)
    p.add_argument("--prec", type=int)
    p.set_defaults(func=cmd_pslq)

    p = sub.add_parser("db", help="constants database")
    dsub = p.add_subparsers(dest="db_command", required=True)
    q = dsub.add_parser("build", help="evaluate a source file into a database")
    q.add_argument("--source")
    q.add_argument("--out", required=True)
    q.add_argument("--prec", type=int, default=constdb.DB_PREC)
    q.set_defaults(func=cmd_db_build)
    q = dsub.add_parser("lookup", help="affine-image matches for a value")
    q.add_argument("value")
    q.add_argument("--db")
    q.add_argument("--tol", type=float, default=1e-9)
    q.set_defaults(func=cmd_db_lookup)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        config = Config.from_file(args.config) if args.config else Config()
        return args.func(args, config, out)
    except (UsageError, ExprError, constdb.DBParseError, PrecisionTooLow) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (nu.NumericsError, identities.ParamDomainError, CFError, ZeroDivisionError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
