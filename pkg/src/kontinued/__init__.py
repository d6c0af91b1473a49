"""Certification and mining of generalized continued-fraction identities."""

from kontinued.cf_core import GCF, ConvergenceReport, Poly, Status, TermRule, converge, eval_backward, eval_lentz, parse_cf
from kontinued.identities import IdentityId, Verdict, convergence_compare, verify
from kontinued.pslq import match_value, pslq

__version__ = "0.1.0"

__all__ = [
    "GCF",
    "ConvergenceReport",
    "IdentityId",
    "Poly",
    "Status",
    "TermRule",
    "Verdict",
    "converge",
    "convergence_compare",
    "eval_backward",
    "eval_lentz",
    "match_value",
    "parse_cf",
    "pslq",
    "verify",
]
