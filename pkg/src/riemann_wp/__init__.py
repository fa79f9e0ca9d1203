"""Lower and upper Riemann weakest pre-expectations for probabilistic programs
with continuous uniform sampling, checked with an external SMT solver."""

__version__ = "0.1.0"

from .parser import ParseError, parse_domain, parse_expectation, parse_guard, parse_program, parse_unit
from .printer import pretty, pretty_expr, pretty_guard
from .semantics import Enclosure, classify, eval_expr, eval_guard, eval_term, substitute, to_pnf
from .transformers import TransformerKind, char_fn_apply, encode_nondet, transform, unfold
from .fo import encode_expr, entailment_formula, strict_violation_formula
from .smtlib import emit_smtlib
from .solver import SolverConfig, check_one_bounded, check_sat, check_validity
from .verifier import (
    Budget, CwpBoundReport, Verdict, VerifierError, check_bound_loopfree, check_subinvariant_wlp,
    check_superinvariant, cwp_upper_bound, refute_lower_bound_wlp, refute_upper_bound,
    verify_program,
)
from .sim import Estimate, RunOutcome, estimate_wp, simulate

__all__ = [
    "ParseError", "parse_domain", "parse_expectation", "parse_guard", "parse_program", "parse_unit",
    "pretty", "pretty_expr", "pretty_guard",
    "Enclosure", "classify", "eval_expr", "eval_guard", "eval_term", "substitute", "to_pnf",
    "TransformerKind", "char_fn_apply", "encode_nondet", "transform", "unfold",
    "encode_expr", "entailment_formula", "strict_violation_formula", "emit_smtlib",
    "SolverConfig", "check_one_bounded", "check_sat", "check_validity",
    "Budget", "CwpBoundReport", "Verdict", "VerifierError", "check_bound_loopfree",
    "check_subinvariant_wlp", "check_superinvariant", "cwp_upper_bound",
    "refute_lower_bound_wlp", "refute_upper_bound", "verify_program",
    "Estimate", "RunOutcome", "estimate_wp", "simulate",
]
