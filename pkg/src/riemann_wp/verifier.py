"""Verification workflows: loop-free bounds, invariant checks, cwp ratios, refutation."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .fo import (
    EncodingError, FCmp, FVar, entailment_formula, eval_fo_term, one_bounded_formula,
    strict_violation_formula,
)
from .printer import fmt_rational, pretty_expr
from .semantics import classify, eval_expr, has_inf, has_sup, substitute
from .solver import SolverConfig, SolverError, check_sat, check_validity, recheck_model
from .syntax import (
    ONE, Const, Expr, Seq, Stmt, While, free_vars, has_loop,
)
from .transformers import (
    DEFAULT_MAX_NODES, SizeLimitExceeded, TransformerKind, as_kind, char_fn_apply,
    transform, unfold,
)

VERIFIED, REFUTED, UNKNOWN = "Verified", "Refuted", "Unknown"
EXIT_CODES = {VERIFIED: 0, REFUTED: 1, UNKNOWN: 2}


class VerifierError(Exception):
    """Precondition violations: polarity, nesting, 1-boundedness."""


@dataclass
class Verdict:
    status: str
    witness: Optional[dict] = None
    reason: str = ""
    kind: Optional[str] = None
    n: Optional[int] = None
    query_nodes: int = 0
    solver_time_ms: float = 0.0
    assumptions: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def verified(self) -> bool:
        return self.status == VERIFIED

    @property
    def refuted(self) -> bool:
        return self.status == REFUTED

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def absorb(self, sv):
        self.query_nodes += sv.query_nodes
        self.solver_time_ms += sv.time_ms

    def to_json(self) -> dict:
        out = {
            "status": self.status,
            "N": self.n,
            "kind": self.kind,
            "solver_time_ms": round(self.solver_time_ms, 3),
            "query_nodes": self.query_nodes,
            "assumptions": list(self.assumptions),
        }
        if self.witness is not None:
            out["witness"] = {k: fmt_rational(v) for k, v in sorted(self.witness.items())}
        if self.reason:
            out["reason"] = self.reason
        if self.details:
            out["details"] = self.details
        return out


@dataclass
class CwpBoundReport:
    """cwp[loop](f) <= I / J wherever J > 0, with both invariants verified."""
    numerator: Expr
    denominator: Expr
    n: int
    n_wlp: int
    side_condition: str
    numerator_verdict: Verdict
    denominator_verdict: Verdict

    status = VERIFIED

    @property
    def exit_code(self) -> int:
        return 0

    @property
    def ratio(self) -> str:
        return f"({pretty_expr(self.numerator)}) / ({pretty_expr(self.denominator)})"

    @property
    def assumptions(self) -> list:
        return self.numerator_verdict.assumptions + self.denominator_verdict.assumptions

    def to_json(self) -> dict:
        a, b = self.numerator_verdict, self.denominator_verdict
        return {
            "status": VERIFIED,
            "N": self.n,
            "N_wlp": self.n_wlp,
            "bound": self.ratio,
            "side_condition": self.side_condition,
            "solver_time_ms": round(a.solver_time_ms + b.solver_time_ms, 3),
            "query_nodes": a.query_nodes + b.query_nodes,
            "assumptions": self.assumptions,
        }


# ------------------------------------------------------------------ helpers

def _state_part(model: dict, names) -> dict:
    return {v: model[v] for v in names if v in model}


def _eval_gap(lhs: Expr, rhs: Expr, state: dict, grid: int, funcs) -> Optional[bool]:
    """True if sampling proves lhs(s) > rhs(s).

    Sampling a sup under-approximates it and sampling an inf
    over-approximates it, so the test is sound for inf-free lhs and sup-free
    rhs.  None when evaluation is impossible.
    """
    env = dict(state)
    for v in free_vars(lhs) | free_vars(rhs):
        env.setdefault(v, Fraction(0))
    try:
        a = eval_expr(lhs, env, grid, funcs).lo
        b = eval_expr(rhs, env, grid, funcs).lo
    except Exception:
        return None
    return a > b


def _recompute(query, model, funcs=None) -> Optional[dict]:
    """Redo result-variable definitions in an approximate model, then re-check it."""
    env = dict(model)
    for h in query.hyps:
        defines = isinstance(h, FCmp) and h.op == "=" and isinstance(h.left, FVar)
        if defines and h.left.name in query.result_vars:
            try:
                env[h.left.name] = eval_fo_term(h.right, env, funcs)
            except Exception:
                return None
    return env if recheck_model(query, env, funcs) else None


def _entailment(lhs: Expr, rhs: Expr, kind, n, decls, config, funcs, verdict: Verdict,
                what: str) -> Verdict:
    """Decide lhs <= rhs; fill ``verdict`` in place."""
    try:
        q = entailment_formula(lhs, rhs)
    except EncodingError as exc:
        raise VerifierError(f"{what}: {exc}") from exc
    try:
        sv = check_validity(q, decls, config)
    except SolverError as exc:
        verdict.status, verdict.reason = UNKNOWN, f"solver error: {exc}"
        return verdict
    verdict.absorb(sv)
    if sv.valid:
        verdict.status = VERIFIED
        return verdict
    if sv.status == "unknown":
        verdict.status, verdict.reason = UNKNOWN, sv.reason
        return verdict
    state = _state_part(sv.model, q.state_vars)
    certified = None
    if not decls:
        if sv.exact_model:
            certified = "exact model re-check"
        elif _recompute(q, sv.model) is not None:
            certified = "rounded model re-check"
    if certified is None and (not decls or funcs):
        if _eval_gap(lhs, rhs, state, max(2, n or 1), funcs):
            certified = "endpoint evaluation"
    if certified is None:
        verdict.status = UNKNOWN
        verdict.reason = ("counterexample not provable from the domain axioms alone" if decls
                          else "solver counterexample could not be certified")
        verdict.details["candidate_state"] = {k: fmt_rational(v) for k, v in state.items()}
        return verdict
    verdict.status = REFUTED
    verdict.witness = state
    verdict.details["certificate"] = certified
    return verdict


def _one_bounded(f: Expr, label, decls, config, assume_bounded, verdict: Verdict) -> bool:
    """Establish f <= 1 or record the assumption; False means give up (Unknown)."""
    q = one_bounded_formula(f)
    try:
        sv = check_validity(q, decls, config)
    except SolverError as exc:
        sv = None
        reason = str(exc)
    if sv is not None:
        verdict.absorb(sv)
        if sv.valid:
            return True
        reason = sv.reason or ("exceeds 1 at some state" if sv.invalid else "undecided")
        if sv.invalid and not decls:
            raise VerifierError(f"{label} is not 1-bounded "
                                f"(e.g. at {_fmt_state(_state_part(sv.model, q.state_vars))})")
    if assume_bounded:
        verdict.assumptions.append(f"{label} assumed 1-bounded ({reason})")
        return True
    verdict.status = UNKNOWN
    verdict.reason = f"1-boundedness of {label} not established ({reason}); pass assume_bounded to assume it"
    return False


def _fmt_state(s: dict) -> str:
    return ", ".join(f"{k}={fmt_rational(v)}" for k, v in sorted(s.items()))


def _check_qf(expr: Expr, label: str):
    if classify(expr) != "quantifier_free":
        raise VerifierError(f"{label} must be quantifier-free")


# ------------------------------------------------------------------ loop-free

def check_bound_loopfree(direction: str, kind, prog: Stmt, f: Expr, g: Expr, n: int = None,
                         decls=None, config: SolverConfig = None, funcs=None,
                         assume_bounded: bool = False,
                         max_nodes: int = DEFAULT_MAX_NODES) -> Verdict:
    """Check ``T(prog)(f) <= g`` (upper) or ``g <= T(prog)(f)`` (lower).

    With kind uwp/uwlp an upper Verified verdict bounds the exact wp/wlp from
    above; lwp/lwlp with lower bounds it from below.  Other combinations
    only speak about the Riemann sum and are flagged as such.
    """
    if direction not in ("upper", "lower"):
        raise ValueError("direction must be 'upper' or 'lower'")
    kind = as_kind(kind, n)
    if has_loop(prog):
        raise VerifierError("program contains a loop; use an invariant check or refutation")
    v = Verdict(UNKNOWN, kind=kind.name, n=kind.n)
    if (direction == "upper") == kind.lower:
        v.assumptions.append(f"{kind.name} with an {direction} bound constrains only the Riemann sum")
    if direction == "upper" and has_inf(f):
        raise VerifierError("upper bound: f must be inf-free")
    if direction == "upper" and has_sup(g):
        raise VerifierError("upper bound: g must be sup-free")
    if direction == "lower" and has_sup(f):
        raise VerifierError("lower bound: f must be sup-free")
    if direction == "lower" and has_inf(g):
        raise VerifierError("lower bound: g must be inf-free")
    if kind.liberal:
        if not _one_bounded(f, "post-expectation", decls, config, assume_bounded, v):
            return v
        if not _one_bounded(g, "bound", decls, config, assume_bounded, v):
            return v
    t = transform(kind, prog, f, max_nodes=max_nodes)
    if direction == "upper":
        return _entailment(t, g, kind, kind.n, decls, config, funcs, v, "upper bound")
    return _entailment(g, t, kind, kind.n, decls, config, funcs, v, "lower bound")


# ------------------------------------------------------------------ invariants

def _loop_of(loop) -> While:
    if isinstance(loop, While):
        if has_loop(loop.body):
            raise VerifierError("nested loops are not supported")
        return loop
    raise VerifierError("expected a single while loop")


def check_superinvariant(n: int, loop: While, post: Expr, inv: Expr, decls=None,
                         config: SolverConfig = None, funcs=None,
                         max_nodes: int = DEFAULT_MAX_NODES) -> Verdict:
    """Phi_uwp(inv) <= inv, which gives wp[loop](post) <= inv."""
    loop = _loop_of(loop)
    _check_qf(inv, "invariant")
    if has_inf(post):
        raise VerifierError("post-expectation must be inf-free")
    kind = TransformerKind("uwp", n)
    phi = char_fn_apply(kind, loop, post, inv, max_nodes=max_nodes)
    v = Verdict(UNKNOWN, kind="uwp", n=n)
    return _entailment(phi, inv, kind, n, decls, config, funcs, v, "superinvariant")


def check_subinvariant_wlp(n: int, loop: While, post: Expr, inv: Expr, decls=None,
                           config: SolverConfig = None, funcs=None,
                           assume_bounded: bool = False,
                           max_nodes: int = DEFAULT_MAX_NODES) -> Verdict:
    """inv <= Phi_lwlp(inv), which gives inv <= wlp[loop](post).

    Both ``inv`` and ``post`` must be 1-bounded.  This is proved by the solver
    when possible; with domain symbols a failed proof can be replaced by an
    explicit assumption (``assume_bounded``) recorded in the verdict.
    """
    loop = _loop_of(loop)
    _check_qf(inv, "invariant")
    if has_sup(post):
        raise VerifierError("post-expectation must be sup-free")
    kind = TransformerKind("lwlp", n)
    v = Verdict(UNKNOWN, kind="lwlp", n=n)
    if not _one_bounded(post, "post-expectation", decls, config, assume_bounded, v):
        return v
    if not _one_bounded(inv, "invariant", decls, config, assume_bounded, v):
        return v
    phi = char_fn_apply(kind, loop, post, inv, max_nodes=max_nodes)
    return _entailment(inv, phi, kind, n, decls, config, funcs, v, "subinvariant")


def cwp_upper_bound(loop: While, f: Expr, inv: Expr, n: int, inv_wlp: Expr, n_wlp: int,
                    decls=None, config: SolverConfig = None, funcs=None,
                    assume_bounded: bool = False):
    """Upper bound on cwp[loop](f) as the ratio inv / inv_wlp.

    ``inv`` must be a uwp_n-superinvariant w.r.t. f and ``inv_wlp`` an
    lwlp_{n_wlp}-subinvariant w.r.t. 1.  Returns the failing Verdict if
    either check does not verify.
    """
    a = check_superinvariant(n, loop, f, inv, decls, config, funcs)
    if not a.verified:
        a.details["failed"] = "numerator"
        return a
    b = check_subinvariant_wlp(n_wlp, loop, ONE, inv_wlp, decls, config, funcs, assume_bounded)
    if not b.verified:
        b.details["failed"] = "denominator"
        return b
    side = f"{pretty_expr(inv_wlp)} > 0"
    return CwpBoundReport(inv, inv_wlp, n, n_wlp, side, a, b)


# ------------------------------------------------------------------ refutation

@dataclass(frozen=True)
class Budget:
    max_n: int = 64
    max_nodes: int = 200_000
    max_seconds: float = 600.0


def _pin(e: Expr, state: dict) -> Expr:
    for x, q in state.items():
        e = substitute(e, x, Const(q))
    return e


def _certify_gap(lo: Expr, hi: Expr, state: dict, c_lo, c_hi, decls, config, v: Verdict):
    """Prove lo(s) <= c_lo < c_hi <= hi(s) with the state fixed; returns a method name or None."""
    if c_lo is None or c_hi is None or not c_lo < c_hi:
        return None
    lo_s, hi_s = _pin(lo, state), _pin(hi, state)
    if free_vars(lo_s) or free_vars(hi_s):
        return None
    for a, b in ((lo_s, Const(c_lo)), (Const(c_hi), hi_s)):
        sv = check_validity(entailment_formula(a, b), decls, config)
        v.absorb(sv)
        if not sv.valid:
            return None
    return "pinned-state entailments"


def _unrolled(kind_name, prog, f, n, cap):
    """Riemann transform of the deepest unrolling (depth <= n) that fits the size cap.

    Any depth gives a sound bound in the refutation direction, so the depth
    is halved rather than giving up when the full unrolling is too large.
    """
    depth = n if has_loop(prog) else 1
    while depth >= 1:
        try:
            return transform(TransformerKind(kind_name, n), unfold(prog, depth), f, max_nodes=cap), \
                (n if not has_loop(prog) else depth)
        except SizeLimitExceeded:
            depth //= 2
    return None, 0


def _refute(kind_name, prog, f, g, budget, decls, config, funcs, upper_side_is_transform):
    budget = budget or Budget()
    config = config or SolverConfig()
    start = time.monotonic()
    v = Verdict(UNKNOWN, kind=kind_name)
    n = 1
    tried = []
    while n <= budget.max_n:
        remaining = budget.max_seconds - (time.monotonic() - start)
        if remaining <= 0:
            break
        cfg = SolverConfig(config.path, min(config.timeout, max(1.0, remaining)), config.logic,
                           config.seed, config.debug_dir, config.cse, config.strategy)
        t, depth = _unrolled(kind_name, prog, f, n, budget.max_nodes)
        if t is None:
            v.reason = f"budget: expression size cap {budget.max_nodes} reached at n={n}"
            v.details["tried_n"] = tried
            return v
        lo, hi = (g, t) if upper_side_is_transform else (t, g)
        q = strict_violation_formula(lo, hi)
        try:
            sv = check_sat(q, decls, cfg)
        except SolverError as exc:
            v.reason = f"solver error: {exc}"
            return v
        v.absorb(sv)
        tried.append(n if depth == n else [n, depth])
        if sv.status == "sat":
            state = _state_part(sv.model, q.state_vars)
            c_lo, c_hi = (sv.model.get(c) for c in q.result_vars)
            method = _certify_gap(lo, hi, state, c_lo, c_hi, decls, cfg, v)
            exact_eval = classify(lo) == classify(hi) == "quantifier_free" and (not decls or funcs)
            if method is None and exact_eval and _eval_gap(hi, lo, state, 1, funcs):
                method = "exact evaluation"
            if method is not None:
                v.status, v.witness, v.n = REFUTED, state, n
                v.details.update(certificate=method, tried_n=tried, depth=depth)
                v.details["values"] = _values(lo, hi, state, funcs)
                return v
        n *= 2
    last = tried[-1] if tried else 0
    v.reason = f"budget: no violation found up to n={last[0] if isinstance(last, list) else last}"
    v.details["tried_n"] = tried
    return v


def _values(lo, hi, state, funcs) -> dict:
    env = dict(state)
    for x in free_vars(lo) | free_vars(hi):
        env.setdefault(x, Fraction(0))
    out = {}
    for name, e in (("lower_side", lo), ("upper_side", hi)):
        try:
            enc = eval_expr(e, env, 1, funcs)
            out[name] = fmt_rational(enc.lo) + ("" if enc.exact else " (sampled)")
        except Exception:
            pass
    return out


def refute_upper_bound(prog: Stmt, f: Expr, g: Expr, budget: Budget = None, decls=None,
                       config: SolverConfig = None, funcs=None) -> Verdict:
    """Search for a state with g < lwp_n(unfold(prog, n))(f), n = 1, 2, 4, ...

    Such a state refutes wp[prog](f) <= g because lwp of an unrolling
    bounds wp from below.
    """
    if has_sup(f):
        raise VerifierError("refutation of an upper bound needs a sup-free post-expectation")
    if has_inf(g):
        raise VerifierError("refutation of an upper bound needs an inf-free bound")
    return _refute("lwp", prog, f, g, budget, decls, config, funcs, True)


def refute_lower_bound_wlp(prog: Stmt, f: Expr, g: Expr, budget: Budget = None, decls=None,
                           config: SolverConfig = None, funcs=None,
                           assume_bounded: bool = False) -> Verdict:
    """Search for a state with uwlp_n(unfold(prog, n))(f) < g, refuting g <= wlp[prog](f)."""
    if has_inf(f):
        raise VerifierError("refutation of a wlp lower bound needs an inf-free post-expectation")
    if has_sup(g):
        raise VerifierError("refutation of a wlp lower bound needs a sup-free bound")
    pre = Verdict(UNKNOWN, kind="uwlp")
    for e, label in ((f, "post-expectation"), (g, "bound")):
        if not _one_bounded(e, label, decls, config or SolverConfig(), assume_bounded, pre):
            return pre
    v = _refute("uwlp", prog, f, g, budget, decls, config, funcs, False)
    v.assumptions = pre.assumptions + v.assumptions
    v.query_nodes += pre.query_nodes
    v.solver_time_ms += pre.solver_time_ms
    return v


# ------------------------------------------------------------ whole programs

def _flatten(c: Stmt) -> list:
    if isinstance(c, Seq):
        return _flatten(c.first) + _flatten(c.second)
    return [c]


def verify_program(prog: Stmt, f: Expr, g: Expr, n: int, decls=None,
                   config: SolverConfig = None, funcs=None,
                   max_nodes: int = DEFAULT_MAX_NODES) -> Verdict:
    """wp[prog](f) <= g for a sequence of loop-free blocks and annotated loops.

    Statements are processed back to front.  Loop-free blocks are pushed
    through uwp_n, and each loop is replaced by its ``@invariant`` once that
    invariant is verified as a superinvariant for the current
    post-expectation.  The final bound is checked by one entailment.
    """
    parts = _flatten(prog)
    post = f
    v = Verdict(UNKNOWN, kind="uwp", n=n)
    block = []

    def flush():
        nonlocal post, block
        if block:
            seq = block[0]
            for c in block[1:]:
                seq = Seq(seq, c)
            post = transform(TransformerKind("uwp", n), seq, post, max_nodes=max_nodes)
            block = []

    for c in reversed(parts):
        if isinstance(c, While):
            flush()
            if c.invariant is None:
                raise VerifierError("every loop needs an @invariant annotation")
            lv = check_superinvariant(n, c, post, c.invariant, decls, config, funcs, max_nodes)
            v.query_nodes += lv.query_nodes
            v.solver_time_ms += lv.solver_time_ms
            if not lv.verified:
                lv.details["loop"] = pretty_expr(c.invariant)
                lv.query_nodes, lv.solver_time_ms = v.query_nodes, v.solver_time_ms
                return lv
            post = c.invariant
        elif has_loop(c):
            raise VerifierError("loops must appear at the top level of the program")
        else:
            block.insert(0, c)
    flush()
    return _entailment(post, g, TransformerKind("uwp", n), n, decls, config, funcs, v, "program bound")


__all__ = [
    "Budget", "CwpBoundReport", "Verdict", "VerifierError", "VERIFIED", "REFUTED", "UNKNOWN",
    "check_bound_loopfree", "check_superinvariant", "check_subinvariant_wlp", "cwp_upper_bound",
    "refute_upper_bound", "refute_lower_bound_wlp", "verify_program",
]
