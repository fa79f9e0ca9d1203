"""Solver check that an expectation and its prenex form entail each other.

The prenex side is handled like the entailment reduction does it (binders
become universal, or are summarised by a bound variable ``c``), while the
original side goes through the structural encoding with its own sup/inf
clauses, so the check does not reuse the prenex transformation.
"""

from riemann_wp.fo import (
    ZERO, FCmp, FForall, FImplies, FVar, Query, bounds_hyps, conj, encode_expr, forall, le,
    qf_to_fo,
)
from riemann_wp.semantics import has_inf, has_sup, rename_apart, split_prefix, to_pnf
from riemann_wp.solver import check_validity
from riemann_wp.syntax import bound_vars, free_vars


def _query(state, extra_consts, hyps, goal, result):
    hyps = [FCmp(">=", FVar(x), ZERO) for x in state] + list(hyps)
    consts = tuple(state) + tuple(extra_consts)
    return Query("valid", consts, tuple(hyps), goal, forall(consts, FImplies(conj(*hyps), goal)),
                 result, tuple(state))


def pointwise(f, g):
    """Query: for all w in the box, f <= N(w) (g = inf-prefix N) or N(w) <= f (g = sup-prefix N)."""
    prefix, m = split_prefix(g)
    ws = tuple(v for _, v, *_ in prefix)
    y = FVar("y#f")
    goal = le(y, qf_to_fo(m)) if has_inf(g) else le(qf_to_fo(m), y)
    return _query(sorted(free_vars(f)), ws + (y.name,),
                  bounds_hyps(prefix) + [encode_expr(f, y.name)], goal, (y.name,))


def summarised(f, g):
    """Query comparing f with the extremum of g through a bound variable c."""
    prefix, m = split_prefix(g)
    ws = tuple(v for _, v, *_ in prefix)
    y, c = FVar("y#f"), FVar("c#g")
    upper = has_sup(g)
    cmp_ = le(qf_to_fo(m), c) if upper else le(c, qf_to_fo(m))
    every = FForall(ws, FImplies(conj(*bounds_hyps(prefix)), cmp_)) if ws else cmp_
    goal = le(y, c) if upper else le(c, y)
    return _query(sorted(free_vars(f)), (y.name, c.name),
                  [encode_expr(f, y.name), every], goal, (y.name,))


def pnf_queries(f):
    """Both directions of f == to_pnf(f), for sup-only or inf-only f."""
    if has_sup(f) and has_inf(f):
        raise ValueError("mixed quantifiers are not covered")
    g = to_pnf(f)
    g = rename_apart(g, free_vars(f) | bound_vars(f) | free_vars(g))
    return pointwise(f, g), summarised(f, g)


def pnf_equivalent(f, config):
    """Status pair for the two directions ('valid', 'invalid' or 'unknown')."""
    return tuple(check_validity(q, config=config).status for q in pnf_queries(f))
