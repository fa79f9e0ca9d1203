"""Evaluation, substitution and prenex normal form for syntactic expectations."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional

from .syntax import (
    FRESH_MARK, Add, And, App, BoolLit, Cmp, Const, Expr, Implies, Inf,
    Iverson, Monus, Mul, Not, Or, Quant, Scale, Sum, Sup, Term, Var,
    bound_vars, free_vars, plus, scale, term_vars,
)


class EvalError(Exception):
    pass


State = Mapping[str, Fraction]
Funcs = Optional[Mapping[str, Callable]]


def make_state(values) -> dict:
    """Build a state from a mapping, converting values to exact rationals."""
    out = {}
    for k, v in dict(values).items():
        q = Fraction(v) if not isinstance(v, Fraction) else v
        if q < 0:
            raise ValueError(f"state value {k}={q} is negative")
        out[k] = q
    return out


@dataclass(frozen=True)
class Enclosure:
    lo: Fraction
    hi: Fraction
    exact: bool

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("enclosure with lo > hi")
        if self.exact and self.lo != self.hi:
            raise ValueError("exact enclosure must be a point")

    @property
    def value(self) -> Fraction:
        return self.lo


# ------------------------------------------------------------------ evaluation

def eval_term(t: Term, s: State, funcs: Funcs = None) -> Fraction:
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        try:
            return s[t.name]
        except KeyError:
            raise EvalError(f"variable {t.name!r} missing from state") from None
    if isinstance(t, Add):
        return eval_term(t.left, s, funcs) + eval_term(t.right, s, funcs)
    if isinstance(t, Monus):
        d = eval_term(t.left, s, funcs) - eval_term(t.right, s, funcs)
        return d if d > 0 else Fraction(0)
    if isinstance(t, Mul):
        return eval_term(t.left, s, funcs) * eval_term(t.right, s, funcs)
    if isinstance(t, App):
        if not funcs or t.func not in funcs:
            raise EvalError(f"no interpretation for function {t.func!r}")
        return Fraction(funcs[t.func](*[eval_term(a, s, funcs) for a in t.args]))
    raise TypeError(t)


_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def eval_guard(g, s: State, funcs: Funcs = None) -> bool:
    if isinstance(g, Cmp):
        return _CMP[g.op](eval_term(g.left, s, funcs), eval_term(g.right, s, funcs))
    if isinstance(g, Not):
        return not eval_guard(g.arg, s, funcs)
    if isinstance(g, And):
        return eval_guard(g.left, s, funcs) and eval_guard(g.right, s, funcs)
    if isinstance(g, Or):
        return eval_guard(g.left, s, funcs) or eval_guard(g.right, s, funcs)
    if isinstance(g, Implies):
        return (not eval_guard(g.left, s, funcs)) or eval_guard(g.right, s, funcs)
    if isinstance(g, BoolLit):
        return g.value
    raise TypeError(g)


def sample_points(lo: Fraction, hi: Fraction, grid: int) -> list:
    """``grid + 1`` equally spaced points of [lo, hi], endpoints included."""
    if lo == hi:
        return [lo]
    step = (hi - lo) / grid
    return [lo + k * step for k in range(grid + 1)]


def _eval(f: Expr, s: dict, grid: int, funcs) -> tuple:
    if isinstance(f, Term):
        return eval_term(f, s, funcs), True
    if isinstance(f, Iverson):
        if not eval_guard(f.guard, s, funcs):
            return Fraction(0), True
        return _eval(f.body, s, grid, funcs)
    if isinstance(f, Scale):
        v, ex = _eval(f.body, s, grid, funcs)
        return f.factor * v, ex
    if isinstance(f, Sum):
        a, ea = _eval(f.left, s, grid, funcs)
        b, eb = _eval(f.right, s, grid, funcs)
        return a + b, ea and eb
    if isinstance(f, Quant):
        saved = s.get(f.var, None)
        had = f.var in s
        vals = []
        for p in sample_points(f.lo, f.hi, grid):
            s[f.var] = p
            vals.append(_eval(f.body, s, grid, funcs)[0])
        if had:
            s[f.var] = saved
        else:
            del s[f.var]
        return (max(vals) if isinstance(f, Sup) else min(vals)), False
    raise TypeError(f)


def eval_expr(f: Expr, s: State, grid: int = 1, funcs: Funcs = None) -> Enclosure:
    """Evaluate ``f`` at ``s``.

    Quantifier-free input is evaluated exactly.  A sup (inf) is estimated by
    the max (min) over ``grid + 1`` equally spaced points of its interval;
    such results are flagged ``exact=False`` and under-approximate a sup
    (over-approximate an inf).
    """
    if grid < 1:
        raise ValueError("grid must be positive")
    v, exact = _eval(f, dict(s), grid, funcs)
    return Enclosure(v, v, exact)


def eval_value(f: Expr, s: State, grid: int = 1, funcs: Funcs = None) -> Fraction:
    return eval_expr(f, s, grid, funcs).lo


# ---------------------------------------------------------------- substitution

def base_name(name: str) -> str:
    return name.split(FRESH_MARK, 1)[0]


def fresh_name(base: str, avoid) -> str:
    base = base_name(base)
    k = 1
    while f"{base}{FRESH_MARK}{k}" in avoid:
        k += 1
    return f"{base}{FRESH_MARK}{k}"


def subst_term(t: Term, x: str, r: Term) -> Term:
    if isinstance(t, Var):
        return r if t.name == x else t
    if isinstance(t, Const):
        return t
    if isinstance(t, (Add, Monus, Mul)):
        left = subst_term(t.left, x, r)
        right = subst_term(t.right, x, r)
        if left is t.left and right is t.right:
            return t
        return type(t)(left, right)
    if isinstance(t, App):
        return App(t.func, tuple(subst_term(a, x, r) for a in t.args))
    raise TypeError(t)


def subst_guard(g, x: str, r: Term):
    if isinstance(g, Cmp):
        return Cmp(g.op, subst_term(g.left, x, r), subst_term(g.right, x, r))
    if isinstance(g, Not):
        return Not(subst_guard(g.arg, x, r))
    if isinstance(g, (And, Or, Implies)):
        return type(g)(subst_guard(g.left, x, r), subst_guard(g.right, x, r))
    if isinstance(g, BoolLit):
        return g
    raise TypeError(g)


def substitute(f: Expr, x: str, t: Term) -> Expr:
    """Capture-avoiding ``f[x/t]``; clashing binders get fresh ``#k`` names."""
    return _subst(f, x, t, term_vars(t))


def _subst(f: Expr, x: str, t: Term, tvars: set) -> Expr:
    if isinstance(f, Term):
        return subst_term(f, x, t)
    if isinstance(f, Iverson):
        return Iverson(subst_guard(f.guard, x, t), _subst(f.body, x, t, tvars))
    if isinstance(f, Scale):
        return Scale(f.factor, _subst(f.body, x, t, tvars))
    if isinstance(f, Sum):
        return Sum(_subst(f.left, x, t, tvars), _subst(f.right, x, t, tvars))
    if isinstance(f, Quant):
        if f.var == x or x not in free_vars(f.body):
            return f
        v, body = f.var, f.body
        if v in tvars:
            nv = fresh_name(v, tvars | free_vars(body) | bound_vars(body) | {x})
            body = _subst(body, v, Var(nv), {nv})
            v = nv
        return type(f)(v, f.lo, f.hi, _subst(body, x, t, tvars))
    raise TypeError(f)


def rename_binder(q: Quant, new: str) -> Quant:
    return type(q)(new, q.lo, q.hi, substitute(q.body, q.var, Var(new)))


# ------------------------------------------------------------- classification

def has_sup(f: Expr) -> bool:
    return _has(f, Sup)


def has_inf(f: Expr) -> bool:
    return _has(f, Inf)


def _has(f, cls) -> bool:
    if isinstance(f, cls):
        return True
    if isinstance(f, (Iverson, Scale, Quant)):
        return _has(f.body, cls)
    if isinstance(f, Sum):
        return _has(f.left, cls) or _has(f.right, cls)
    return False


def classify(f: Expr) -> str:
    """One of quantifier_free, sup_free, inf_free, mixed."""
    s, i = has_sup(f), has_inf(f)
    if not s and not i:
        return "quantifier_free"
    if s and i:
        return "mixed"
    return "inf_free" if s else "sup_free"


# ----------------------------------------------------------------------- PNF

def rename_apart(f: Expr, avoid=None) -> Expr:
    """Give every binder a name distinct from all free variables and other binders."""
    used = set(free_vars(f)) if avoid is None else set(avoid) | free_vars(f)
    return _apart(f, used)


def _apart(f: Expr, used: set) -> Expr:
    if isinstance(f, Term):
        return f
    if isinstance(f, Iverson):
        return Iverson(f.guard, _apart(f.body, used))
    if isinstance(f, Scale):
        return Scale(f.factor, _apart(f.body, used))
    if isinstance(f, Sum):
        left = _apart(f.left, used)
        return Sum(left, _apart(f.right, used))
    if isinstance(f, Quant):
        v, body = f.var, f.body
        if v in used:
            nv = fresh_name(v, used | free_vars(body) | bound_vars(body))
            body = substitute(body, v, Var(nv))
            v = nv
        used.add(v)
        return type(f)(v, f.lo, f.hi, _apart(body, used))
    raise TypeError(f)


def split_prefix(f: Expr) -> tuple:
    """Split a PNF expression into its binder prefix and matrix."""
    prefix = []
    while isinstance(f, Quant):
        prefix.append((type(f), f.var, f.lo, f.hi))
        f = f.body
    return prefix, f


def with_prefix(prefix, matrix: Expr) -> Expr:
    for cls, v, lo, hi in reversed(prefix):
        matrix = cls(v, lo, hi, matrix)
    return matrix


def _hoist(f: Expr) -> tuple:
    if isinstance(f, Term):
        return [], f
    if isinstance(f, Iverson):
        p, m = _hoist(f.body)
        return p, Iverson(f.guard, m)
    if isinstance(f, Scale):
        p, m = _hoist(f.body)
        return p, scale(f.factor, m)
    if isinstance(f, Sum):
        pa, ma = _hoist(f.left)
        pb, mb = _hoist(f.right)
        return pa + pb, plus(ma, mb)
    if isinstance(f, Quant):
        p, m = _hoist(f.body)
        return [(type(f), f.var, f.lo, f.hi)] + p, m
    raise TypeError(f)


def to_pnf(f: Expr) -> Expr:
    """Equivalent expression with all sup/inf binders outermost.

    Binders are first renamed apart; then quantifiers are pulled out of
    sums, scalings and Iverson products.  Each step is sound because the
    binder does not occur in the sibling operand, scaling factors are
    nonnegative, and ``[g] * Q v. h`` equals ``Q v. [g] * h`` both when g
    holds and when it does not (the quantifier over an all-zero body is 0).
    """
    if not (has_sup(f) or has_inf(f)):
        return f
    p, m = _hoist(rename_apart(f))
    return with_prefix(p, m)


def is_pnf(f: Expr) -> bool:
    _, m = split_prefix(f)
    return not (has_sup(m) or has_inf(m))
