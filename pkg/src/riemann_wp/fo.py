"""First-order real-arithmetic formulas and the translation of expectations into them.

Terms use true subtraction; monus and Iverson brackets become conditional
values (``ite``).  Quantified expectations are encoded with an upper-bound
(lower-bound) clause plus a least-upper-bound (greatest-lower-bound) clause.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .semantics import (
    fresh_name, has_inf, has_sup, rename_apart, split_prefix, to_pnf,
)
from .syntax import (
    Add, And, App, BoolLit, Cmp, Const, Expr, Implies, Inf, Iverson, Monus,
    Mul, Not, Or, Quant, Scale, Sum, Sup, Term, Var, bound_vars, free_vars,
)


class EncodingError(Exception):
    pass


# ------------------------------------------------------------------ FO terms

class FTerm:
    __slots__ = ()


@dataclass(frozen=True)
class FConst(FTerm):
    value: Fraction


@dataclass(frozen=True)
class FVar(FTerm):
    name: str


@dataclass(frozen=True)
class FAdd(FTerm):
    args: tuple


@dataclass(frozen=True)
class FSub(FTerm):
    left: FTerm
    right: FTerm


@dataclass(frozen=True)
class FMul(FTerm):
    args: tuple


@dataclass(frozen=True)
class FIte(FTerm):
    cond: "Formula"
    then: FTerm
    orelse: FTerm


@dataclass(frozen=True)
class FApp(FTerm):
    func: str
    args: tuple


# ---------------------------------------------------------------- formulas

class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class FCmp(Formula):
    op: str  # one of < <= = >= >
    left: FTerm
    right: FTerm


@dataclass(frozen=True)
class FNot(Formula):
    arg: Formula


@dataclass(frozen=True)
class FAnd(Formula):
    args: tuple


@dataclass(frozen=True)
class FOr(Formula):
    args: tuple


@dataclass(frozen=True)
class FImplies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class FForall(Formula):
    vars: tuple
    body: Formula


@dataclass(frozen=True)
class FExists(Formula):
    vars: tuple
    body: Formula


@dataclass(frozen=True)
class FBool(Formula):
    value: bool


TRUE = FBool(True)
FALSE = FBool(False)
ZERO = FConst(Fraction(0))


def conj(*parts) -> Formula:
    flat = []
    for p in parts:
        if isinstance(p, FAnd):
            flat.extend(p.args)
        elif p != TRUE:
            flat.append(p)
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else FAnd(tuple(flat))


def forall(vs, body) -> Formula:
    vs = tuple(vs)
    return FForall(vs, body) if vs else body


def exists(vs, body) -> Formula:
    vs = tuple(vs)
    return FExists(vs, body) if vs else body


def le(a, b):
    return FCmp("<=", a, b)


def fvar(name):
    return FVar(name)


def fconst(q):
    return FConst(Fraction(q))


# --------------------------------------------------------- Expr -> FO terms

def term_to_fo(t: Term) -> FTerm:
    if isinstance(t, Const):
        return FConst(t.value)
    if isinstance(t, Var):
        return FVar(t.name)
    if isinstance(t, Add):
        return FAdd((term_to_fo(t.left), term_to_fo(t.right)))
    if isinstance(t, Mul):
        return FMul((term_to_fo(t.left), term_to_fo(t.right)))
    if isinstance(t, Monus):
        a, b = term_to_fo(t.left), term_to_fo(t.right)
        return FIte(FCmp(">=", a, b), FSub(a, b), ZERO)
    if isinstance(t, App):
        return FApp(t.func, tuple(term_to_fo(a) for a in t.args))
    raise TypeError(t)


_GUARD_OPS = {"<": "<", "<=": "<=", "==": "=", ">": ">", ">=": ">="}


def guard_to_fo(g) -> Formula:
    if isinstance(g, Cmp):
        a, b = term_to_fo(g.left), term_to_fo(g.right)
        if g.op == "!=":
            return FNot(FCmp("=", a, b))
        return FCmp(_GUARD_OPS[g.op], a, b)
    if isinstance(g, Not):
        return FNot(guard_to_fo(g.arg))
    if isinstance(g, And):
        return FAnd((guard_to_fo(g.left), guard_to_fo(g.right)))
    if isinstance(g, Or):
        return FOr((guard_to_fo(g.left), guard_to_fo(g.right)))
    if isinstance(g, Implies):
        return FImplies(guard_to_fo(g.left), guard_to_fo(g.right))
    if isinstance(g, BoolLit):
        return FBool(g.value)
    raise TypeError(g)


def fadd(args) -> FTerm:
    """Flattened sum with constants folded."""
    flat, c = [], Fraction(0)
    for a in args:
        for b in (a.args if isinstance(a, FAdd) else (a,)):
            if isinstance(b, FConst):
                c += b.value
            else:
                flat.append(b)
    if c or not flat:
        flat.append(FConst(c))
    return flat[0] if len(flat) == 1 else FAdd(tuple(flat))


def fscale(q: Fraction, t: FTerm) -> FTerm:
    """q * t with nested constant factors merged."""
    if q == 1:
        return t
    if q == 0:
        return ZERO
    if isinstance(t, FConst):
        return FConst(q * t.value)
    if isinstance(t, FMul) and isinstance(t.args[0], FConst):
        return fscale(q * t.args[0].value, t.args[1] if len(t.args) == 2 else FMul(t.args[1:]))
    return FMul((FConst(q), t))


def qf_to_fo(f: Expr) -> FTerm:
    """Value of a quantifier-free expectation as a single conditional term.

    ``[g]*a + [!g]*b`` (the shape produced for if-then-else) becomes one
    ``ite``; sums are flattened and rational factors folded.
    """
    if isinstance(f, Term):
        return term_to_fo(f)
    if isinstance(f, Iverson):
        return FIte(guard_to_fo(f.guard), qf_to_fo(f.body), ZERO)
    if isinstance(f, Scale):
        return fscale(f.factor, qf_to_fo(f.body))
    if isinstance(f, Sum):
        a, b = f.left, f.right
        if isinstance(a, Iverson) and isinstance(b, Iverson) and b.guard == Not(a.guard):
            return FIte(guard_to_fo(a.guard), qf_to_fo(a.body), qf_to_fo(b.body))
        return fadd((qf_to_fo(a), qf_to_fo(b)))
    if isinstance(f, Quant):
        raise EncodingError("quantified subexpression in a quantifier-free position")
    raise TypeError(f)


# ------------------------------------------------------------- encode_expr

class _Names:
    def __init__(self, taken):
        self.taken = set(taken)

    def fresh(self, base):
        n = fresh_name(base, self.taken)
        self.taken.add(n)
        return n


def encode_expr(f: Expr, result_var: str) -> Formula:
    """Formula phi(vars, result_var) holding iff result_var equals f's value.

    Quantifier-free f gives ``result_var = <conditional term>``.  For sup
    (inf) subexpressions an upper (lower) bound clause is combined with a
    least (greatest) bound clause over a fresh variable.
    """
    if result_var in free_vars(f):
        raise EncodingError(f"result variable {result_var!r} occurs free in the expectation")
    names = _Names(free_vars(f) | bound_vars(f) | {result_var})
    return _enc(f, FVar(result_var), names)


def _enc(f: Expr, y: FVar, names: _Names) -> Formula:
    if not (has_sup(f) or has_inf(f)):
        return FCmp("=", y, qf_to_fo(f))
    if isinstance(f, Iverson):
        yb = FVar(names.fresh("y"))
        return exists([yb.name], conj(_enc(f.body, yb, names),
                                      FCmp("=", y, FIte(guard_to_fo(f.guard), yb, ZERO))))
    if isinstance(f, Scale):
        yb = FVar(names.fresh("y"))
        return exists([yb.name], conj(_enc(f.body, yb, names),
                                      FCmp("=", y, FMul((FConst(f.factor), yb)))))
    if isinstance(f, Sum):
        ya, yb = FVar(names.fresh("y")), FVar(names.fresh("y"))
        return exists([ya.name, yb.name], conj(
            _enc(f.left, ya, names), _enc(f.right, yb, names),
            FCmp("=", y, FAdd((ya, yb)))))
    if isinstance(f, Quant):
        upper = isinstance(f, Sup)
        op = "<=" if upper else ">="

        def bound(u: FVar) -> Formula:
            v = FVar(f.var)
            yb = FVar(names.fresh("y"))
            inside = conj(le(FConst(f.lo), v), le(v, FConst(f.hi)), _enc(f.body, yb, names))
            return FForall((f.var, yb.name), FImplies(inside, FCmp(op, yb, u)))

        other = FVar(names.fresh("y"))
        return conj(bound(y), FForall((other.name,), FImplies(bound(other), FCmp(op, y, other))))
    raise TypeError(f)


# ------------------------------------------------------------- entailment

@dataclass(frozen=True)
class Query:
    """Universal (validity) or existential (satisfiability) query.

    ``formula`` is the full closed formula; ``consts`` lists the prefix
    variables in declaration order; ``hyps`` and ``goal`` are the prefix-free
    parts, so validity means ``hyps -> goal`` for all consts and satisfiability
    means ``hyps`` for some consts.
    """
    mode: str
    consts: tuple
    hyps: tuple
    goal: Formula
    formula: Formula
    result_vars: tuple = ()
    state_vars: tuple = ()


def _pnf_side(e: Expr, allowed, what):
    p = to_pnf(e)
    prefix, matrix = split_prefix(p)
    for cls, *_ in prefix:
        if cls is not allowed:
            raise EncodingError(f"{what} must be {'inf' if allowed is Sup else 'sup'}-free")
    if has_sup(matrix) or has_inf(matrix):
        raise EncodingError(f"{what} is not in prenex normal form")
    return prefix, matrix


def _apart_pair(f: Expr, g: Expr):
    fv = free_vars(f) | free_vars(g)
    f2 = rename_apart(f, fv)
    g2 = rename_apart(g, fv | bound_vars(f2))
    return f2, g2


def bounds_hyps(prefix) -> list:
    out = []
    for _, v, lo, hi in prefix:
        out.append(le(FConst(lo), FVar(v)))
        out.append(le(FVar(v), FConst(hi)))
    return out


def entailment_formula(f: Expr, g: Expr, yf="y_f", yg="y_g") -> Query:
    """Closed formula valid iff f <= g pointwise, for inf-free f and sup-free g.

    Both sides are brought into prenex normal form; their binders join the
    universally quantified state variables with their interval bounds as
    hypotheses, following the usual entailment reduction.
    """
    f, g = _apart_pair(f, g)
    pf, mf = _pnf_side(f, Sup, "left-hand side")
    pg, mg = _pnf_side(g, Inf, "right-hand side")
    state = sorted(free_vars(f) | free_vars(g))
    taken = set(state) | {v for _, v, *_ in pf + pg}
    names = _Names(taken)
    yf = names.fresh(yf) if yf in taken else yf
    names.taken.add(yf)
    yg = names.fresh(yg) if yg in names.taken else yg
    consts = tuple(state) + tuple(v for _, v, *_ in pf + pg) + (yf, yg)
    hyps = [FCmp(">=", FVar(x), ZERO) for x in state]
    hyps += bounds_hyps(pf) + bounds_hyps(pg)
    hyps.append(FCmp("=", FVar(yf), qf_to_fo(mf)))
    hyps.append(FCmp("=", FVar(yg), qf_to_fo(mg)))
    goal = le(FVar(yf), FVar(yg))
    formula = forall(consts, FImplies(conj(*hyps), goal))
    return Query("valid", consts, tuple(hyps), goal, formula, (yf, yg), tuple(state))


def strict_violation_formula(lo: Expr, hi: Expr) -> Query:
    """Closed existential formula: some state has lo < hi.

    ``lo`` must be inf-free and ``hi`` sup-free.  With c1 < c2 the
    quantified clauses state sup(lo) <= c1 and inf(hi) >= c2.
    """
    lo, hi = _apart_pair(lo, hi)
    pl, ml = _pnf_side(lo, Sup, "lower side")
    ph, mh = _pnf_side(hi, Inf, "upper side")
    state = sorted(free_vars(lo) | free_vars(hi))
    names = _Names(set(state) | {v for _, v, *_ in pl + ph})
    c1, c2 = names.fresh("c_lo"), names.fresh("c_hi")
    hyps = [FCmp(">=", FVar(x), ZERO) for x in state]
    hyps.append(FCmp("<", FVar(c1), FVar(c2)))
    hyps.append(_bounded_all(pl, FCmp("<=", qf_to_fo(ml), FVar(c1))))
    hyps.append(_bounded_all(ph, FCmp(">=", qf_to_fo(mh), FVar(c2))))
    consts = tuple(state) + (c1, c2)
    formula = exists(consts, conj(*hyps))
    return Query("sat", consts, tuple(hyps), TRUE, formula, (c1, c2), tuple(state))


def _bounded_all(prefix, body: Formula) -> Formula:
    if not prefix:
        return body
    return FForall(tuple(v for _, v, *_ in prefix), FImplies(conj(*bounds_hyps(prefix)), body))


def one_bounded_formula(f: Expr, y="y") -> Query:
    """Validity query for f <= 1 at every nonnegative state."""
    if not has_inf(f):
        return entailment_formula(f, Const(1))
    state = sorted(free_vars(f))
    names = _Names(set(state) | bound_vars(f))
    y = names.fresh(y) if y in names.taken else y
    hyps = [FCmp(">=", FVar(x), ZERO) for x in state]
    hyps.append(encode_expr(f, y))
    goal = le(FVar(y), FConst(1))
    consts = tuple(state) + (y,)
    return Query("valid", consts, tuple(hyps), goal,
                 forall(consts, FImplies(conj(*hyps), goal)), (y,), tuple(state))


def pinned_query(f: Expr, state: dict, y="y") -> Query:
    """Satisfiability of phi_f(s, y) with the state fixed: pins y to f(s)."""
    names = _Names(set(state) | bound_vars(f) | free_vars(f))
    y = names.fresh(y) if y in names.taken else y
    hyps = [FCmp("=", FVar(x), FConst(Fraction(v))) for x, v in sorted(state.items())]
    hyps.append(encode_expr(f, y))
    consts = tuple(sorted(state)) + (y,)
    return Query("sat", consts, tuple(hyps), TRUE, exists(consts, conj(*hyps)), (y,), tuple(sorted(state)))


# ------------------------------------------------------------ evaluation

class FOEvalError(Exception):
    pass


def eval_fo_term(t: FTerm, env: dict, funcs=None) -> Fraction:
    if isinstance(t, FConst):
        return t.value
    if isinstance(t, FVar):
        try:
            return env[t.name]
        except KeyError:
            raise FOEvalError(f"no value for {t.name!r}") from None
    if isinstance(t, FAdd):
        return sum((eval_fo_term(a, env, funcs) for a in t.args), Fraction(0))
    if isinstance(t, FSub):
        return eval_fo_term(t.left, env, funcs) - eval_fo_term(t.right, env, funcs)
    if isinstance(t, FMul):
        out = Fraction(1)
        for a in t.args:
            out *= eval_fo_term(a, env, funcs)
        return out
    if isinstance(t, FIte):
        if eval_fo(t.cond, env, funcs):
            return eval_fo_term(t.then, env, funcs)
        return eval_fo_term(t.orelse, env, funcs)
    if isinstance(t, FApp):
        if not funcs or t.func not in funcs:
            raise FOEvalError(f"no interpretation for {t.func!r}")
        return Fraction(funcs[t.func](*[eval_fo_term(a, env, funcs) for a in t.args]))
    raise TypeError(t)


_OPS = {
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b, "=": lambda a, b: a == b,
    ">=": lambda a, b: a >= b, ">": lambda a, b: a > b,
}


def eval_fo(phi: Formula, env: dict, funcs=None) -> bool:
    """Truth value of a quantifier-free formula under ``env``."""
    if isinstance(phi, FCmp):
        return _OPS[phi.op](eval_fo_term(phi.left, env, funcs), eval_fo_term(phi.right, env, funcs))
    if isinstance(phi, FNot):
        return not eval_fo(phi.arg, env, funcs)
    if isinstance(phi, FAnd):
        return all(eval_fo(a, env, funcs) for a in phi.args)
    if isinstance(phi, FOr):
        return any(eval_fo(a, env, funcs) for a in phi.args)
    if isinstance(phi, FImplies):
        return (not eval_fo(phi.left, env, funcs)) or eval_fo(phi.right, env, funcs)
    if isinstance(phi, FBool):
        return phi.value
    raise FOEvalError("quantified formula cannot be evaluated directly")


def is_quantifier_free(phi) -> bool:
    if isinstance(phi, (FForall, FExists)):
        return False
    if isinstance(phi, FCmp):
        return _term_qf(phi.left) and _term_qf(phi.right)
    if isinstance(phi, FNot):
        return is_quantifier_free(phi.arg)
    if isinstance(phi, (FAnd, FOr)):
        return all(is_quantifier_free(a) for a in phi.args)
    if isinstance(phi, FImplies):
        return is_quantifier_free(phi.left) and is_quantifier_free(phi.right)
    return True


def _term_qf(t) -> bool:
    if isinstance(t, FIte):
        return is_quantifier_free(t.cond) and _term_qf(t.then) and _term_qf(t.orelse)
    if isinstance(t, (FAdd, FMul)):
        return all(_term_qf(a) for a in t.args)
    if isinstance(t, FSub):
        return _term_qf(t.left) and _term_qf(t.right)
    if isinstance(t, FApp):
        return all(_term_qf(a) for a in t.args)
    return True


def fo_funcs(phi) -> set:
    out = set()

    def term(t):
        if isinstance(t, FApp):
            out.add(t.func)
            for a in t.args:
                term(a)
        elif isinstance(t, (FAdd, FMul)):
            for a in t.args:
                term(a)
        elif isinstance(t, FSub):
            term(t.left)
            term(t.right)
        elif isinstance(t, FIte):
            form(t.cond)
            term(t.then)
            term(t.orelse)

    def form(p):
        if isinstance(p, FCmp):
            term(p.left)
            term(p.right)
        elif isinstance(p, FNot):
            form(p.arg)
        elif isinstance(p, (FAnd, FOr)):
            for a in p.args:
                form(a)
        elif isinstance(p, FImplies):
            form(p.left)
            form(p.right)
        elif isinstance(p, (FForall, FExists)):
            form(p.body)

    form(phi)
    return out


def fo_size(phi) -> int:
    n = 0
    stack = [phi]
    while stack:
        x = stack.pop()
        n += 1
        if isinstance(x, (FAdd, FMul, FAnd, FOr, FApp)):
            stack.extend(x.args)
        elif isinstance(x, (FSub, FImplies)):
            stack.append(x.left)
            stack.append(x.right)
        elif isinstance(x, FCmp):
            stack.append(x.left)
            stack.append(x.right)
        elif isinstance(x, FIte):
            stack.extend((x.cond, x.then, x.orelse))
        elif isinstance(x, FNot):
            stack.append(x.arg)
        elif isinstance(x, (FForall, FExists)):
            stack.append(x.body)
    return n
