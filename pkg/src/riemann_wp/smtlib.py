"""SMT-LIB 2 emission and model parsing."""

from __future__ import annotations

import re
from fractions import Fraction

from .fo import (
    FAdd, FAnd, FApp, FBool, FCmp, FConst, FExists, FForall, FImplies, FIte,
    FMul, FNot, FOr, FSub, FVar, Query, fo_funcs, guard_to_fo, term_to_fo,
)
from .syntax import DomainDecl

_SIMPLE = re.compile(r"^[A-Za-z~!@$%^&*_+=<>.?/\-][A-Za-z0-9~!@$%^&*_+=<>.?/\-]*$")
_RESERVED = {
    "let", "forall", "exists", "match", "par", "_", "!", "as", "true", "false",
    "not", "and", "or", "ite", "assert", "Real", "Int", "Bool",
}


def symbol(name: str) -> str:
    if _SIMPLE.match(name) and name not in _RESERVED:
        return name
    return "|" + name.replace("|", "_").replace("\\", "_") + "|"


def num(q: Fraction) -> str:
    q = Fraction(q)
    if q < 0:
        return f"(- {num(-q)})"
    if q.denominator == 1:
        return f"{q.numerator}.0"
    return f"(/ {q.numerator}.0 {q.denominator}.0)"


class _Printer:
    def __init__(self, defs=None):
        self.defs = defs or {}

    def term(self, t, out):
        name = self.defs.get(t)
        if name is not None:
            out.append(name)
            return
        if isinstance(t, FConst):
            out.append(num(t.value))
        elif isinstance(t, FVar):
            out.append(symbol(t.name))
        elif isinstance(t, (FAdd, FMul)):
            out.append("(+" if isinstance(t, FAdd) else "(*")
            for a in t.args:
                out.append(" ")
                self.term(a, out)
            out.append(")")
        elif isinstance(t, FSub):
            out.append("(- ")
            self.term(t.left, out)
            out.append(" ")
            self.term(t.right, out)
            out.append(")")
        elif isinstance(t, FIte):
            out.append("(ite ")
            self.form(t.cond, out)
            out.append(" ")
            self.term(t.then, out)
            out.append(" ")
            self.term(t.orelse, out)
            out.append(")")
        elif isinstance(t, FApp):
            out.append(f"({symbol(t.func)}")
            for a in t.args:
                out.append(" ")
                self.term(a, out)
            out.append(")")
        else:
            raise TypeError(t)

    def form(self, p, out):
        if isinstance(p, FCmp):
            out.append(f"({p.op} ")
            self.term(p.left, out)
            out.append(" ")
            self.term(p.right, out)
            out.append(")")
        elif isinstance(p, FNot):
            out.append("(not ")
            self.form(p.arg, out)
            out.append(")")
        elif isinstance(p, (FAnd, FOr)):
            out.append("(and" if isinstance(p, FAnd) else "(or")
            for a in p.args:
                out.append(" ")
                self.form(a, out)
            out.append(")")
        elif isinstance(p, FImplies):
            out.append("(=> ")
            self.form(p.left, out)
            out.append(" ")
            self.form(p.right, out)
            out.append(")")
        elif isinstance(p, (FForall, FExists)):
            q = "forall" if isinstance(p, FForall) else "exists"
            binders = " ".join(f"({symbol(v)} Real)" for v in p.vars)
            out.append(f"({q} ({binders}) ")
            # definitions refer to outer constants only, so they stay valid
            # under binders that do not shadow them; disable to be safe
            inner = _Printer()
            inner.form(p.body, out)
            out.append(")")
        elif isinstance(p, FBool):
            out.append("true" if p.value else "false")
        else:
            raise TypeError(p)


def render_term(t) -> str:
    out = []
    _Printer().term(t, out)
    return "".join(out)


def render_formula(p) -> str:
    out = []
    _Printer().form(p, out)
    return "".join(out)


# -------------------------------------------------------------------- CSE

def _count_terms(phi, counts, order):
    """Occurrence counts of compound terms outside quantifiers."""

    def term(t):
        if isinstance(t, (FConst, FVar)):
            return
        c = counts.get(t)
        if c is not None:
            counts[t] = c + 1
            return
        counts[t] = 1
        if isinstance(t, (FAdd, FMul, FApp)):
            for a in t.args:
                term(a)
        elif isinstance(t, FSub):
            term(t.left)
            term(t.right)
        elif isinstance(t, FIte):
            form(t.cond)
            term(t.then)
            term(t.orelse)
        order.append(t)

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

    form(phi)


def _shared_terms(assertions) -> list:
    counts, order = {}, []
    for a in assertions:
        _count_terms(a, counts, order)
    # post-order keeps definitions before their uses
    return [t for t in order if counts[t] > 1 and not _trivial(t)]


def _trivial(t) -> bool:
    if isinstance(t, FSub):
        return isinstance(t.left, (FVar, FConst)) and isinstance(t.right, (FVar, FConst))
    if isinstance(t, (FAdd, FMul)):
        return len(t.args) <= 2 and all(isinstance(a, (FVar, FConst)) for a in t.args)
    return False


# ------------------------------------------------------------------ scripts

def choose_logic(quantified: bool, has_funcs: bool) -> str:
    if not quantified and not has_funcs:
        return "QF_NRA"
    if not quantified:
        return "QF_UFNRA"
    return "UFNRA" if has_funcs else "NRA"


def domain_assertions(decls) -> tuple:
    """(function declarations, axiom formulas) for the given domains."""
    decls = _as_list(decls)
    funcs, axioms = [], []
    for d in decls:
        for fdecl in d.funcs:
            funcs.append(fdecl)
            if fdecl.nonneg:
                args = tuple(f"{fdecl.name}_arg{k}" for k in range(fdecl.arity))
                fa = FApp(fdecl.name, tuple(FVar(a) for a in args))
                body = FCmp(">=", fa, FConst(Fraction(0)))
                if args:
                    hyp = _nonneg_all(args)
                    body = FForall(args, FImplies(hyp, body))
                axioms.append((f"{fdecl.name}_nonneg", body))
        for ax in d.axioms:
            body = guard_to_fo(ax.formula)
            if ax.params:
                body = FForall(tuple(ax.params), FImplies(_nonneg_all(ax.params), body))
            axioms.append((ax.name, body))
    return funcs, axioms


def _nonneg_all(names):
    parts = tuple(FCmp(">=", FVar(a), FConst(Fraction(0))) for a in names)
    return parts[0] if len(parts) == 1 else FAnd(parts)


def _as_list(decls):
    if decls is None:
        return []
    if isinstance(decls, DomainDecl):
        return [decls]
    return list(decls)


Z3_QF_NRA_STRATEGY = (
    "(check-sat-using (then simplify propagate-values solve-eqs "
    "(or-else (try-for (then smt fail-if-undecided) {ms}) qfnra-nlsat)))"
)


def emit_smtlib(query, decls=None, seed=None, logic=None, cse=True, check=None) -> str:
    """SMT-LIB 2 script for a Query (or a closed validity formula).

    Validity queries assert the hypotheses and the negated goal; the answer
    ``unsat`` means valid.  Satisfiability queries assert the hypotheses.
    ``check`` replaces the final ``(check-sat)`` command (solver strategies).
    """
    if not isinstance(query, Query):
        query = _as_query(query)
    funcs, axioms = domain_assertions(decls)
    assertions = list(query.hyps)
    if query.mode == "valid":
        assertions.append(FNot(query.goal))
    used_funcs = set()
    for a in assertions:
        used_funcs |= fo_funcs(a)
    declared = {f.name for f in funcs}
    missing = used_funcs - declared
    if missing:
        raise ValueError(f"undeclared function symbol(s): {', '.join(sorted(missing))}")
    quantified = bool(axioms and any(isinstance(b, FForall) for _, b in axioms)) or any(
        _quantified(a) for a in assertions)
    if logic is None:
        logic = choose_logic(quantified, bool(funcs))
    lines = [f"(set-logic {logic})", "(set-option :produce-models true)"]
    if seed is not None:
        lines.append(f"(set-option :random-seed {int(seed)})")
    for f in funcs:
        args = " ".join(["Real"] * f.arity)
        lines.append(f"(declare-fun {symbol(f.name)} ({args}) Real)")
    for v in query.consts:
        lines.append(f"(declare-const {symbol(v)} Real)")
    for name, body in axioms:
        lines.append(f"; axiom {name}")
        lines.append(f"(assert {render_formula(body)})")
    defs = {}
    if cse:
        taken = set(query.consts)
        k = 0
        pr = _Printer(defs)
        for t in _shared_terms([a for a in assertions if not _quantified(a)]):
            k += 1
            name = f"cse_{k}"
            while name in taken:
                k += 1
                name = f"cse_{k}"
            out = []
            pr.term(t, out)
            lines.append(f"(define-fun {name} () Real {''.join(out)})")
            defs[t] = name
    pr = _Printer(defs)
    for a in assertions:
        for part in (a.args if isinstance(a, FAnd) else (a,)):
            out = []
            pr.form(part, out)
            lines.append(f"(assert {''.join(out)})")
    lines.append(check or "(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


def _quantified(p) -> bool:
    from .fo import is_quantifier_free
    return not is_quantifier_free(p)


def _as_query(phi) -> Query:
    consts = ()
    body = phi
    if isinstance(body, FForall):
        consts, body = body.vars, body.body
    if isinstance(body, FImplies):
        hyps = body.left.args if isinstance(body.left, FAnd) else (body.left,)
        return Query("valid", tuple(consts), tuple(hyps), body.right, phi)
    return Query("valid", tuple(consts), (), body, phi)


# ------------------------------------------------------------ model parsing

class ModelParseError(Exception):
    pass


_SEXP_TOKEN = re.compile(r'\s*(?:(\()|(\))|(\|[^|]*\|)|("(?:[^"]|"")*")|([^\s()|";]+)|(;[^\n]*))')


def parse_sexps(text: str) -> list:
    stack = [[]]
    pos = 0
    while pos < len(text):
        m = _SEXP_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ModelParseError(f"cannot tokenize solver output at {text[pos:pos + 30]!r}")
        pos = m.end()
        lp, rp, quoted, string, atom, comment = m.groups()
        if lp:
            stack.append([])
        elif rp:
            if len(stack) == 1:
                raise ModelParseError("unbalanced ')' in solver output")
            done = stack.pop()
            stack[-1].append(done)
        elif quoted:
            stack[-1].append(quoted[1:-1])
        elif string:
            stack[-1].append(("str", string[1:-1]))
        elif atom:
            stack[-1].append(atom)
    if len(stack) != 1:
        raise ModelParseError("unbalanced '(' in solver output")
    return stack[0]


class Inexact(Exception):
    """Raised internally when a model value is irrational."""


def model_value(sexp):
    """Exact value of a model term; irrational algebraic numbers come back as
    (approximation, False)."""
    try:
        return _value(sexp), True
    except Inexact as exc:
        return exc.args[0], False


def _value(s):
    if isinstance(s, str):
        try:
            return Fraction(s)
        except ValueError:
            raise ModelParseError(f"unexpected atom {s!r} in model value") from None
    if not s:
        raise ModelParseError("empty model value")
    head = s[0]
    if head == "-" and len(s) == 2:
        return -_value(s[1])
    if head == "-":
        out = _value(s[1])
        for x in s[2:]:
            out -= _value(x)
        return out
    if head == "+":
        return sum((_value(x) for x in s[1:]), Fraction(0))
    if head == "*":
        out = Fraction(1)
        for x in s[1:]:
            out *= _value(x)
        return out
    if head == "/":
        out = _value(s[1])
        for x in s[2:]:
            out /= _value(x)
        return out
    if head == "root-obj":
        raise Inexact(_root_obj(s[1], int(s[2])))
    raise ModelParseError(f"unsupported model value form {head!r}")


def _poly(s, var_holder) -> dict:
    """Polynomial as {degree: coefficient} from a z3 root-obj expression."""
    if isinstance(s, str):
        try:
            return {0: Fraction(s)}
        except ValueError:
            var_holder.add(s)
            return {1: Fraction(1)}
    head = s[0]
    if head == "^":
        base = _poly(s[1], var_holder)
        out = {0: Fraction(1)}
        for _ in range(int(s[2])):
            out = _pmul(out, base)
        return out
    if head == "*":
        out = {0: Fraction(1)}
        for x in s[1:]:
            out = _pmul(out, _poly(x, var_holder))
        return out
    if head == "+":
        out = {}
        for x in s[1:]:
            out = _padd(out, _poly(x, var_holder))
        return out
    if head == "-":
        if len(s) == 2:
            return {d: -c for d, c in _poly(s[1], var_holder).items()}
        out = _poly(s[1], var_holder)
        for x in s[2:]:
            out = _padd(out, {d: -c for d, c in _poly(x, var_holder).items()})
        return out
    if head == "/":
        out = _poly(s[1], var_holder)
        den = _value(s[2])
        return {d: c / den for d, c in out.items()}
    raise ModelParseError(f"unsupported polynomial form {head!r}")


def _pmul(a, b):
    out = {}
    for da, ca in a.items():
        for db, cb in b.items():
            out[da + db] = out.get(da + db, Fraction(0)) + ca * cb
    return {d: c for d, c in out.items() if c}


def _padd(a, b):
    out = dict(a)
    for d, c in b.items():
        out[d] = out.get(d, Fraction(0)) + c
    return {d: c for d, c in out.items() if c}


def _peval(p, x):
    return sum((c * x ** d for d, c in p.items()), Fraction(0))


def _count_roots(p, lo, hi):
    """Distinct real roots of p in (lo, hi] via Sturm's theorem."""
    seq = _sturm(p)
    return _sign_changes(seq, lo) - _sign_changes(seq, hi)


def _sturm(p):
    def deriv(q):
        return {d - 1: c * d for d, c in q.items() if d > 0}

    def divmod_(a, b):
        a = dict(a)
        db = max(b)
        while a and max(a) >= db:
            da = max(a)
            k = a[da] / b[db]
            for d, c in b.items():
                a[d + da - db] = a.get(d + da - db, Fraction(0)) - k * c
            a = {d: c for d, c in a.items() if c}
        return a

    seq = [p, deriv(p)]
    while seq[-1]:
        r = divmod_(seq[-2], seq[-1])
        seq.append({d: -c for d, c in r.items()})
    return [q for q in seq if q]


def _sign_changes(seq, x):
    signs = [v for v in (_peval(q, x) for q in seq) if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def _root_obj(expr, index, bits=80):
    """k-th smallest real root of a rational polynomial, to ``bits`` bits."""
    p = _poly(expr, set())
    if not p or max(p) == 0:
        raise ModelParseError("degenerate root-obj polynomial")
    lead = p[max(p)]
    bound = 1 + max(abs(c / lead) for c in p.values())
    lo, hi = -bound, bound
    if _count_roots(p, lo, hi) < index:
        raise ModelParseError("root-obj index out of range")
    # shrink to an interval holding exactly the index-th root
    while True:
        mid = (lo + hi) / 2
        below = _count_roots(p, lo, mid)
        if below >= index:
            hi = mid
        else:
            index -= below
            lo = mid
        if _count_roots(p, lo, hi) == 1 and hi - lo < Fraction(1, 2 ** bits):
            return (lo + hi) / 2


def parse_model(text: str, names=None) -> tuple:
    """Parse a get-model response into ({name: Fraction}, exact, functions).

    Only nullary definitions are read, restricted to ``names`` when given
    (solvers echo macro definitions whose bodies are not values).
    """
    sexps = parse_sexps(text)
    if len(sexps) == 1 and isinstance(sexps[0], list) and sexps[0] and sexps[0][0] == "model":
        sexps = [sexps[0][1:]]
    if not sexps:
        return {}, True, {}
    body = sexps[0]
    if body and body[0] == "model":
        body = body[1:]
    values, funcs, exact = {}, {}, True
    for item in body:
        if not isinstance(item, list) or not item or item[0] != "define-fun":
            continue
        name, params, sort, value = item[1], item[2], item[3], item[4]
        if params:
            funcs[name] = (params, value)
            continue
        if sort not in ("Real", "Int") or (names is not None and name not in names):
            continue
        v, ok = model_value(value)
        values[name] = v
        exact = exact and ok
    return values, exact, funcs


# convenience for tests and the CLI

def expr_term_smt(t) -> str:
    return render_term(term_to_fo(t))
