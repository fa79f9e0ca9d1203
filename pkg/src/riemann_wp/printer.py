"""Deterministic pretty-printer; output re-parses to the same canonical AST."""

from __future__ import annotations

from fractions import Fraction

from .syntax import (
    Add, And, App, Assign, BoolLit, Cmp, Const, Diverge, DomainDecl, Expr,
    Implies, Ite, Iverson, Monus, Mul, Not, Observe, Or, PChoice,
    ProgramUnit, Quant, Scale, Seq, Skip, Stmt, Sum, Sup, Unif, Var,
    While,
)

INDENT = "  "


def fmt_rational(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


# precedence levels: 1 = sum/monus, 2 = product, 3 = atom
def _prec(e) -> int:
    if isinstance(e, (Add, Monus, Sum)):
        return 1
    if isinstance(e, (Mul, Iverson, Scale)):
        return 2
    if isinstance(e, Quant):
        return 0
    return 3


def _wrap(e, need: int) -> str:
    s = pretty_expr(e)
    return f"({s})" if _prec(e) < need else s


def pretty_expr(e: Expr) -> str:
    if isinstance(e, Const):
        return fmt_rational(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, App):
        return f"{e.func}({', '.join(pretty_expr(a) for a in e.args)})"
    if isinstance(e, (Add, Sum)):
        return f"{_wrap(e.left, 1)} + {_wrap(e.right, 2)}"
    if isinstance(e, Monus):
        return f"{_wrap(e.left, 1)} - {_wrap(e.right, 2)}"
    if isinstance(e, Mul):
        return f"{_wrap(e.left, 2)} * {_wrap(e.right, 3)}"
    if isinstance(e, Iverson):
        g = pretty_guard(e.guard)
        if e.body == Const(1):
            return f"[{g}]"
        return f"[{g}] * {_body(e.body)}"
    if isinstance(e, Scale):
        return f"{fmt_rational(e.factor)} * {_body(e.body)}"
    if isinstance(e, Quant):
        word = "sup" if isinstance(e, Sup) else "inf"
        head = f"{word} {e.var} in [{fmt_rational(e.lo)}, {fmt_rational(e.hi)}]: "
        body = e.body
        inner = pretty_expr(body)
        if isinstance(body, Quant):
            inner = f"({inner})"
        return head + inner
    raise TypeError(e)


def _body(e: Expr) -> str:
    # right operand of ``[g] *`` or ``q *``; products stay bare because the
    # parser rebuilds them left-associatively from the same factor list
    if isinstance(e, (Iverson, Scale, Mul)):
        return pretty_expr(e)
    return _wrap(e, 3)


def pretty_guard(g) -> str:
    if isinstance(g, Cmp):
        return f"{pretty_expr(g.left)} {g.op} {pretty_expr(g.right)}"
    if isinstance(g, BoolLit):
        return "true" if g.value else "false"
    if isinstance(g, Not):
        inner = pretty_guard(g.arg)
        if isinstance(g.arg, (Not, BoolLit)):
            return f"!{inner}"
        return f"!({inner})"
    if isinstance(g, And):
        return f"{_gwrap(g.left, (Cmp, Not, BoolLit, And))} && {_gwrap(g.right, (Cmp, Not, BoolLit))}"
    if isinstance(g, Or):
        return f"{_gwrap(g.left, (Cmp, Not, BoolLit, And, Or))} || {_gwrap(g.right, (Cmp, Not, BoolLit, And))}"
    if isinstance(g, Implies):
        right = _gwrap(g.right, (Cmp, Not, BoolLit, And, Or, Implies))
        return f"{_gwrap(g.left, (Cmp, Not, BoolLit, And, Or))} ==> {right}"
    raise TypeError(g)


def _gwrap(g, bare) -> str:
    s = pretty_guard(g)
    return s if isinstance(g, bare) else f"({s})"


def pretty_stmt(c: Stmt, depth: int = 0) -> str:
    pad = INDENT * depth
    return "\n".join(pad + line if line else line for line in _stmt_lines(c))


def _block(c: Stmt) -> list:
    inner = _stmt_lines(c)
    return ["{"] + [INDENT + ln for ln in inner] + ["}"]


def _stmt_lines(c: Stmt) -> list:
    if isinstance(c, Seq):
        out = []
        items = []
        while isinstance(c, Seq):
            items.append(c.first)
            c = c.second
        items.append(c)
        for k, s in enumerate(items):
            lines = _block(s) if isinstance(s, Seq) else _stmt_lines(s)
            if k < len(items) - 1:
                lines[-1] += ";"
            out.extend(lines)
        return out
    if isinstance(c, Skip):
        return ["skip"]
    if isinstance(c, Diverge):
        return ["diverge"]
    if isinstance(c, Assign):
        return [f"{c.var} := {pretty_expr(c.term)}"]
    if isinstance(c, Unif):
        return [f"{c.var} := unif" + (f"@{c.n}" if c.n is not None else "")]
    if isinstance(c, Observe):
        return [f"observe({pretty_guard(c.guard)})"]
    if isinstance(c, Ite):
        then = _block(c.then)
        orelse = _block(c.orelse)
        head = f"if ({pretty_guard(c.guard)}) " + then[0]
        return [head] + then[1:-1] + ["} else {"] + orelse[1:]
    if isinstance(c, PChoice):
        left = _block(c.left)
        right = _block(c.right)
        return left[:-1] + [f"}} [{fmt_rational(c.prob)}] {{"] + right[1:]
    if isinstance(c, While):
        head = f"while ({pretty_guard(c.guard)})"
        if c.invariant is not None:
            head += f" @invariant({pretty_expr(c.invariant)})"
        body = _block(c.body)
        return [head + " " + body[0]] + body[1:]
    raise TypeError(c)


def pretty_domain(d: DomainDecl) -> str:
    lines = [f"domain {d.name} {{"]
    for f in d.funcs:
        args = ", ".join(["UReal"] * f.arity)
        lines.append(f"{INDENT}func {f.name}({args}): UReal")
    for ax in d.axioms:
        q = f"forall {', '.join(ax.params)}. " if ax.params else ""
        lines.append(f"{INDENT}axiom {ax.name} {q}{pretty_guard(ax.formula)}")
    lines.append("}")
    return "\n".join(lines)


def pretty_unit(u: ProgramUnit) -> str:
    parts = []
    if u.variables is not None:
        parts.append(f"vars {', '.join(u.variables)};")
    parts.extend(pretty_domain(d) for d in u.domains)
    parts.append(pretty_stmt(u.body))
    return "\n".join(parts)


def pretty(node) -> str:
    """Render a statement, expectation, guard, domain or whole unit."""
    if isinstance(node, Expr):
        return pretty_expr(node)
    if isinstance(node, Stmt):
        return pretty_stmt(node)
    if isinstance(node, ProgramUnit):
        return pretty_unit(node)
    if isinstance(node, DomainDecl):
        return pretty_domain(node)
    return pretty_guard(node)
