"""AST for pWhile programs, guards and syntactic expectations.

All nodes are frozen dataclasses, so values can be shared freely.
Terms are a subset of expectations: every ``Term`` is also an ``Expr``.
The smart constructors (``plus``, ``scale``, ``iverson``, ``seq``) keep
trees canonical, which is what the parser produces and what the
pretty-printer round-trips on.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union


FRESH_MARK = "#"


class ParseError(ValueError):
    """Parse or well-formedness error, optionally with a source position."""

    def __init__(self, msg, line=None, col=None):
        self.msg = msg
        self.line = line
        self.col = col
        if line is not None:
            msg = f"{line}:{col}: {msg}"
        super().__init__(msg)


def rational(value) -> Fraction:
    """Coerce ints, strings ("3/4", "0.85") and Fractions to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass a string or Fraction")
    return Fraction(value)


# ---------------------------------------------------------------- expressions

class Expr:
    __slots__ = ()


class Term(Expr):
    __slots__ = ()


@dataclass(frozen=True)
class Const(Term):
    value: Fraction

    def __post_init__(self):
        v = rational(self.value)
        if v < 0:
            raise ParseError(f"negative constant {v}")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Monus(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Mul(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class App(Term):
    """Application of a declared (uninterpreted) function symbol."""
    func: str
    args: tuple


@dataclass(frozen=True)
class Iverson(Expr):
    guard: "Guard"
    body: Expr


@dataclass(frozen=True)
class Scale(Expr):
    factor: Fraction
    body: Expr

    def __post_init__(self):
        v = rational(self.factor)
        if v < 0:
            raise ParseError(f"negative scaling factor {v}")
        object.__setattr__(self, "factor", v)


@dataclass(frozen=True)
class Sum(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Quant(Expr):
    var: str
    lo: Fraction
    hi: Fraction
    body: Expr

    def __post_init__(self):
        lo, hi = rational(self.lo), rational(self.hi)
        if lo < 0:
            raise ParseError(f"negative interval endpoint {lo}")
        if lo > hi:
            raise ParseError(f"empty quantifier interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


@dataclass(frozen=True)
class Sup(Quant):
    pass


@dataclass(frozen=True)
class Inf(Quant):
    pass


# --------------------------------------------------------------------- guards

class Guard:
    __slots__ = ()


@dataclass(frozen=True)
class Cmp(Guard):
    """Comparison ``left op right`` with op in < <= == != > >=."""
    op: str
    left: Term
    right: Term

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ParseError(f"unknown comparison {self.op!r}")


CMP_OPS = ("<", "<=", "==", "!=", ">", ">=")


@dataclass(frozen=True)
class Not(Guard):
    arg: Guard


@dataclass(frozen=True)
class And(Guard):
    left: Guard
    right: Guard


@dataclass(frozen=True)
class Or(Guard):
    left: Guard
    right: Guard


@dataclass(frozen=True)
class Implies(Guard):
    left: Guard
    right: Guard


@dataclass(frozen=True)
class BoolLit(Guard):
    value: bool


def lt(a, b):
    return Cmp("<", a, b)


def normalize_guard(g: Guard) -> Guard:
    """Rewrite sugar into the core {<, !, &&} fragment."""
    if isinstance(g, Cmp):
        a, b = g.left, g.right
        if g.op == "<":
            return g
        if g.op == ">":
            return lt(b, a)
        if g.op == "<=":
            return Not(lt(b, a))
        if g.op == ">=":
            return Not(lt(a, b))
        eq = And(Not(lt(a, b)), Not(lt(b, a)))
        return eq if g.op == "==" else Not(eq)
    if isinstance(g, Not):
        return Not(normalize_guard(g.arg))
    if isinstance(g, And):
        return And(normalize_guard(g.left), normalize_guard(g.right))
    if isinstance(g, Or):
        return Not(And(Not(normalize_guard(g.left)), Not(normalize_guard(g.right))))
    if isinstance(g, Implies):
        return Not(And(normalize_guard(g.left), Not(normalize_guard(g.right))))
    if isinstance(g, BoolLit):
        zero = lt(Const(0), Const(0))
        return Not(zero) if g.value else zero
    raise TypeError(g)


def negate(g: Guard) -> Guard:
    """Negation that avoids stacking double negations."""
    if isinstance(g, Not):
        return g.arg
    if isinstance(g, BoolLit):
        return BoolLit(not g.value)
    return Not(g)


# ------------------------------------------------------------------- programs

class Stmt:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Stmt):
    pass


@dataclass(frozen=True)
class Diverge(Stmt):
    pass


@dataclass(frozen=True)
class Assign(Stmt):
    var: str
    term: Term


@dataclass(frozen=True)
class Unif(Stmt):
    """``var := unif`` with an optional per-statement partition size."""
    var: str
    n: Optional[int] = None

    def __post_init__(self):
        if self.n is not None and self.n < 1:
            raise ParseError("partition size must be at least 1")


@dataclass(frozen=True)
class Observe(Stmt):
    guard: Guard


@dataclass(frozen=True)
class Ite(Stmt):
    guard: Guard
    then: Stmt
    orelse: Stmt


@dataclass(frozen=True)
class PChoice(Stmt):
    left: Stmt
    prob: Fraction
    right: Stmt

    def __post_init__(self):
        p = rational(self.prob)
        if not 0 <= p <= 1:
            raise ParseError(f"probability {p} outside [0,1]")
        object.__setattr__(self, "prob", p)


@dataclass(frozen=True)
class Seq(Stmt):
    first: Stmt
    second: Stmt


@dataclass(frozen=True)
class While(Stmt):
    guard: Guard
    body: Stmt
    invariant: Optional[Expr] = None


@dataclass(frozen=True)
class FuncDecl:
    name: str
    arity: int
    nonneg: bool = True


@dataclass(frozen=True)
class Axiom:
    name: str
    params: tuple
    formula: Guard


@dataclass(frozen=True)
class DomainDecl:
    name: str
    funcs: tuple
    axioms: tuple

    def __post_init__(self):
        for ax in self.axioms:
            extra = guard_vars(ax.formula) - set(ax.params)
            if extra:
                raise ParseError(
                    f"axiom {ax.name} has unbound variables {sorted(extra)}")

    def func(self, name):
        for f in self.funcs:
            if f.name == name:
                return f
        return None


@dataclass(frozen=True)
class ProgramUnit:
    """A parsed source file: optional variable header, domains, body."""
    body: Stmt
    variables: Optional[tuple] = None
    domains: tuple = ()


# --------------------------------------------------------- smart constructors

def is_term(e) -> bool:
    return isinstance(e, Term)


def const(v) -> Const:
    return Const(rational(v))


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def plus(a: Expr, b: Expr) -> Expr:
    if is_term(a) and is_term(b):
        return Add(a, b)
    return Sum(a, b)


def scale(q, e: Expr) -> Expr:
    q = rational(q)
    if is_term(e):
        return Mul(Const(q), e)
    return Scale(q, e)


def iverson(g: Guard, e: Expr = ONE) -> Expr:
    return Iverson(g, e)


def seq(*stmts: Stmt) -> Stmt:
    """Right-nested sequential composition of one or more statements."""
    if not stmts:
        return Skip()
    out = stmts[-1]
    for s in reversed(stmts[:-1]):
        out = Seq(s, out)
    return out


def balanced_sum(parts) -> Expr:
    """Sum of a non-empty list as a balanced tree (keeps recursion shallow)."""
    parts = list(parts)
    if not parts:
        return ZERO
    while len(parts) > 1:
        nxt = [plus(parts[i], parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


# ----------------------------------------------------------- free variables

def term_vars(t: Term) -> set:
    out = set()
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            out.add(t.name)
        elif isinstance(t, (Add, Monus, Mul)):
            stack.append(t.left)
            stack.append(t.right)
        elif isinstance(t, App):
            stack.extend(t.args)
    return out


def guard_vars(g: Guard) -> set:
    if isinstance(g, Cmp):
        return term_vars(g.left) | term_vars(g.right)
    if isinstance(g, Not):
        return guard_vars(g.arg)
    if isinstance(g, (And, Or, Implies)):
        return guard_vars(g.left) | guard_vars(g.right)
    return set()


def free_vars(f: Expr) -> set:
    """Variables with at least one occurrence not bound by sup/inf."""
    if isinstance(f, Term):
        return term_vars(f)
    if isinstance(f, Iverson):
        return guard_vars(f.guard) | free_vars(f.body)
    if isinstance(f, Scale):
        return free_vars(f.body)
    if isinstance(f, Sum):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, Quant):
        return free_vars(f.body) - {f.var}
    raise TypeError(f)


def bound_vars(f: Expr) -> set:
    if isinstance(f, Quant):
        return {f.var} | bound_vars(f.body)
    if isinstance(f, Iverson):
        return bound_vars(f.body)
    if isinstance(f, Scale):
        return bound_vars(f.body)
    if isinstance(f, Sum):
        return bound_vars(f.left) | bound_vars(f.right)
    return set()


def term_funcs(t: Term) -> set:
    out = set()
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, App):
            out.add(t.func)
            stack.extend(t.args)
        elif isinstance(t, (Add, Monus, Mul)):
            stack.append(t.left)
            stack.append(t.right)
    return out


def guard_funcs(g: Guard) -> set:
    if isinstance(g, Cmp):
        return term_funcs(g.left) | term_funcs(g.right)
    if isinstance(g, Not):
        return guard_funcs(g.arg)
    if isinstance(g, (And, Or, Implies)):
        return guard_funcs(g.left) | guard_funcs(g.right)
    return set()


def expr_funcs(f: Expr) -> set:
    if isinstance(f, Term):
        return term_funcs(f)
    if isinstance(f, Iverson):
        return guard_funcs(f.guard) | expr_funcs(f.body)
    if isinstance(f, (Scale, Quant)):
        return expr_funcs(f.body)
    if isinstance(f, Sum):
        return expr_funcs(f.left) | expr_funcs(f.right)
    raise TypeError(f)


def stmt_vars(c: Stmt) -> set:
    if isinstance(c, (Skip, Diverge)):
        return set()
    if isinstance(c, Assign):
        return {c.var} | term_vars(c.term)
    if isinstance(c, Unif):
        return {c.var}
    if isinstance(c, Observe):
        return guard_vars(c.guard)
    if isinstance(c, Ite):
        return guard_vars(c.guard) | stmt_vars(c.then) | stmt_vars(c.orelse)
    if isinstance(c, PChoice):
        return stmt_vars(c.left) | stmt_vars(c.right)
    if isinstance(c, Seq):
        return stmt_vars(c.first) | stmt_vars(c.second)
    if isinstance(c, While):
        out = guard_vars(c.guard) | stmt_vars(c.body)
        if c.invariant is not None:
            out |= free_vars(c.invariant)
        return out
    raise TypeError(c)


def stmt_funcs(c: Stmt) -> set:
    if isinstance(c, Assign):
        return term_funcs(c.term)
    if isinstance(c, Observe):
        return guard_funcs(c.guard)
    if isinstance(c, Ite):
        return guard_funcs(c.guard) | stmt_funcs(c.then) | stmt_funcs(c.orelse)
    if isinstance(c, PChoice):
        return stmt_funcs(c.left) | stmt_funcs(c.right)
    if isinstance(c, Seq):
        return stmt_funcs(c.first) | stmt_funcs(c.second)
    if isinstance(c, While):
        out = guard_funcs(c.guard) | stmt_funcs(c.body)
        if c.invariant is not None:
            out |= expr_funcs(c.invariant)
        return out
    return set()


def has_loop(c: Stmt) -> bool:
    if isinstance(c, While):
        return True
    if isinstance(c, Ite):
        return has_loop(c.then) or has_loop(c.orelse)
    if isinstance(c, PChoice):
        return has_loop(c.left) or has_loop(c.right)
    if isinstance(c, Seq):
        return has_loop(c.first) or has_loop(c.second)
    return False


def loops(c: Stmt) -> list:
    """Top-level loops of ``c`` in program order (not descending into loop bodies)."""
    if isinstance(c, While):
        return [c]
    if isinstance(c, Ite):
        return loops(c.then) + loops(c.orelse)
    if isinstance(c, PChoice):
        return loops(c.left) + loops(c.right)
    if isinstance(c, Seq):
        return loops(c.first) + loops(c.second)
    return []


def expr_size(f) -> int:
    """Number of AST nodes, counting guard and term nodes."""
    n = 0
    stack = [f]
    while stack:
        x = stack.pop()
        n += 1
        if isinstance(x, (Add, Monus, Mul, Sum, And, Or, Implies)):
            stack.append(x.left)
            stack.append(x.right)
        elif isinstance(x, App):
            stack.extend(x.args)
        elif isinstance(x, Iverson):
            stack.append(x.guard)
            stack.append(x.body)
        elif isinstance(x, (Scale, Quant)):
            stack.append(x.body)
        elif isinstance(x, Cmp):
            stack.append(x.left)
            stack.append(x.right)
        elif isinstance(x, Not):
            stack.append(x.arg)
    return n


def stmt_size(c: Stmt) -> int:
    if isinstance(c, Ite):
        return 1 + stmt_size(c.then) + stmt_size(c.orelse)
    if isinstance(c, PChoice):
        return 1 + stmt_size(c.left) + stmt_size(c.right)
    if isinstance(c, Seq):
        return 1 + stmt_size(c.first) + stmt_size(c.second)
    if isinstance(c, While):
        return 1 + stmt_size(c.body)
    return 1


Node = Union[Expr, Guard, Stmt]
