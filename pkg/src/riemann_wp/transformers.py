"""Lower/upper Riemann weakest (liberal) pre-expectations of loop-free programs."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .printer import fmt_rational, pretty_expr, pretty_guard
from .semantics import fresh_name, substitute
from .syntax import (
    ONE, ZERO, Assign, Diverge, Expr, Inf, Ite, Observe, PChoice,
    Seq, Skip, Stmt, Sup, Unif, Var, While, balanced_sum, bound_vars,
    expr_size, free_vars, has_loop, iverson, negate, plus, scale, stmt_vars,
)

KINDS = ("lwp", "uwp", "lwlp", "uwlp")
DEFAULT_MAX_NODES = 10 ** 6


class TransformError(Exception):
    pass


class SizeLimitExceeded(TransformError):
    def __init__(self, size, limit):
        self.size, self.limit = size, limit
        super().__init__(f"expression grew to {size} nodes, above the cap of {limit}")


@dataclass(frozen=True)
class TransformerKind:
    name: str
    n: int

    def __post_init__(self):
        if self.name not in KINDS:
            raise ValueError(f"unknown transformer {self.name!r}; expected one of {KINDS}")
        if self.n < 1:
            raise ValueError("partition size must be at least 1")

    @property
    def lower(self) -> bool:
        return self.name in ("lwp", "lwlp")

    @property
    def liberal(self) -> bool:
        return self.name in ("lwlp", "uwlp")

    def __str__(self):
        return f"{self.name}_{self.n}"


def as_kind(kind, n=None) -> TransformerKind:
    if isinstance(kind, TransformerKind):
        return kind if n is None else TransformerKind(kind.name, n)
    return TransformerKind(kind, 1 if n is None else n)


def riemann_unif(kind: TransformerKind, x: str, f: Expr, n: int) -> Expr:
    """(1/n) * sum over cells of inf/sup of f with x ranging over the cell."""
    if x not in free_vars(f):
        # every cell quantifier is vacuous and the n cells average f itself
        return f
    v = x
    if x in bound_vars(f):
        v = fresh_name(x, free_vars(f) | bound_vars(f))
        f = substitute(f, x, Var(v))
    cls = Inf if kind.lower else Sup
    cells = [cls(v, Fraction(i, n), Fraction(i + 1, n), f) for i in range(n)]
    total = balanced_sum(cells)
    return total if n == 1 else scale(Fraction(1, n), total)


def transform(kind, prog: Stmt, post: Expr, n: int = None,
              max_nodes: int = DEFAULT_MAX_NODES) -> Expr:
    """Riemann transformer of a loop-free program applied to ``post``.

    ``kind`` is a TransformerKind or one of lwp/uwp/lwlp/uwlp together with
    ``n``.  ``unif@k`` statements use their own partition size.  For the
    liberal kinds the caller is responsible for ``post`` being 1-bounded.
    Summands and Iverson/probability factors that are the constant 0 are
    dropped as the expression is built.
    """
    kind = as_kind(kind, n)
    if has_loop(prog):
        raise TransformError("transform needs a loop-free program; use unfold() or an invariant")
    out = _T(kind, prog, post, max_nodes)
    size = expr_size(out)
    if size > max_nodes:
        raise SizeLimitExceeded(size, max_nodes)
    return out


def _zero(e) -> bool:
    return e == ZERO


def _plus(a, b):
    if _zero(a):
        return b
    if _zero(b):
        return a
    return plus(a, b)


def _iverson(g, e):
    return ZERO if _zero(e) else iverson(g, e)


def _scale(q, e):
    return ZERO if _zero(e) or q == 0 else scale(q, e)


def _T(kind, c, f, cap):
    if isinstance(c, Skip):
        return f
    if isinstance(c, Diverge):
        return ONE if kind.liberal else ZERO
    if isinstance(c, Assign):
        return substitute(f, c.var, c.term)
    if isinstance(c, Unif):
        out = riemann_unif(kind, c.var, f, c.n or kind.n)
        if cap is not None:
            size = expr_size(out)
            if size > cap:
                raise SizeLimitExceeded(size, cap)
        return out
    if isinstance(c, Observe):
        return _iverson(c.guard, f)
    if isinstance(c, Ite):
        return _plus(_iverson(c.guard, _T(kind, c.then, f, cap)),
                     _iverson(negate(c.guard), _T(kind, c.orelse, f, cap)))
    if isinstance(c, PChoice):
        p = c.prob
        if p == 1:
            return _T(kind, c.left, f, cap)
        if p == 0:
            return _T(kind, c.right, f, cap)
        return _plus(_scale(p, _T(kind, c.left, f, cap)),
                     _scale(1 - p, _T(kind, c.right, f, cap)))
    if isinstance(c, Seq):
        return _T(kind, c.first, _T(kind, c.second, f, cap), cap)
    if isinstance(c, While):
        raise TransformError("loop encountered")
    raise TypeError(c)


def char_fn_apply(kind, loop: While, post: Expr, candidate: Expr, n: int = None,
                  max_nodes: int = DEFAULT_MAX_NODES) -> Expr:
    """Characteristic function of ``loop`` w.r.t. ``post`` applied to ``candidate``."""
    if not isinstance(loop, While):
        raise TransformError("expected a while loop")
    if has_loop(loop.body):
        raise TransformError("non-nested loops only: the loop body contains a loop")
    body = transform(kind, loop.body, candidate, n, max_nodes)
    return _plus(_iverson(loop.guard, body), _iverson(negate(loop.guard), post))


def unfold(c: Stmt, depth: int) -> Stmt:
    """Replace every loop by ``depth`` guarded copies of its body ending in diverge."""
    if depth < 0:
        raise ValueError("unfolding depth must be nonnegative")
    if isinstance(c, While):
        out = Diverge()
        for d in range(depth):
            out = Ite(c.guard, Seq(unfold(c.body, d), out), Skip())
        return out
    if isinstance(c, Ite):
        return Ite(c.guard, unfold(c.then, depth), unfold(c.orelse, depth))
    if isinstance(c, PChoice):
        return PChoice(unfold(c.left, depth), c.prob, unfold(c.right, depth))
    if isinstance(c, Seq):
        return Seq(unfold(c.first, depth), unfold(c.second, depth))
    return c


# ------------------------------------------------------ nondeterministic export

def encode_nondet(prog: Stmt, n: int, polarity: str = "angelic", post: Expr = None,
                  name: str = "program", liberal: bool = False,
                  inputs=None) -> str:
    """Render ``prog`` with each ``x := unif`` as a discrete choice plus a bounded havoc.

    The cell index ``j`` is drawn uniformly from {0, ..., N-1} and ``x`` is
    then chosen inside [j/N, (j+1)/N], angelically (``cohavoc``/``coassume``,
    an upper Riemann sum) or demonically (``havoc``/``assume``, a lower one).
    The layout mirrors coproc/proc listings of HeyVL-style verifiers.
    """
    if polarity not in ("angelic", "demonic"):
        raise ValueError("polarity must be 'angelic' or 'demonic'")
    if n < 1:
        raise ValueError("partition size must be at least 1")
    em = _Emitter(prog, n, polarity, liberal)
    body = em.stmt(prog)
    assigned = em.assigned
    if inputs is None:
        inputs = sorted(stmt_vars(prog) - set(assigned))
    outputs = [v for v in assigned if v not in inputs]
    head = "coproc" if polarity == "angelic" else "proc"
    ins = ", ".join(f"{v} : UReal" for v in inputs)
    outs = ", ".join(f"{v} : UReal" for v in outputs)
    lines = [f"{head} {name}({ins}) -> ({outs})"]
    if post is not None:
        lines.append(f"post {pretty_expr(post)}")
    lines.append("{")
    if em.uses_cells:
        lines.append(f"  var {em.nvar} : UInt = {n};")
        lines.append(f"  var {em.jvar} : UInt;")
    for v in em.choices:
        lines.append(f"  var {v} : Bool;")
    lines.extend("  " + ln for ln in body)
    lines.append("}")
    return "\n".join(lines) + "\n"


class _Emitter:
    def __init__(self, prog, n, polarity, liberal):
        self.n = n
        self.angelic = polarity == "angelic"
        self.liberal = liberal
        names = stmt_vars(prog)
        self.nvar = fresh_plain("N", names)
        self.jvar = fresh_plain("j", names | {self.nvar})
        self.taken = names | {self.nvar, self.jvar}
        self.assigned = []
        self.choices = []
        self.uses_cells = False

    def note(self, v):
        if v not in self.assigned:
            self.assigned.append(v)

    def stmt(self, c) -> list:
        if isinstance(c, Skip):
            return []
        if isinstance(c, Seq):
            return self.stmt(c.first) + self.stmt(c.second)
        if isinstance(c, Assign):
            self.note(c.var)
            return [f"{c.var} = {pretty_expr(c.term)}"]
        if isinstance(c, Unif):
            self.note(c.var)
            return self.unif(c)
        if isinstance(c, Observe):
            return [f"assert ?({pretty_guard(c.guard)}) // observe"]
        if isinstance(c, Diverge):
            if self.liberal:
                return ["// diverge", "assert 1", "assume ?(false)"]
            return ["// diverge", "assert ?(false)"]
        if isinstance(c, Ite):
            return ([f"if {pretty_guard(c.guard)} {{"] + _indent(self.stmt(c.then))
                    + ["} else {"] + _indent(self.stmt(c.orelse)) + ["}"])
        if isinstance(c, PChoice):
            v = fresh_plain("choice", self.taken)
            self.taken.add(v)
            self.choices.append(v)
            return ([f"{v} = flip({fmt_rational(c.prob)})", f"if {v} {{"]
                    + _indent(self.stmt(c.left)) + ["} else {"]
                    + _indent(self.stmt(c.right)) + ["}"])
        if isinstance(c, While):
            out = []
            if c.invariant is not None:
                out.append(f"@invariant({pretty_expr(c.invariant)})")
            return out + [f"while {pretty_guard(c.guard)} {{"] + _indent(self.stmt(c.body)) + ["}"]
        raise TypeError(c)

    def unif(self, c: Unif) -> list:
        n = c.n or self.n
        x = c.var
        havoc, assume = ("cohavoc", "coassume ?!") if self.angelic else ("havoc", "assume ?")
        if n == 1:
            return [f"{havoc} {x}", f"{assume}(0 <= {x} && {x} <= 1)"]
        self.uses_cells = True
        j = self.jvar
        size = self.nvar if n == self.n else str(n)
        return [
            f"{j} = unif(0, {n - 1}) // discrete_uniform({n})",
            f"{havoc} {x}",
            f"{assume}({j} / {size} <= {x} && {x} <= ({j} + 1) / {size})",
        ]


def _indent(lines):
    return ["  " + ln for ln in lines]


def fresh_plain(base, taken) -> str:
    if base not in taken:
        return base
    k = 1
    while f"{base}{k}" in taken:
        k += 1
    return f"{base}{k}"
