"""Hand-written lexer and recursive-descent parser for programs and expectations.

Surface syntax summary::

    vars x, y;                         // optional header
    domain Exp { func exp(UReal): UReal  axiom step forall e. exp(e+1) == 1/2*exp(e) }
    x := unif; y := unif@8;
    if (x*x + y*y <= 1) { c := c + 1 } else { skip };
    { a := 1 } [1/2] { a := 2 };
    while (i <= M) @invariant(c + [i <= M] * (M - i)) { i := i + 1 }

In terms ``-`` is monus, ``t / q`` divides by a rational literal and ``t^k``
is repeated multiplication.  ``p/q`` written without blanks is one literal.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .syntax import (
    Add, And, App, Assign, Axiom, BoolLit, Cmp, Const, Diverge, DomainDecl,
    Expr, FuncDecl, Implies, Inf, Ite, Iverson, Monus, Mul, Not, Observe, Or,
    ParseError, PChoice, ProgramUnit, Scale, Seq, Skip, Sum, Sup, Term, Unif,
    Var, While, free_vars, is_term, stmt_vars,
)

KEYWORDS = {
    "skip", "diverge", "unif", "observe", "if", "else", "while", "sup", "inf",
    "in", "true", "false", "vars", "domain", "func", "axiom", "forall",
}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<num>\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==>|:=|<=|>=|==|!=|&&|\|\||[<>!+\-*/^()\[\]{};,:@.])
""", re.VERBOSE)


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind, self.text, self.line, self.col = kind, text, line, col

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def tokenize(text: str) -> list:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if not m:
            ch = text[pos]
            if ch == "#":
                raise ParseError("'#' is reserved for generated names", line, col)
            raise ParseError(f"unexpected character {ch!r}", line, col)
        kind = m.lastgroup
        tok = m.group(kind)
        if kind != "ws":
            if kind == "ident" and tok in KEYWORDS:
                kind = "kw"
            out.append(Token(kind, tok, line, col))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


def parse_number(text: str) -> Fraction:
    return Fraction(text)


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text, kind=None) -> bool:
        t = self.tok
        return t.text == text and (kind is None or t.kind == kind) and t.kind != "eof"

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def expect(self, text):
        if not self.at(text):
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")
        t = self.tok
        self.i += 1
        return t

    def accept(self, text) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident":
            shown = t.text or "end of input"
            raise self.error(f"expected identifier, found {shown!r}")
        self.i += 1
        return t.text

    def number(self) -> Fraction:
        t = self.tok
        if t.kind != "num":
            raise self.error(f"expected number, found {t.text or 'end of input'!r}")
        self.i += 1
        return parse_number(t.text)

    def integer(self) -> int:
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            raise self.error("expected integer")
        self.i += 1
        return int(t.text)

    def eof(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # -- expressions
    def expr(self) -> Expr:
        left = self.product()
        while self.at("+") or self.at("-"):
            op = self.tok
            self.i += 1
            right = self.product()
            if op.text == "+":
                left = Add(left, right) if is_term(left) and is_term(right) else Sum(left, right)
            else:
                if not (is_term(left) and is_term(right)):
                    raise self.error("'-' (monus) needs term operands", op)
                left = Monus(left, right)
        return left

    def term(self) -> Term:
        t = self.tok
        e = self.expr()
        if not is_term(e):
            raise self.error("expected a term (no brackets or quantifiers here)", t)
        return e

    def product(self) -> Expr:
        factors = [self.factor()]
        while True:
            if self.at("*"):
                self.i += 1
                factors.append(self.factor())
            elif self.at("/"):
                slash = self.tok
                self.i += 1
                q = self.number()
                if q == 0:
                    raise self.error("division by zero", slash)
                factors.append(("lit", 1 / q, slash))
            else:
                break
        return self.combine(factors)

    def combine(self, factors) -> Expr:
        kind, val, tok = factors[0]
        if kind == "bracket":
            body = self.combine(factors[1:]) if len(factors) > 1 else Const(1)
            return Iverson(val, body)
        if len(factors) == 1:
            return Const(val) if kind == "lit" else val
        if kind == "lit":
            rest = self.combine(factors[1:])
            if not is_term(rest):
                return Scale(val, rest)
        out = None
        for kind, val, tok in factors:
            if kind == "lit":
                val = Const(val)
            elif kind == "bracket" or not is_term(val):
                raise self.error("only a rational literal or [guard] may multiply a non-term", tok)
            out = val if out is None else Mul(out, val)
        return out

    def factor(self):
        tok = self.tok
        kind, val = self.atom()
        if self.at("^"):
            self.i += 1
            k = self.integer()
            if k < 1:
                raise self.error("exponent must be at least 1")
            t = Const(val) if kind == "lit" else val
            if not is_term(t) or kind == "bracket":
                raise self.error("'^' applies to terms only", tok)
            out = t
            for _ in range(k - 1):
                out = Mul(out, t)
            return ("expr", out, tok)
        return (kind, val, tok)

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return "lit", parse_number(t.text)
        if t.kind == "ident":
            self.i += 1
            if self.at("("):
                self.i += 1
                args = [self.term()]
                while self.accept(","):
                    args.append(self.term())
                self.expect(")")
                return "expr", App(t.text, tuple(args))
            return "expr", Var(t.text)
        if self.accept("["):
            g = self.guard()
            self.expect("]")
            return "bracket", g
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return "expr", e
        if t.text in ("sup", "inf") and t.kind == "kw":
            self.i += 1
            v = self.ident()
            self.expect("in")
            self.expect("[")
            lo = self.number()
            self.expect(",")
            hi = self.number()
            close = self.expect("]")
            if lo > hi:
                raise self.error(f"empty interval [{lo}, {hi}]", close)
            self.expect(":")
            body = self.expr()
            cls = Sup if t.text == "sup" else Inf
            return "expr", cls(v, lo, hi, body)
        raise self.error(f"unexpected {t.text or 'end of input'!r} in expression")

    # -- guards
    def guard(self):
        left = self.guard_or()
        if self.at("==>"):
            self.i += 1
            return Implies(left, self.guard())
        return left

    def guard_or(self):
        left = self.guard_and()
        while self.accept("||"):
            left = Or(left, self.guard_and())
        return left

    def guard_and(self):
        left = self.guard_not()
        while self.accept("&&"):
            left = And(left, self.guard_not())
        return left

    def guard_not(self):
        if self.accept("!"):
            return Not(self.guard_not())
        return self.guard_atom()

    def guard_atom(self):
        t = self.tok
        if t.kind == "kw" and t.text in ("true", "false"):
            self.i += 1
            return BoolLit(t.text == "true")
        save = self.i
        try:
            left = self.term()
            op = self.tok
            if op.text in ("<", "<=", "==", "!=", ">", ">=") and op.kind == "op":
                self.i += 1
                return Cmp(op.text, left, self.term())
            failure = self.error(f"expected comparison operator, found {op.text or 'end of input'!r}")
        except ParseError as exc:
            failure = exc
        self.i = save
        if self.accept("("):
            g = self.guard()
            self.expect(")")
            return g
        raise failure

    # -- programs
    def unit(self) -> ProgramUnit:
        variables = None
        domains = []
        while True:
            if self.at("vars", "kw"):
                if variables is not None:
                    raise self.error("duplicate vars header")
                self.i += 1
                names = [self.ident()]
                while self.accept(","):
                    names.append(self.ident())
                self.expect(";")
                variables = tuple(names)
            elif self.at("domain", "kw"):
                domains.append(self.domain())
            else:
                break
        start = self.tok
        body = self.stmts(("eof",))
        self.eof()
        if variables is not None:
            extra = stmt_vars(body) - set(variables)
            if extra:
                raise self.error(f"undeclared variable(s): {', '.join(sorted(extra))}", start)
        return ProgramUnit(body, variables, tuple(domains))

    def stmts(self, closers) -> object:
        if self.tok.kind == "eof" or self.tok.text in closers:
            return Skip()
        items = [self.stmt()]
        while self.accept(";"):
            if self.tok.kind == "eof" or self.tok.text in closers:
                break
            items.append(self.stmt())
        out = items[-1]
        for s in reversed(items[:-1]):
            out = Seq(s, out)
        return out

    def block(self):
        self.expect("{")
        body = self.stmts(("}",))
        self.expect("}")
        return body

    def stmt(self):
        t = self.tok
        if t.kind == "kw":
            if t.text == "skip":
                self.i += 1
                return Skip()
            if t.text == "diverge":
                self.i += 1
                return Diverge()
            if t.text == "observe":
                self.i += 1
                self.expect("(")
                g = self.guard()
                self.expect(")")
                return Observe(g)
            if t.text == "if":
                self.i += 1
                self.expect("(")
                g = self.guard()
                self.expect(")")
                then = self.block()
                orelse = Skip()
                if self.accept("else"):
                    orelse = self.stmt() if self.at("if", "kw") else self.block()
                return Ite(g, then, orelse)
            if t.text == "while":
                self.i += 1
                self.expect("(")
                g = self.guard()
                self.expect(")")
                inv = None
                if self.at("@"):
                    self.i += 1
                    name = self.tok
                    if self.ident() != "invariant":
                        raise self.error("expected '@invariant'", name)
                    self.expect("(")
                    inv = self.expr()
                    self.expect(")")
                return While(g, self.block(), inv)
            raise self.error(f"unexpected keyword {t.text!r}")
        if self.at("{"):
            left = self.block()
            if self.at("["):
                self.i += 1
                ptok = self.tok
                p = self.number()
                if p > 1:
                    raise self.error(f"probability {p} outside [0,1]", ptok)
                self.expect("]")
                return PChoice(left, p, self.block())
            return left
        name = self.ident()
        self.expect(":=")
        if self.at("unif", "kw"):
            self.i += 1
            n = None
            if self.accept("@"):
                ntok = self.tok
                n = self.integer()
                if n < 1:
                    raise self.error("partition size must be at least 1", ntok)
            return Unif(name, n)
        return Assign(name, self.term())

    def domain(self) -> DomainDecl:
        self.expect("domain")
        name = self.ident()
        self.expect("{")
        funcs, axioms = [], []
        while not self.at("}"):
            if self.accept("func"):
                fname = self.ident()
                self.expect("(")
                arity = 0
                if not self.at(")"):
                    self.type_name()
                    arity = 1
                    while self.accept(","):
                        self.type_name()
                        arity += 1
                self.expect(")")
                self.expect(":")
                self.type_name()
                funcs.append(FuncDecl(fname, arity, True))
            elif self.accept("axiom"):
                aname = self.ident()
                params = []
                if self.accept("forall"):
                    while not self.at("."):
                        params.append(self.ident())
                        if self.accept(":"):
                            self.type_name()
                        self.accept(",")
                    self.expect(".")
                axioms.append(Axiom(aname, tuple(params), self.guard()))
            else:
                raise self.error("expected 'func' or 'axiom'")
        self.expect("}")
        decl = DomainDecl(name, tuple(funcs), tuple(axioms))
        declared = {f.name: f.arity for f in funcs}
        for ax in axioms:
            _check_apps(ax.formula, declared, self)
        return decl

    def type_name(self):
        t = self.tok
        if self.ident() != "UReal":
            raise self.error("only the UReal type is supported", t)


def _check_apps(g, declared, parser):
    from .syntax import guard_funcs
    unknown = guard_funcs(g) - set(declared)
    if unknown:
        raise parser.error(f"undeclared function(s): {', '.join(sorted(unknown))}")


def parse_unit(text: str) -> ProgramUnit:
    """Parse a full source file: optional ``vars`` header, domains, statements."""
    return Parser(text).unit()


def parse_program(text: str):
    """Parse program text and return its statement AST."""
    return parse_unit(text).body


def parse_expectation(text: str) -> Expr:
    p = Parser(text)
    e = p.expr()
    p.eof()
    return e


def parse_guard(text: str):
    p = Parser(text)
    g = p.guard()
    p.eof()
    return g


def parse_term(text: str) -> Term:
    p = Parser(text)
    t = p.term()
    p.eof()
    return t


def parse_domain(text: str) -> DomainDecl:
    p = Parser(text)
    d = p.domain()
    p.eof()
    return d


def check_declared(e: Expr, variables) -> None:
    extra = free_vars(e) - set(variables)
    if extra:
        raise ParseError(f"undeclared variable(s): {', '.join(sorted(extra))}")
