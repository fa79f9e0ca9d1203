"""Hypothesis generators for ASTs, states and small loop-free programs."""

from fractions import Fraction

from hypothesis import strategies as st

from riemann_wp.syntax import (
    Add, And, Assign, BoolLit, Cmp, CMP_OPS, Const, Diverge, Implies, Inf, Ite,
    Iverson, Monus, Mul, Not, Observe, Or, PChoice, Scale, Seq, Skip, Sum, Sup,
    Unif, Var, While, is_term,
)

NAMES = ("x", "y", "z", "i", "M")
BINDERS = ("u", "v", "x")

rationals = st.builds(Fraction, st.integers(0, 12), st.integers(1, 6))
probs = st.builds(Fraction, st.integers(0, 4), st.just(4))
names = st.sampled_from(NAMES)


def _interval(draw_pair):
    a, b = draw_pair
    return (a, b) if a <= b else (b, a)


intervals = st.tuples(rationals, rationals).map(_interval)

terms = st.recursive(
    st.one_of(st.builds(Const, rationals), st.builds(Var, names)),
    lambda t: st.one_of(st.builds(Add, t, t), st.builds(Monus, t, t), st.builds(Mul, t, t)),
    max_leaves=6,
)

guards = st.recursive(
    st.one_of(st.builds(Cmp, st.sampled_from(CMP_OPS), terms, terms),
              st.builds(BoolLit, st.booleans())),
    lambda g: st.one_of(st.builds(Not, g), st.builds(And, g, g), st.builds(Or, g, g),
                        st.builds(Implies, g, g)),
    max_leaves=4,
)


def _quant(cls):
    return lambda e: st.builds(lambda v, iv, body: cls(v, iv[0], iv[1], body),
                               st.sampled_from(BINDERS), intervals, e)


def _canonical(e):
    # term-valued sums and scalings are written as Add / Mul, as the parser does
    if isinstance(e, Scale) and is_term(e.body):
        return Mul(Const(e.factor), e.body)
    if isinstance(e, Sum) and is_term(e.left) and is_term(e.right):
        return Add(e.left, e.right)
    return e


def expr_strategy(quantifiers=True):
    def extend(e):
        options = [st.builds(Iverson, guards, e),
                   st.builds(Scale, rationals, e).map(_canonical),
                   st.builds(Sum, e, e).map(_canonical)]
        if quantifiers:
            options += [_quant(Sup)(e), _quant(Inf)(e)]
        return st.one_of(*options)
    return st.recursive(terms, extend, max_leaves=6)


exprs = expr_strategy()
qf_exprs = expr_strategy(quantifiers=False)


def stmt_strategy(loops=True):
    leaves = st.one_of(
        st.just(Skip()), st.just(Diverge()),
        st.builds(Assign, names, terms),
        st.builds(Unif, names, st.one_of(st.none(), st.integers(1, 9))),
        st.builds(Observe, guards),
    )

    def extend(c):
        options = [
            st.builds(Ite, guards, c, c),
            st.builds(PChoice, c, probs, c),
            st.builds(Seq, c, c),
        ]
        if loops:
            options.append(st.builds(While, guards, c, st.one_of(st.none(), qf_exprs)))
        return st.one_of(*options)
    return st.recursive(leaves, extend, max_leaves=8)


programs = stmt_strategy()
loop_free_programs = stmt_strategy(loops=False)

states = st.fixed_dictionaries({n: rationals for n in NAMES})
