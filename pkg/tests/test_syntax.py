from fractions import Fraction
from math import gcd

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from conftest import PROGRAMS as PROGRAMS_DIR
from strategies import exprs, guards, programs, states
from riemann_wp import parse_expectation, parse_guard, parse_program, parse_unit, pretty, pretty_expr
from riemann_wp.parser import parse_domain, parse_term
from riemann_wp.printer import pretty_guard
from riemann_wp.syntax import (
    Add, And, Assign, Cmp, Const, Iverson, Ite, Monus, Mul, Not, Observe, ParseError, PChoice, Scale, Seq,
    Skip, Sum, Sup, Unif, Var, While, free_vars, normalize_guard, stmt_vars,
)


def test_skip():
    assert parse_program("skip") == Skip()
    assert pretty(Skip()) == "skip"


def test_unif_then_observe():
    assert parse_program("x := unif; observe(x <= 1/2)") == Seq(
        Unif("x"), Observe(Cmp("<=", Var("x"), Const(Fraction(1, 2)))))


def test_monte_carlo_body_guard():
    src = (PROGRAMS_DIR / "montecarlo-inner.pw").read_text()
    prog = parse_program(src)
    ite = prog.second.second
    assert isinstance(ite, Ite)
    xx = Mul(Var("x"), Var("x"))
    yy = Mul(Var("y"), Var("y"))
    assert ite.guard == Cmp("<=", Add(xx, yy), Const(1))


def test_sup_expectation():
    e = parse_expectation("sup v in [0,5]: [w == v*v] * v")
    assert e == Sup("v", 0, 5, Iverson(Cmp("==", Var("w"), Mul(Var("v"), Var("v"))), Var("v")))


def test_monte_carlo_invariant_uses_monus():
    e = parse_expectation("count + [i <= M] * (0.85 * ((M - i) + 1))")
    assert e == Sum(Var("count"), Iverson(
        Cmp("<=", Var("i"), Var("M")),
        Mul(Const(Fraction(17, 20)), Add(Monus(Var("M"), Var("i")), Const(1)))))


def test_zero():
    assert parse_expectation("0") == Const(0)


def test_bare_bracket_means_indicator():
    assert parse_expectation("[x < 1]") == Iverson(Cmp("<", Var("x"), Const(1)), Const(1))


def test_decimal_literals_are_exact():
    assert parse_term("0.1 + 0.2") == Add(Const(Fraction(1, 10)), Const(Fraction(1, 5)))


def test_scale_of_non_term():
    e = parse_expectation("1/2 * [x < 1] * x")
    assert e == Scale(Fraction(1, 2), Iverson(Cmp("<", Var("x"), Const(1)), Var("x")))


def test_pchoice_and_unif_annotation():
    p = parse_program("{ x := unif@8 } [1/4] { x := 1 }")
    assert p == PChoice(Unif("x", 8), Fraction(1, 4), Assign("x", Const(1)))


def test_invariant_annotation():
    p = parse_program("while (i <= M) @invariant(i + 1) { i := i + 1 }")
    assert isinstance(p, While)
    assert p.invariant == Add(Var("i"), Const(1))


def test_comments_and_whitespace():
    p = parse_program("// leading comment\nx := 1; // trailing\n  skip\n")
    assert p == Seq(Assign("x", Const(1)), Skip())


@pytest.mark.parametrize("src, fragment", [
    ("x := 1 +", "1:9"),
    ("{ skip } [3/2] { skip }", "outside [0,1]"),
    ("vars x; y := 1", "undeclared"),
    ("x# := 1", "reserved"),
    ("while (x < 1) { skip", "1:"),
])
def test_program_errors(src, fragment):
    with pytest.raises(ParseError) as exc:
        parse_program(src)
    assert fragment in str(exc.value)


@pytest.mark.parametrize("src", ["sup v in [2,1]: v", "inf v in [-1,1]: v", "x +", "x * * y"])
def test_expectation_errors(src):
    with pytest.raises(ParseError):
        parse_expectation(src)


def test_error_position():
    with pytest.raises(ParseError) as exc:
        parse_program("skip;\nx := := 1")
    assert exc.value.line == 2


def test_vars_header():
    unit = parse_unit("vars x, y;\nx := y")
    assert unit.variables == ("x", "y")
    assert stmt_vars(unit.body) == {"x", "y"}


def test_domain_declaration():
    d = parse_domain("domain D { func exp(UReal): UReal axiom base exp(0) == 1 "
                     "axiom step forall e. exp(e + 1) == 1/2 * exp(e) }")
    assert [f.name for f in d.funcs] == ["exp"]
    assert [a.name for a in d.axioms] == ["base", "step"]
    assert d.axioms[1].params == ("e",)


def test_axiom_free_variables_must_be_bound():
    with pytest.raises(ParseError):
        parse_domain("domain D { func f(UReal): UReal axiom bad f(e) == 1 }")


@pytest.mark.parametrize("src, expected", [
    ("x + y", {"x", "y"}),
    ("sup x in [0,1]: x * y", {"y"}),
    ("x + (sup x in [0,1]: x)", {"x"}),
])
def test_free_vars(src, expected):
    assert free_vars(parse_expectation(src)) == expected


def test_shadowing_binders_print_with_scope():
    inner = Sup("v", 0, 2, Var("v"))
    e = Sum(Sup("v", 0, 1, Var("v")), Var("v"))
    assert pretty_expr(e) == "(sup v in [0, 1]: v) + v"
    nested = Sup("v", 0, 1, Sum(Var("v"), inner))
    assert parse_expectation(pretty_expr(nested)) == nested


def test_pretty_is_deterministic():
    src = (PROGRAMS_DIR / "montecarlo.pw").read_text()
    assert pretty(parse_program(src)) == pretty(parse_program(pretty(parse_program(src))))


def test_constants_in_lowest_terms():
    c = Const(Fraction(6, 8))
    assert (c.value.numerator, c.value.denominator) == (3, 4)
    assert Const("0.50").value == Fraction(1, 2)


# ----------------------------------------------------------------- properties

@settings(max_examples=1000)
@given(programs)
def test_program_round_trip(p):
    assert parse_program(pretty(p)) == p


@settings(max_examples=500)
@given(exprs)
def test_expectation_round_trip(e):
    assert parse_expectation(pretty_expr(e)) == e


@settings(max_examples=300)
@given(guards)
def test_guard_round_trip(g):
    assert parse_guard(pretty_guard(g)) == g


@settings(max_examples=300)
@given(guards, states)
def test_guard_normalization_preserves_value(g, s):
    assert oracle.guard(normalize_guard(g), s) == oracle.guard(g, s)


@settings(max_examples=200)
@given(guards)
def test_normal_form_uses_core_connectives(g):
    def core(h):
        if isinstance(h, Cmp):
            return h.op == "<"
        if isinstance(h, Not):
            return core(h.arg)
        if isinstance(h, And):
            return core(h.left) and core(h.right)
        return False
    assert core(normalize_guard(g))


@given(st.integers(0, 10**6), st.integers(1, 10**6))
def test_rationals_normalized(p, q):
    v = Const(Fraction(p, q)).value
    assert v == Fraction(p, q)
    assert gcd(v.numerator, v.denominator) == 1

