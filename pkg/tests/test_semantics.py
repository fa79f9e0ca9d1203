from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from strategies import exprs, names, qf_exprs, states, terms
from riemann_wp import classify, eval_expr, eval_guard, eval_term, parse_expectation, substitute, to_pnf
from riemann_wp.parser import parse_guard, parse_term
from riemann_wp.semantics import EvalError, has_inf, has_sup, is_pnf
from riemann_wp.syntax import Const, Sup, Var, free_vars

pe = parse_expectation
F = Fraction


@pytest.mark.parametrize("src, state, value", [
    ("x - y", {"x": 1, "y": 3}, 0),
    ("2 * x + 1/2", {"x": F(3, 4)}, 2),
    ("(M - i) + 1", {"M": 5, "i": 2}, 4),
])
def test_eval_term(src, state, value):
    assert eval_term(parse_term(src), state) == value


@pytest.mark.parametrize("src, state, value", [
    ("x < 1 && !(x < 0)", {"x": F(1, 2)}, True),
    ("x * x + y * y <= 1", {"x": 1, "y": 1}, False),
    ("x < x", {"x": 7}, False),
])
def test_eval_guard(src, state, value):
    assert eval_guard(parse_guard(src), state) is value


def test_missing_variable():
    with pytest.raises(EvalError):
        eval_term(parse_term("x + y"), {"x": 1})


def test_sup_hits_witness_on_grid():
    enc = eval_expr(pe("sup v in [0,5]: [w == v*v] * v"), {"w": 25}, grid=5)
    assert enc.lo == enc.hi == 5
    assert not enc.exact


def test_boundary_included():
    enc = eval_expr(pe("[x >= 1/2] * 1"), {"x": F(1, 2)})
    assert (enc.lo, enc.hi, enc.exact) == (1, 1, True)


def test_inf_at_endpoint():
    assert eval_expr(pe("inf v in [0,1]: v + x"), {"x": 2}, grid=1).lo == 2


def test_substitution_without_capture():
    assert substitute(pe("[x >= 1/2] * 1"), "x", parse_term("y + y")) == pe("[y + y >= 1/2] * 1")


def test_substitution_renames_binder():
    out = substitute(pe("sup v in [0,1]: v + x"), "x", Var("v"))
    assert isinstance(out, Sup) and out.var != "v"
    assert free_vars(out) == {"v"}
    for k in range(5):
        v = F(k, 3)
        # the free v now stands for the old x
        assert eval_expr(out, {"v": v}, grid=4).lo == 1 + v


def test_identity_substitution():
    f = pe("x + (sup x in [0,1]: x * y)")
    assert substitute(f, "x", Var("x")) == f


@pytest.mark.parametrize("src, cls", [
    ("x + 1", "quantifier_free"),
    ("sup v in [0,1]: v", "inf_free"),
    ("inf v in [0,1]: v", "sup_free"),
    ("(sup v in [0,1]: v) + (inf w in [0,1]: w)", "mixed"),
])
def test_classify(src, cls):
    assert classify(pe(src)) == cls


def test_pnf_quantifier_free_unchanged():
    f = pe("[x < 1] * x + 2 * y")
    assert to_pnf(f) == f


def test_pnf_sum_of_sups():
    assert to_pnf(pe("(sup v in [0,1]: v) + (sup w in [0,1]: w)")) == pe(
        "sup v in [0,1]: sup w in [0,1]: v + w")


def test_pnf_iverson_over_sup():
    assert to_pnf(pe("[x < 1] * (sup v in [0,1]: v + x)")) == pe("sup v in [0,1]: [x < 1] * (v + x)")


def test_pnf_renames_clashing_binders():
    g = to_pnf(pe("(sup v in [0,1]: v) + (sup v in [0,2]: v)"))
    assert is_pnf(g)
    assert g.var != g.body.var


# ----------------------------------------------------------------- properties

@settings(max_examples=300)
@given(qf_exprs, states)
def test_eval_matches_reference_evaluator(f, s):
    enc = eval_expr(f, s)
    assert enc.exact and enc.lo == enc.hi == oracle.expr(f, s)


@settings(max_examples=200)
@given(exprs, states, st.integers(1, 3))
def test_sampled_eval_matches_reference(f, s, grid):
    assert eval_expr(f, s, grid).lo == oracle.expr(f, s, grid)


def _check_substitution(f, x, t, n_states, grid):
    g = substitute(f, x, t)
    used = sorted(free_vars(f) | free_vars(t) | {x})
    for k in range(n_states):
        s = {n: F((k * 7 + 3 * j) % 11, 1 + (k + j) % 4) for j, n in enumerate(used)}
        moved = {**s, x: eval_term(t, s)}
        assert eval_expr(g, s, grid).lo == eval_expr(f, moved, grid).lo


@settings(max_examples=60)
@given(qf_exprs, names, terms)
def test_substitution_semantics(f, x, t):
    _check_substitution(f, x, t, n_states=100, grid=1)


@settings(max_examples=60)
@given(exprs, names, terms)
def test_substitution_semantics_under_binders(f, x, t):
    _check_substitution(f, x, t, n_states=10, grid=2)


@settings(max_examples=300)
@given(exprs)
def test_pnf_flags_and_free_vars(f):
    g = to_pnf(f)
    assert is_pnf(g)
    assert free_vars(g) == free_vars(f)
    if not has_sup(f):
        assert not has_sup(g)
    if not has_inf(f):
        assert not has_inf(g)


@settings(max_examples=200)
@given(exprs, states, st.integers(1, 2))
def test_pnf_preserves_sampled_value(f, s, grid):
    # sampled sup/inf distribute over + and nonnegative scaling exactly as the real ones do
    assert oracle.expr(to_pnf(f), s, grid) == oracle.expr(f, s, grid)


def test_constants_evaluate_exactly():
    assert eval_expr(Const(F(1, 3)), {}).lo == F(1, 3)
