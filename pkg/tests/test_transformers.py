from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracle
from cases import (
    LOOP_FREE, LOOPS, power_of_two_violations, random_states, sandwich_violations,
    unfolding_violations,
)
from conftest import GOLDEN, PROGRAMS
from strategies import loop_free_programs, qf_exprs, states
from riemann_wp import (
    char_fn_apply, encode_nondet, eval_expr, parse_expectation, parse_program, parse_unit,
    transform, unfold,
)
from riemann_wp.benchmarks import IRWIN_HALL, MONTE_CARLO, MONTE_CARLO_INNER
from riemann_wp.semantics import has_inf, has_sup
from riemann_wp.syntax import (
    Diverge, Ite, Iverson, Seq, Skip, Stmt, Sum, Unif, free_vars, has_loop, negate, stmt_size,
    stmt_vars,
)
from riemann_wp.transformers import SizeLimitExceeded, TransformError, TransformerKind

F = Fraction
pe = parse_expectation

def value(kind, prog, post, n, s, grid=1):
    return eval_expr(transform(kind, prog, post, n), s, grid).lo


# ------------------------------------------------------------------ examples

def test_lwp_two_cells():
    prog, post = parse_program("x := unif"), pe("[x >= 1/2] * 1")
    for s in random_states(["x"], 5, 1):
        assert value("lwp", prog, post, 2, s) == F(1, 2)


def test_lwp_three_cells_is_worse():
    prog, post = parse_program("x := unif"), pe("[x >= 1/2] * 1")
    assert value("lwp", prog, post, 3, {"x": 0}) == F(1, 3)


def test_monte_carlo_upper_sum_matches_cell_count():
    out = transform("uwp", parse_program(MONTE_CARLO_INNER), pe("count"), 16)
    assert free_vars(out) == {"count"}
    hits = oracle.quarter_disk_cells(16)
    assert F(hits, 256) == F(107, 128)
    for c in (0, 1, F(5, 2)):
        assert eval_expr(out, {"count": c}).lo == c + F(hits, 256)
    assert F(hits, 256) <= F(85, 100)


def test_monte_carlo_lower_sum_matches_cell_count():
    out = transform("lwp", parse_program(MONTE_CARLO_INNER), pe("count"), 16)
    assert eval_expr(out, {"count": 0}).lo == F(oracle.quarter_disk_inner_cells(16), 256) == F(183, 256)


@pytest.mark.parametrize("kind", ["lwp", "uwp", "lwlp", "uwlp"])
def test_skip_is_identity(kind):
    f = pe("[x < 1] * x + (sup v in [0,1]: v)")
    assert transform(kind, Skip(), f, 5) == f


@pytest.mark.parametrize("kind, expected", [("lwp", 0), ("uwp", 0), ("lwlp", 1), ("uwlp", 1)])
def test_diverge_rows(kind, expected):
    assert transform(kind, Diverge(), pe("x + 3"), 4) == pe(str(expected))


def test_per_statement_partition():
    prog = parse_program("x := unif@2")
    assert value("lwp", prog, pe("[x >= 1/2] * 1"), 3, {"x": 0}) == F(1, 2)


def test_lower_kinds_stay_sup_free():
    out = transform("lwp", parse_program(MONTE_CARLO_INNER), pe("count"), 4)
    assert has_inf(out) and not has_sup(out)
    out = transform("uwlp", parse_program(MONTE_CARLO_INNER), pe("[count >= 1] * 1"), 4)
    assert has_sup(out) and not has_inf(out)


def test_loop_is_rejected():
    with pytest.raises(TransformError):
        transform("lwp", parse_program("while (x < 1) { x := x + 1 }"), pe("x"), 2)


def test_size_cap():
    prog = parse_program("x := unif; y := unif; z := unif")
    with pytest.raises(SizeLimitExceeded):
        transform("uwp", prog, pe("x + y + z"), 16, max_nodes=1000)


def test_kind_validation():
    with pytest.raises(ValueError):
        TransformerKind("wp", 2)
    with pytest.raises(ValueError):
        TransformerKind("lwp", 0)


def test_char_fn_false_guard_collapses_to_post():
    loop = parse_program("while (x < x) { skip }")
    post = pe("x + 2")
    out = char_fn_apply("uwp", loop, post, post, 3)
    for s in random_states(["x"], 10, 2):
        assert eval_expr(out, s).lo == eval_expr(post, s).lo


def test_char_fn_monte_carlo_shape():
    loop = MONTE_CARLO.loop
    inv = MONTE_CARLO.invariant_expr
    out = char_fn_apply("uwp", loop, pe("count"), inv, 16)
    assert out == Sum(Iverson(loop.guard, transform("uwp", loop.body, inv, 16)),
                      Iverson(negate(loop.guard), pe("count")))


def test_char_fn_irwin_hall_free_vars():
    out = char_fn_apply("uwp", IRWIN_HALL.loop, pe("x"), IRWIN_HALL.invariant_expr, 10)
    assert free_vars(out) <= {"x", "i", "M"}


def test_char_fn_rejects_nested_loops():
    loop = parse_program("while (i < 2) { while (j < 2) { j := j + 1 }; i := i + 1 }")
    with pytest.raises(TransformError, match="non-nested"):
        char_fn_apply("uwp", loop, pe("i"), pe("i"), 2)


def test_unfold_zero():
    assert unfold(parse_program("while (true) { skip }"), 0) == Diverge()


def test_unfold_one():
    loop = parse_program("while (x < 1) { x := x + 1 }")
    assert unfold(loop, 1) == Ite(loop.guard, Seq(loop.body, Diverge()), Skip())


def test_unfold_loop_free_identity():
    prog = parse_program(MONTE_CARLO_INNER)
    assert unfold(prog, 5) == prog


def test_unfold_nested_by_hand():
    outer = parse_program("while (i < 2) { while (j < 2) { j := j + 1 }; i := i + 1 }")
    inner = outer.body.first
    g, h = outer.guard, inner.guard
    inc_i, inc_j = outer.body.second, inner.body
    # inner loops unfold with one less depth than the outer iteration they sit in
    inner1 = Ite(h, Seq(inc_j, Diverge()), Skip())
    step1 = Ite(g, Seq(Seq(Diverge(), inc_i), Diverge()), Skip())
    expected = Ite(g, Seq(Seq(inner1, inc_i), step1), Skip())
    got = unfold(outer, 2)
    assert got == expected
    assert not has_loop(got)
    sizes = [stmt_size(unfold(outer, d)) for d in range(5)]
    assert sizes == sorted(sizes) and len(set(sizes)) == 5


def _golden(name, text):
    path = GOLDEN / name
    assert path.read_text() == text


def test_encode_two_cells_angelic():
    _golden("uniform_n2_angelic.hvl", encode_nondet(parse_program("x := unif"), 2, "angelic"))


def test_encode_single_cell_has_no_choice():
    text = encode_nondet(parse_program("x := unif"), 1, "demonic")
    assert "unif(0" not in text
    assert "havoc x" in text and "assume ?(0 <= x && x <= 1)" in text


def test_encode_monte_carlo_listing():
    prog = parse_unit((PROGRAMS / "montecarlo.pw").read_text()).body
    text = encode_nondet(prog, 16, "angelic", post=pe("count"), name="monte_carlo_pi")
    _golden("monte_carlo_n16_angelic.hvl", text)
    assert text.count("cohavoc") == 2
    assert text.count("discrete_uniform(16)") == 2


def test_encode_is_deterministic():
    prog = parse_program(MONTE_CARLO_INNER)
    assert encode_nondet(prog, 8, "demonic") == encode_nondet(prog, 8, "demonic")


# ---------------------------------------------------------------- properties

@settings(max_examples=150)
@given(loop_free_programs, qf_exprs, states, st.integers(1, 3),
       st.sampled_from(["lwp", "uwp", "lwlp", "uwlp"]))
def test_transform_matches_denotational_reference(prog, post, s, n, kind):
    assume(sum(isinstance(c, Unif) for c in _stmts(prog)) <= 3)
    expected = oracle.riemann(kind, prog, lambda t: oracle.expr(post, t), n)(s)
    assert value(kind, prog, post, n, s) == expected


def _stmts(c):
    yield c
    for attr in ("first", "second", "then", "orelse", "left", "right"):
        sub = getattr(c, attr, None)
        if isinstance(sub, Stmt):
            yield from _stmts(sub)


@pytest.mark.parametrize("name", sorted(LOOP_FREE))
def test_sandwich(name):
    assert sandwich_violations(name) == []


@pytest.mark.parametrize("name", sorted(LOOP_FREE))
def test_power_of_two_monotonicity(name):
    assert power_of_two_violations(name) == []


@pytest.mark.parametrize("name", sorted(LOOPS))
def test_unfolding_monotonicity(name):
    assert unfolding_violations(name) == []


@pytest.mark.parametrize("name", sorted(LOOP_FREE))
def test_monotone_in_post(name):
    src, post, _ = LOOP_FREE[name]
    prog, f = parse_program(src), pe(post)
    g = pe(f"{post} + [x <= 1] * 2")
    names = sorted(free_vars(g) | stmt_vars(prog))
    for kind in ("lwp", "uwp"):
        tf, tg = transform(kind, prog, f, 4), transform(kind, prog, g, 4)
        for s in random_states(names, 20, 11):
            assert eval_expr(tf, s).lo <= eval_expr(tg, s).lo


def test_refutation_progress_along_powers_of_two():
    loop = parse_program(IRWIN_HALL.source)
    f = pe("x")
    for s in random_states(["x", "y", "i", "M"], 20, 5):
        s["M"] = F(int(s["M"]) % 5)
        vals = [value("lwp", unfold(loop, n), f, n, s) for n in (1, 2, 4)]
        assert vals == sorted(vals), s
