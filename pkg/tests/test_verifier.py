from fractions import Fraction

import pytest

from riemann_wp import (
    Budget, CwpBoundReport, SolverConfig, VerifierError, char_fn_apply, check_bound_loopfree,
    check_subinvariant_wlp, check_superinvariant, cwp_upper_bound, eval_expr, parse_expectation,
    parse_program, refute_lower_bound_wlp, refute_upper_bound, transform, unfold, verify_program,
)
from riemann_wp.benchmarks import (
    DIVERGING, IRWIN_HALL, IRWIN_HALL_CONDITIONED_WLP, IRWIN_HALL_CONDITIONED_WP, MONTE_CARLO,
    MONTE_CARLO_INNER,
)
from riemann_wp.syntax import ONE, Const, Skip, Var
from riemann_wp.transformers import TransformerKind

pe = parse_expectation
F = Fraction
pytestmark = pytest.mark.solver

MC_WEAK = "count + [i <= M] * 0.70 * ((M - i) + 1)"
SMALL = Budget(max_n=8, max_seconds=60)


def at(expr, state, grid=1):
    env = {v: state.get(v, F(0)) for v in _free(expr)}
    return eval_expr(expr, env, grid).lo


def _free(e):
    from riemann_wp.syntax import free_vars
    return free_vars(e)


# ---------------------------------------------------------------- loop-free

def test_monte_carlo_step_below_085(solver_config):
    v = check_bound_loopfree("upper", "uwp", parse_program(MONTE_CARLO_INNER), Var("count"),
                             pe("count + 0.85"), 16, config=solver_config)
    assert v.verified and v.n == 16 and v.kind == "uwp"
    assert v.assumptions == []


def test_monte_carlo_step_not_below_078(solver_config):
    prog = parse_program(MONTE_CARLO_INNER)
    v = check_bound_loopfree("upper", "uwp", prog, Var("count"), pe("count + 0.78"), 16,
                             config=solver_config)
    assert v.refuted
    up = transform(TransformerKind("uwp", 16), prog, Var("count"))
    # the exact upper sum exceeds the claimed bound at the witness
    assert at(up, v.witness) > at(pe("count + 0.78"), v.witness)


@pytest.mark.parametrize("kind", ["uwp", "lwp", "uwlp", "lwlp"])
@pytest.mark.parametrize("direction", ["upper", "lower"])
def test_skip_meets_its_own_bound(kind, direction, solver_config):
    f = pe("[x <= 1] * x")
    v = check_bound_loopfree(direction, kind, Skip(), f, f, 4, config=solver_config)
    assert v.verified


def test_loop_free_polarity_is_checked():
    with pytest.raises(VerifierError):
        check_bound_loopfree("upper", "uwp", Skip(), pe("inf v in [0,1]: v"), Const(1), 2)


def test_loop_free_rejects_loops():
    with pytest.raises(VerifierError):
        check_bound_loopfree("upper", "uwp", MONTE_CARLO.loop, Var("count"), Var("count"), 2)


def test_wlp_bound_needs_one_bounded_post(solver_config):
    with pytest.raises(VerifierError):
        check_bound_loopfree("lower", "lwlp", Skip(), Var("x"), Const(0), 2, config=solver_config)


# ---------------------------------------------------------------- invariants

def test_monte_carlo_superinvariant(solver_config):
    b = MONTE_CARLO
    v = check_superinvariant(b.n, b.loop, b.post_expr, b.invariant_expr, config=solver_config)
    assert v.verified


def test_irwin_hall_superinvariant(solver_config):
    b = IRWIN_HALL
    assert check_superinvariant(b.n, b.loop, b.post_expr, b.invariant_expr, config=solver_config).verified


def test_weak_monte_carlo_invariant_is_refuted(solver_config):
    b = MONTE_CARLO
    inv = pe(MC_WEAK)
    v = check_superinvariant(16, b.loop, b.post_expr, inv, config=solver_config)
    assert v.refuted
    phi = char_fn_apply(TransformerKind("uwp", 16), b.loop, b.post_expr, inv)
    assert at(phi, v.witness) > at(inv, v.witness)


def test_invariant_must_be_quantifier_free():
    with pytest.raises(VerifierError):
        check_superinvariant(2, MONTE_CARLO.loop, Var("count"), pe("sup v in [0,1]: v + count"))


def test_nested_loops_are_rejected():
    loop = parse_program("while (i < 2) { while (j < 2) { j := j + 1 }; i := i + 1 }")
    with pytest.raises(VerifierError):
        check_superinvariant(2, loop, Var("i"), Var("i"))


def test_diverging_subinvariant(solver_config):
    b = DIVERGING
    v = check_subinvariant_wlp(b.n, b.loop, b.post_expr, b.invariant_expr, b.decls, solver_config,
                               b.funcs, assume_bounded=True)
    assert v.verified


def test_conditioned_subinvariant(solver_config):
    b = IRWIN_HALL_CONDITIONED_WLP
    v = check_subinvariant_wlp(b.n, b.loop, b.post_expr, b.invariant_expr, b.decls, solver_config,
                               b.funcs, assume_bounded=True)
    assert v.verified


def test_zero_is_always_a_subinvariant(solver_config):
    for b in (MONTE_CARLO, IRWIN_HALL, DIVERGING):
        v = check_subinvariant_wlp(2, b.loop, ONE, Const(0), config=solver_config)
        assert v.verified


def test_axioms_prove_the_diverging_invariant_bounded(solver_config):
    b = DIVERGING
    v = check_subinvariant_wlp(b.n, b.loop, b.post_expr, b.invariant_expr, b.decls, solver_config, b.funcs)
    assert v.verified and v.assumptions == []


def test_unproved_boundedness_is_assumed_explicitly():
    b = DIVERGING
    solver_config = SolverConfig(timeout=5)
    inv = pe("[a <= b] * 2 * exp(x)")
    v = check_subinvariant_wlp(b.n, b.loop, b.post_expr, inv, b.decls, solver_config, b.funcs)
    assert v.status == "Unknown" and "assume_bounded" in v.reason
    v = check_subinvariant_wlp(b.n, b.loop, b.post_expr, inv, b.decls, solver_config, b.funcs,
                               assume_bounded=True)
    assert any("assumed 1-bounded" in a for a in v.assumptions)


# ------------------------------------------------------------------- cwp

def test_conditioned_cwp_report(solver_config):
    wp, wlp = IRWIN_HALL_CONDITIONED_WP, IRWIN_HALL_CONDITIONED_WLP
    r = cwp_upper_bound(wp.loop, wp.post_expr, wp.invariant_expr, wp.n, wlp.invariant_expr, wlp.n,
                        wlp.decls, solver_config, wlp.funcs, assume_bounded=True)
    assert isinstance(r, CwpBoundReport)
    assert r.n == 19 and r.n_wlp == 2
    assert r.side_condition.endswith("> 0")
    assert "/" in r.ratio
    assert r.to_json()["status"] == "Verified"


def test_cwp_with_denominator_one(solver_config):
    b = MONTE_CARLO
    r = cwp_upper_bound(b.loop, b.post_expr, b.invariant_expr, b.n, ONE, 1, config=solver_config)
    assert isinstance(r, CwpBoundReport)
    assert r.side_condition == "1 > 0"


def test_cwp_failing_numerator(solver_config):
    b = MONTE_CARLO
    r = cwp_upper_bound(b.loop, b.post_expr, pe(MC_WEAK), 16, ONE, 1, config=solver_config)
    assert r.refuted and r.details["failed"] == "numerator"
    assert r.witness is not None


# ---------------------------------------------------------------- refutation

def _confirm(v, kind, prog, f, g):
    t = transform(TransformerKind(kind, v.n), unfold(prog, v.details["depth"]), f)
    lhs, rhs = (t, g) if kind == "lwp" else (g, t)
    assert at(lhs, v.witness) > at(rhs, v.witness)


def test_refute_uniform_quarter(solver_config):
    prog, f, g = parse_program("x := unif"), Var("x"), pe("1/4")
    v = refute_upper_bound(prog, f, g, SMALL, config=solver_config)
    assert v.refuted and v.n == 4
    _confirm(v, "lwp", prog, f, g)


def test_refute_observed_wlp(solver_config):
    prog, f, g = parse_program("x := unif; observe(x <= 1/2)"), ONE, pe("3/4")
    v = refute_lower_bound_wlp(prog, f, g, Budget(max_n=16), config=solver_config)
    assert v.refuted and v.n == 8
    _confirm(v, "uwlp", prog, f, g)


def test_refute_weak_monte_carlo_bound(solver_config):
    prog = parse_program("i := 1; count := 0; " + MONTE_CARLO.source)
    v = refute_upper_bound(prog, Var("count"), pe("[M <= 1] * 0.5 + [1 < M] * M"), SMALL,
                           config=solver_config)
    assert v.refuted
    _confirm(v, "lwp", prog, Var("count"), pe("[M <= 1] * 0.5 + [1 < M] * M"))


@pytest.mark.parametrize("src, f, g", [
    ("skip", "x", "x"),
    ("while (true) { skip }", "1", "0"),
])
def test_nothing_to_refute_upper(src, f, g, solver_config):
    v = refute_upper_bound(parse_program(src), pe(f), pe(g), SMALL, config=solver_config)
    assert v.status == "Unknown" and v.reason.startswith("budget")


@pytest.mark.parametrize("src, f, g", [
    ("x := unif; observe(x <= 1/2)", "1", "0"),
    ("diverge", "1", "1"),
])
def test_nothing_to_refute_wlp(src, f, g, solver_config):
    v = refute_lower_bound_wlp(parse_program(src), pe(f), pe(g), SMALL, config=solver_config)
    assert v.status == "Unknown"


def test_refutation_polarity():
    with pytest.raises(VerifierError):
        refute_upper_bound(Skip(), pe("sup v in [0,1]: v"), Const(1))


# ---------------------------------------------------------- whole programs

def test_program_with_annotated_loop(solver_config):
    src = MONTE_CARLO.source.replace(
        "while (i <= M) {", f"while (i <= M) @invariant({MONTE_CARLO.invariant}) {{")
    prog = parse_program("count := 0; i := 1; " + src)
    v = verify_program(prog, Var("count"), pe("0.85 * M"), 16, config=solver_config)
    assert v.verified


def test_program_with_weak_invariant_fails(solver_config):
    from conftest import PROGRAMS
    prog = parse_program((PROGRAMS / "montecarlo-wrong.pw").read_text())
    v = verify_program(prog, Var("count"), pe("count + 0.70 * ((M - i) + 1)"), 16, config=solver_config)
    assert v.refuted and "loop" in v.details


def test_verdict_json_shape(solver_config):
    v = refute_upper_bound(parse_program("x := unif"), Var("x"), pe("1/4"), SMALL, config=solver_config)
    out = v.to_json()
    assert out["status"] == "Refuted" and out["N"] == 4
    assert set(out) >= {"status", "N", "kind", "solver_time_ms", "query_nodes", "assumptions", "witness"}
