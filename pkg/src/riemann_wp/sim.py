"""Monte Carlo interpreter used as an independent statistical oracle.

Samples are 64-bit dyadic rationals, so states stay exact; a run either
terminates, violates an observe, or exhausts its step budget.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .semantics import eval_expr
from .syntax import (
    Add, And, App, Assign, BoolLit, Cmp, Const, Diverge, Implies, Ite, Monus,
    Mul, Not, Observe, Or, PChoice, Seq, Skip, Unif, Var, While, free_vars,
    guard_vars, stmt_vars, term_vars,
)

DEFAULT_MAX_STEPS = 100_000
SAMPLE_BITS = 64
_DENOM = 1 << SAMPLE_BITS

TERMINATED, OBSERVE_VIOLATED, BUDGET_EXHAUSTED = "Terminated", "ObserveViolated", "BudgetExhausted"


@dataclass(frozen=True)
class RunOutcome:
    kind: str
    final: Optional[dict] = None
    steps: int = 0

    @property
    def terminated(self) -> bool:
        return self.kind == TERMINATED


class _Violated(Exception):
    pass


class _OutOfSteps(Exception):
    pass


def _cterm(t, funcs):
    if isinstance(t, Const):
        v = t.value
        return lambda s: v
    if isinstance(t, Var):
        name = t.name
        return lambda s: s[name]
    if isinstance(t, (Add, Monus, Mul)):
        a, b = _cterm(t.left, funcs), _cterm(t.right, funcs)
        if isinstance(t, Add):
            return lambda s: a(s) + b(s)
        if isinstance(t, Mul):
            return lambda s: a(s) * b(s)

        def monus(s):
            d = a(s) - b(s)
            return d if d > 0 else Fraction(0)
        return monus
    if isinstance(t, App):
        if not funcs or t.func not in funcs:
            raise ValueError(f"no interpretation for function {t.func!r}")
        fn, args = funcs[t.func], [_cterm(x, funcs) for x in t.args]
        return lambda s: Fraction(fn(*[x(s) for x in args]))
    raise TypeError(t)


_OPS = {
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b, "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b, ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
}


def _cguard(g, funcs):
    if isinstance(g, Cmp):
        op, a, b = _OPS[g.op], _cterm(g.left, funcs), _cterm(g.right, funcs)
        return lambda s: op(a(s), b(s))
    if isinstance(g, Not):
        a = _cguard(g.arg, funcs)
        return lambda s: not a(s)
    if isinstance(g, (And, Or, Implies)):
        a, b = _cguard(g.left, funcs), _cguard(g.right, funcs)
        if isinstance(g, And):
            return lambda s: a(s) and b(s)
        if isinstance(g, Or):
            return lambda s: a(s) or b(s)
        return lambda s: (not a(s)) or b(s)
    if isinstance(g, BoolLit):
        v = g.value
        return lambda s: v
    raise TypeError(g)


class _Machine:
    def __init__(self, prog, funcs):
        self.code = self.compile(prog, funcs)

    def compile(self, c, funcs):
        # each compiled statement takes (state, rng, budget) and returns nothing;
        # budget is a one-element list decremented per step
        if isinstance(c, Skip):
            def run(s, rng, budget):
                _tick(budget)
            return run
        if isinstance(c, Diverge):
            def run(s, rng, budget):
                budget[0] = 0
                raise _OutOfSteps
            return run
        if isinstance(c, Assign):
            x, e = c.var, _cterm(c.term, funcs)

            def run(s, rng, budget):
                _tick(budget)
                s[x] = e(s)
            return run
        if isinstance(c, Unif):
            x = c.var

            def run(s, rng, budget):
                _tick(budget)
                s[x] = Fraction(rng.getrandbits(SAMPLE_BITS), _DENOM)
            return run
        if isinstance(c, Observe):
            g = _cguard(c.guard, funcs)

            def run(s, rng, budget):
                _tick(budget)
                if not g(s):
                    raise _Violated
            return run
        if isinstance(c, Ite):
            g, a, b = _cguard(c.guard, funcs), self.compile(c.then, funcs), self.compile(c.orelse, funcs)

            def run(s, rng, budget):
                _tick(budget)
                (a if g(s) else b)(s, rng, budget)
            return run
        if isinstance(c, PChoice):
            p, a, b = c.prob, self.compile(c.left, funcs), self.compile(c.right, funcs)

            def run(s, rng, budget):
                _tick(budget)
                (a if Fraction(rng.getrandbits(SAMPLE_BITS), _DENOM) < p else b)(s, rng, budget)
            return run
        if isinstance(c, Seq):
            a, b = self.compile(c.first, funcs), self.compile(c.second, funcs)

            def run(s, rng, budget):
                a(s, rng, budget)
                b(s, rng, budget)
            return run
        if isinstance(c, While):
            g, body = _cguard(c.guard, funcs), self.compile(c.body, funcs)

            def run(s, rng, budget):
                while True:
                    _tick(budget)
                    if not g(s):
                        return
                    body(s, rng, budget)
            return run
        raise TypeError(c)

    def run(self, s0, rng, max_steps) -> RunOutcome:
        s = dict(s0)
        budget = [max_steps]
        try:
            self.code(s, rng, budget)
        except _Violated:
            return RunOutcome(OBSERVE_VIOLATED, None, max_steps - budget[0])
        except _OutOfSteps:
            return RunOutcome(BUDGET_EXHAUSTED, None, max_steps)
        return RunOutcome(TERMINATED, s, max_steps - budget[0])


def _tick(budget):
    if budget[0] <= 0:
        raise _OutOfSteps
    budget[0] -= 1


def _initial(prog, s0) -> dict:
    s = {k: Fraction(v) for k, v in dict(s0).items()}
    missing = read_before_write(prog) - set(s)
    if missing:
        raise ValueError(f"initial state lacks variable(s): {', '.join(sorted(missing))}")
    # variables that are always written before being read start at 0
    for x in stmt_vars(prog):
        s.setdefault(x, Fraction(0))
    return s


def read_before_write(prog) -> set:
    """Variables that some execution may read before assigning them."""
    return _rbw(prog, frozenset())[0]


def _rbw(c, written):
    if isinstance(c, (Skip, Diverge)):
        return set(), written
    if isinstance(c, Assign):
        return term_vars(c.term) - written, written | {c.var}
    if isinstance(c, Unif):
        return set(), written | {c.var}
    if isinstance(c, Observe):
        return guard_vars(c.guard) - written, written
    if isinstance(c, Ite):
        r1, w1 = _rbw(c.then, written)
        r2, w2 = _rbw(c.orelse, written)
        return (guard_vars(c.guard) - written) | r1 | r2, w1 & w2
    if isinstance(c, PChoice):
        r1, w1 = _rbw(c.left, written)
        r2, w2 = _rbw(c.right, written)
        return r1 | r2, w1 & w2
    if isinstance(c, Seq):
        r1, w1 = _rbw(c.first, written)
        r2, w2 = _rbw(c.second, w1)
        return r1 | r2, w2
    if isinstance(c, While):
        r, _ = _rbw(c.body, written)
        return (guard_vars(c.guard) - written) | r, written
    raise TypeError(c)


def simulate(prog, s0, seed=0, max_steps: int = DEFAULT_MAX_STEPS, funcs=None) -> RunOutcome:
    """One run of ``prog`` from ``s0``; deterministic for a given seed."""
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    return _Machine(prog, funcs).run(_initial(prog, s0), rng, max_steps)


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    violated_fraction: float
    samples: int
    exhausted: int = 0
    exact_mean: Optional[Fraction] = None

    @property
    def partial(self) -> bool:
        """Some run hit the step cap, so the mean is not comparable with wp."""
        return self.exhausted > 0

    def interval(self, k: float = 3.0) -> tuple:
        return self.mean - k * self.std_error, self.mean + k * self.std_error


def estimate_wp(prog, f, s0, samples: int = 10_000, seed=0,
                max_steps: int = DEFAULT_MAX_STEPS, funcs=None) -> Estimate:
    """Sample mean of f at the final state, with 0 for observe violations.

    Runs share one generator seeded with ``seed``, so results are
    reproducible.  Exhausted runs also count 0 and mark the estimate partial.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = random.Random(seed)
    machine = _Machine(prog, funcs)
    start = _initial(prog, s0)
    missing = free_vars(f) - set(start) - stmt_vars(prog)
    if missing:
        raise ValueError(f"post-expectation mentions unknown variable(s): {', '.join(sorted(missing))}")
    total = Fraction(0)
    sq = 0.0
    violated = exhausted = 0
    for _ in range(samples):
        out = machine.run(start, rng, max_steps)
        if out.kind == TERMINATED:
            v = eval_expr(f, out.final, funcs=funcs).lo
            total += v
            sq += float(v) ** 2
        elif out.kind == OBSERVE_VIOLATED:
            violated += 1
        else:
            exhausted += 1
    mean = total / samples
    m = float(mean)
    var = max(sq / samples - m * m, 0.0) * samples / max(samples - 1, 1)
    return Estimate(m, math.sqrt(var / samples), violated / samples, samples, exhausted, mean)
