"""Case-study programs with their invariants, partition sizes and start states."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .parser import parse_domain, parse_expectation, parse_unit

EXP_DOMAIN = """\
domain Exponentials {
  func exp(UReal): UReal
  axiom exp_base exp(0) == 1
  axiom exp_step forall e. exp(e + 1) == 1/2 * exp(e)
  axiom exp_antitone forall a, b. a <= b ==> exp(b) <= exp(a)
}
"""


def exp_interp(e):
    """Intended model of the exp symbol: 2^-e (exact for integer e)."""
    e = Fraction(e)
    if e.denominator == 1:
        return Fraction(1, 2 ** int(e))
    return Fraction(2 ** -float(e))


EXP_FUNCS = {"exp": exp_interp}


@dataclass(frozen=True)
class Benchmark:
    name: str
    source: str
    post: str
    invariant: str
    n: int
    check: str  # superinvariant | subinvariant
    init: dict = field(default_factory=dict)
    domain: Optional[str] = None
    fallback_n: Optional[int] = None
    fallback_invariant: Optional[str] = None

    @property
    def unit(self):
        return parse_unit(self.source)

    @property
    def program(self):
        return self.unit.body

    @property
    def loop(self):
        from .syntax import loops
        found = loops(self.program)
        if len(found) != 1:
            raise ValueError(f"{self.name}: expected exactly one loop")
        return found[0]

    @property
    def body(self):
        return self.loop.body

    @property
    def post_expr(self):
        return parse_expectation(self.post)

    @property
    def invariant_expr(self):
        return parse_expectation(self.invariant)

    @property
    def decls(self):
        return parse_domain(self.domain) if self.domain else None

    @property
    def funcs(self):
        return EXP_FUNCS if self.domain else None

    def init_state(self):
        return {k: Fraction(v) for k, v in self.init.items()}

    def file_text(self) -> str:
        head = (self.domain + "\n") if self.domain else ""
        return head + self.source.strip() + "\n"


MONTE_CARLO_INNER = """\
x := unif;
y := unif;
if (x * x + y * y <= 1) { count := count + 1 } else { skip }
"""

MONTE_CARLO = Benchmark(
    name="monte_carlo",
    source="""\
while (i <= M) {
  x := unif;
  y := unif;
  if (x * x + y * y <= 1) { count := count + 1 } else { skip };
  i := i + 1
}
""",
    post="count",
    invariant="count + [i <= M] * 0.85 * ((M - i) + 1)",
    n=16,
    check="superinvariant",
    init={"i": 1, "M": 3, "count": 0, "x": 0, "y": 0},
)

IRWIN_HALL = Benchmark(
    name="irwin_hall",
    source="""\
while (i <= M) {
  y := unif;
  x := x + y;
  i := i + 1
}
""",
    post="x",
    invariant="x + [i <= M] * 1.1 * ((M - i) + 1) / 2",
    n=10,
    check="superinvariant",
    init={"i": 1, "M": 4, "x": 0, "y": 0},
)

_CONDITIONED_LOOP = """\
while (i <= M) {
  y := unif;
  observe (y <= 1/2);
  x := x + y;
  i := i + 1
}
"""

IRWIN_HALL_CONDITIONED_WP = Benchmark(
    name="irwin_hall_conditioned_wp",
    source=_CONDITIONED_LOOP,
    post="x",
    invariant="x + [i <= M] * 1.5 * ((M - i) + 1) / 8",
    n=19,
    check="superinvariant",
    init={"i": 1, "M": 3, "x": 0, "y": 0},
)

IRWIN_HALL_CONDITIONED_WLP = Benchmark(
    name="irwin_hall_conditioned_wlp",
    source=_CONDITIONED_LOOP,
    post="1",
    invariant="[i <= M] * exp((M - i) + 1) + [i > M] * 1",
    n=2,
    check="subinvariant",
    init={"i": 1, "M": 3, "x": 0, "y": 0},
    domain=EXP_DOMAIN,
)

DIVERGING = Benchmark(
    name="diverging",
    source="""\
while (x > 0) {
  y := unif;
  y := (b - a) * y + a;
  if (y <= (a + b) / 2) { diverge } else { skip };
  x := x - 1
}
""",
    post="0",
    invariant="[a <= b] * (1 - exp(x))",
    n=2,
    check="subinvariant",
    init={"x": 3, "a": 1, "b": 2, "y": 0},
    domain=EXP_DOMAIN,
)

TORTOISE_HARE = Benchmark(
    name="tortoise_hare",
    source="""\
while (h <= t) {
  { y := unif; y := 10 * y; h := h + y } [1/2] { skip };
  t := t + 1;
  count := count + 1
}
""",
    post="count",
    invariant="count + [h <= t] * 3.012 * ((t - h) + 2)",
    n=16,
    check="superinvariant",
    init={"h": 0, "t": 2, "count": 0, "y": 0},
    fallback_n=25,
    fallback_invariant="count + [h <= t] * 1.5 * ((t - h) + 2) * 2",
)

CASE_STUDIES = (
    MONTE_CARLO, IRWIN_HALL, IRWIN_HALL_CONDITIONED_WP, IRWIN_HALL_CONDITIONED_WLP,
    DIVERGING, TORTOISE_HARE,
)

BY_NAME = {b.name: b for b in CASE_STUDIES}


def get(name: str) -> Benchmark:
    try:
        return BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown benchmark {name!r}; known: {', '.join(BY_NAME)}") from None
