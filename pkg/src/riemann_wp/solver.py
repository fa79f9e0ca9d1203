"""Run an external SMT-LIB 2 solver on validity/satisfiability queries."""

from __future__ import annotations

import hashlib
import os
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .fo import FNot, Query, eval_fo, fo_funcs, fo_size, is_quantifier_free, one_bounded_formula
from .smtlib import Z3_QF_NRA_STRATEGY, ModelParseError, emit_smtlib, parse_model

SOLVER_ENV = "RIEMANN_WP_SOLVER"
DEFAULT_TIMEOUT = 180


class SolverError(Exception):
    pass


@dataclass(frozen=True)
class SolverConfig:
    path: Optional[str] = None
    timeout: float = DEFAULT_TIMEOUT
    logic: Optional[str] = None  # None: pick from the query
    seed: Optional[int] = None
    debug_dir: Optional[str] = None
    cse: bool = True
    # "auto": on z3 and quantifier-free nonlinear queries, try the fast smt
    # core first and fall back to the complete nlsat procedure
    strategy: str = "auto"

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    def executable(self) -> str:
        return self.path or os.environ.get(SOLVER_ENV) or "z3"


@dataclass
class SolverVerdict:
    status: str  # valid | invalid | unknown   (sat-mode: sat | unsat | unknown)
    model: dict = field(default_factory=dict)
    reason: str = ""
    exact_model: bool = True
    time_ms: float = 0.0
    query_nodes: int = 0
    script: str = ""
    raw: str = ""

    @property
    def valid(self) -> bool:
        return self.status == "valid"

    @property
    def invalid(self) -> bool:
        return self.status == "invalid"


def solver_available(config: SolverConfig = None) -> bool:
    exe = (config or SolverConfig()).executable()
    return shutil.which(exe) is not None or Path(exe).is_file()


def _command(exe: str, timeout: float) -> list:
    name = Path(exe).name.lower()
    if "cvc5" in name or "cvc4" in name:
        return [exe, "--lang", "smt2", "--produce-models", f"--tlimit={int(timeout * 1000)}", "-"]
    if "yices" in name:
        return [exe, f"--timeout={int(timeout)}"]
    return [exe, "-smt2", "-in", f"-T:{max(1, int(round(timeout)))}"]


def run_script(script: str, config: SolverConfig) -> tuple:
    """Run the solver; returns (answer, remaining output, elapsed ms)."""
    exe = config.executable()
    if shutil.which(exe) is None and not Path(exe).is_file():
        raise SolverError(f"SMT solver {exe!r} not found (set {SOLVER_ENV} or --solver)")
    if config.debug_dir:
        d = Path(config.debug_dir)
        d.mkdir(parents=True, exist_ok=True)
        digest = hashlib.sha1(script.encode()).hexdigest()[:12]
        (d / f"query-{digest}.smt2").write_text(script)
    start = time.perf_counter()
    try:
        proc = subprocess.run(
            _command(exe, config.timeout), input=script, capture_output=True,
            text=True, timeout=config.timeout + 10)
    except subprocess.TimeoutExpired:
        return "timeout", "", (time.perf_counter() - start) * 1000
    except OSError as exc:
        raise SolverError(f"could not launch {exe!r}: {exc}") from exc
    elapsed = (time.perf_counter() - start) * 1000
    out = proc.stdout.strip()
    first, _, rest = out.partition("\n")
    first = first.strip()
    if first in ("sat", "unsat", "unknown", "timeout"):
        return first, rest, elapsed
    if elapsed >= config.timeout * 1000 * 0.98:
        return "timeout", out, elapsed
    if not out:
        # killed (e.g. out of memory) or crashed without an answer
        err = proc.stderr.strip()[:200]
        return "unknown", f"solver exited abnormally (code {proc.returncode}) {err}", elapsed
    raise SolverError(f"unexpected solver output: {(out or proc.stderr)[:400]!r}")


def _check_command(query: Query, decls, config: SolverConfig):
    if config.strategy != "auto" or decls:
        return None
    if "z3" not in Path(config.executable()).name.lower():
        return None
    if config.logic not in (None, "QF_NRA"):
        return None
    if not all(is_quantifier_free(h) for h in query.hyps) or fo_funcs(query.formula):
        return None
    budget = int(min(30.0, config.timeout / 3) * 1000)
    return Z3_QF_NRA_STRATEGY.format(ms=budget)


def _solve(query: Query, decls, config: SolverConfig, funcs=None) -> SolverVerdict:
    script = emit_smtlib(query, decls, seed=config.seed, logic=config.logic, cse=config.cse,
                         check=_check_command(query, decls, config))
    answer, rest, ms = run_script(script, config)
    nodes = fo_size(query.formula)
    if answer in ("timeout", "unknown"):
        if answer == "timeout" or "timeout" in rest:
            reason = "timeout"
        elif rest.startswith("solver exited abnormally"):
            reason = rest.strip()
        else:
            reason = "solver returned unknown"
        return SolverVerdict("unknown", reason=reason, time_ms=ms, query_nodes=nodes, script=script, raw=rest)
    if answer == "unsat":
        return SolverVerdict("unsat", time_ms=ms, query_nodes=nodes, script=script)
    try:
        model, exact, _ = parse_model(rest, set(query.consts))
    except ModelParseError as exc:
        raise SolverError(f"unparsable model: {exc}") from exc
    for v in query.consts:
        model.setdefault(v, Fraction(0))
    return SolverVerdict("sat", model=model, exact_model=exact, time_ms=ms,
                         query_nodes=nodes, script=script, raw=rest)


def recheck_model(query: Query, model: dict, funcs=None) -> Optional[bool]:
    """Evaluate the query's quantifier-free parts at the model.

    Returns None when the check is impossible (quantifiers, uninterpreted
    functions without an interpretation).
    """
    parts = list(query.hyps)
    if query.mode == "valid":
        parts.append(FNot(query.goal))
    try:
        for p in parts:
            if not is_quantifier_free(p):
                continue
            if not eval_fo(p, model, funcs):
                return False
    except Exception:
        return None
    return True


def check_validity(query: Query, decls=None, config: SolverConfig = None, funcs=None) -> SolverVerdict:
    """Decide validity of a ``valid``-mode query.

    unsat of the negation gives Valid, sat gives Invalid with the model,
    anything else Unknown.  Exact models are re-checked by evaluation and a
    mismatch is reported as an internal error.
    """
    config = config or SolverConfig()
    if query.mode != "valid":
        raise ValueError("check_validity expects a validity query")
    v = _solve(query, decls, config, funcs)
    if v.status == "unsat":
        v.status = "valid"
    elif v.status == "sat":
        v.status = "invalid"
        if v.exact_model and not decls:
            ok = recheck_model(query, v.model, funcs)
            if ok is False:
                raise SolverError("solver model does not falsify the query (internal error)")
    return v


def check_sat(query: Query, decls=None, config: SolverConfig = None, funcs=None) -> SolverVerdict:
    config = config or SolverConfig()
    if query.mode != "sat":
        raise ValueError("check_sat expects a satisfiability query")
    v = _solve(query, decls, config, funcs)
    if v.status == "sat" and v.exact_model and not decls:
        ok = recheck_model(query, v.model, funcs)
        if ok is False:
            raise SolverError("solver model does not satisfy the query (internal error)")
    return v


def check_one_bounded(f, decls=None, config: SolverConfig = None) -> SolverVerdict:
    """Valid iff f <= 1 at every nonnegative state."""
    return check_validity(one_bounded_formula(f), decls, config)
