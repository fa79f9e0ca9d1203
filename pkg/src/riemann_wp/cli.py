"""Command-line interface: ``riemann-wp <task> PROGRAM [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .parser import ParseError, parse_domain, parse_expectation, parse_unit
from .printer import pretty_expr
from .report import dumps
from .sim import DEFAULT_MAX_STEPS, estimate_wp
from .solver import DEFAULT_TIMEOUT, SolverConfig, SolverError, solver_available
from .syntax import has_loop, loops, rational
from .transformers import DEFAULT_MAX_NODES, TransformError, encode_nondet, unfold
from .verifier import (
    Budget, VerifierError, check_bound_loopfree, check_subinvariant_wlp,
    check_superinvariant, cwp_upper_bound, refute_lower_bound_wlp, refute_upper_bound,
    verify_program,
)

EXIT_USAGE = 64
EXIT_UNAVAILABLE = 69
EXIT_SOFTWARE = 70

TASKS = ("verify-bound", "verify-invariant", "verify-subinvariant-wlp", "cwp-bound",
         "refute", "simulate", "encode", "sweep")


class UsageError(Exception):
    pass


# ----------------------------------------------------------------- inputs

def load_source(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def load_unit(path: str, domain_path=None):
    unit = parse_unit(load_source(path))
    decls = list(unit.domains)
    if domain_path:
        decls.append(parse_domain(load_source(domain_path)))
    return unit.body, decls or None


def parse_state(text: str) -> dict:
    """``x=1, y=3/4`` -> {x: 1, y: 3/4}."""
    out = {}
    if not text:
        return out
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        name, sep, value = part.partition("=")
        if not sep:
            raise UsageError(f"bad state entry {part!r}; expected name=value")
        try:
            q = rational(value.strip())
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"bad value for {name.strip()}: {value.strip()!r}") from exc
        if q < 0:
            raise UsageError(f"state values must be nonnegative ({name.strip()}={value.strip()})")
        out[name.strip()] = q
    return out


def parse_ns(text: str) -> list:
    try:
        ns = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad partition list {text!r}") from exc
    if not ns or min(ns) < 1:
        raise UsageError("partition sizes must be positive integers")
    return ns


def _expr(text, what):
    if text is None:
        raise UsageError(f"missing --{what}")
    return parse_expectation(text)


def _single_loop(prog):
    found = loops(prog)
    if len(found) != 1:
        raise UsageError(f"expected exactly one loop, found {len(found)}")
    return found[0]


def _invariant(args, loop):
    if args.invariant is not None:
        return parse_expectation(args.invariant)
    if loop.invariant is not None:
        return loop.invariant
    raise UsageError("no invariant given (use --invariant or an @invariant annotation)")


def _cap(args) -> int:
    return args.max_nodes or DEFAULT_MAX_NODES


def _config(args) -> SolverConfig:
    return SolverConfig(path=args.solver, timeout=args.timeout, seed=args.seed,
                        debug_dir=args.debug_dir)


# ------------------------------------------------------------------ tasks

def task_verify_bound(args):
    prog, decls = load_unit(args.program, args.domain)
    f, g = _expr(args.post, "post"), _expr(args.bound, "bound")
    if has_loop(prog):
        if args.kind != "uwp" or args.direction != "upper":
            raise UsageError("programs with loops support only upper uwp bounds via @invariant")
        return verify_program(prog, f, g, args.n, decls, _config(args), max_nodes=_cap(args))
    return check_bound_loopfree(args.direction, args.kind, prog, f, g, args.n, decls, _config(args),
                                assume_bounded=args.assume_bounded, max_nodes=_cap(args))


def task_verify_invariant(args):
    prog, decls = load_unit(args.program, args.domain)
    loop = _single_loop(prog)
    return check_superinvariant(args.n, loop, _expr(args.post, "post"), _invariant(args, loop),
                                decls, _config(args), max_nodes=_cap(args))


def task_verify_subinvariant(args):
    prog, decls = load_unit(args.program, args.domain)
    loop = _single_loop(prog)
    return check_subinvariant_wlp(args.n, loop, _expr(args.post, "post"), _invariant(args, loop),
                                  decls, _config(args), assume_bounded=args.assume_bounded,
                                  max_nodes=_cap(args))


def task_cwp_bound(args):
    prog, decls = load_unit(args.program, args.domain)
    loop = _single_loop(prog)
    if args.wlp_invariant is None:
        raise UsageError("missing --wlp-invariant")
    return cwp_upper_bound(loop, _expr(args.post, "post"), _invariant(args, loop), args.n,
                           parse_expectation(args.wlp_invariant), args.n_wlp or args.n,
                           decls, _config(args), assume_bounded=args.assume_bounded)


def task_refute(args):
    prog, decls = load_unit(args.program, args.domain)
    f, g = _expr(args.post, "post"), _expr(args.bound, "bound")
    budget = Budget(args.max_n, args.max_nodes or Budget.max_nodes, args.max_seconds)
    if args.wlp:
        return refute_lower_bound_wlp(prog, f, g, budget, decls, _config(args),
                                      assume_bounded=args.assume_bounded)
    return refute_upper_bound(prog, f, g, budget, decls, _config(args))


def task_simulate(args):
    prog, _ = load_unit(args.program, args.domain)
    f = _expr(args.post, "post")
    est = estimate_wp(prog, f, parse_state(args.init), args.samples, args.seed or 0, args.max_steps)
    return {
        "status": "Unknown" if est.partial else "Estimated",
        "N": None,
        "solver_time_ms": 0,
        "query_nodes": 0,
        "assumptions": ["64-bit dyadic uniform samples"],
        "estimate": {
            "mean": est.mean,
            "std_error": est.std_error,
            "violated_fraction": est.violated_fraction,
            "samples": est.samples,
            "exhausted": est.exhausted,
            "partial": est.partial,
        },
        **({"reason": f"{est.exhausted} run(s) hit the step cap"} if est.partial else {}),
    }


def task_encode(args):
    prog, _ = load_unit(args.program, args.domain)
    post = parse_expectation(args.post) if args.post else None
    name = Path(args.program).stem.replace("-", "_") if args.program != "-" else "program"
    text = encode_nondet(prog, args.n, args.polarity, post, name=name, liberal=args.liberal)
    rep = {"status": "Encoded", "N": args.n, "solver_time_ms": 0, "query_nodes": 0,
           "assumptions": []}
    if args.output:
        Path(args.output).write_text(text)
        rep["output"] = args.output
    else:
        rep["encoding"] = text
    return rep


def task_sweep(args):
    from .report import sweep_values, write_sweep
    prog, _ = load_unit(args.program, args.domain)
    f = _expr(args.post, "post")
    state = parse_state(args.init)
    target = prog
    if has_loop(prog):
        if args.unfold is None:
            raise UsageError("program has loops; pass --unfold K to sweep an unrolling")
        target = unfold(prog, args.unfold)
    ns = parse_ns(args.ns)
    rows = sweep_values(target, f, state, ns, args.grid, args.liberal, max_nodes=_cap(args))
    est = None
    if args.samples and not args.liberal:
        est = estimate_wp(prog, f, state, args.samples, args.seed or 0, args.max_steps)
    title = f"{Path(args.program).stem}: {pretty_expr(f)}"
    paths = write_sweep(rows, args.out, title, est, args.stem)
    if not args.json:
        for r in rows:
            print(f"N={r.n:<4d} lower={float(r.lower):.6f} upper={float(r.upper):.6f}"
                  + ("" if r.exact else "  (sampled)"))
        if est is not None:
            print(f"Monte Carlo: {est.mean:.6f} +- {est.std_error:.6f} ({est.samples} samples)")
        print(f"wrote {paths['png']}, {paths['csv']}, {paths['json']}")
    return {"status": "Estimated", "N": max(ns), "solver_time_ms": 0, "query_nodes": 0,
            "assumptions": [] if all(r.exact for r in rows) else ["quantified values are sampled"],
            "output": paths["png"]}


HANDLERS = {
    "verify-bound": task_verify_bound,
    "verify-invariant": task_verify_invariant,
    "verify-subinvariant-wlp": task_verify_subinvariant,
    "cwp-bound": task_cwp_bound,
    "refute": task_refute,
    "simulate": task_simulate,
    "encode": task_encode,
    "sweep": task_sweep,
}


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--solver", help="SMT solver executable (default: $RIEMANN_WP_SOLVER or z3)")
    common.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="seconds per solver call")
    common.add_argument("--json", nargs="?", const="-", metavar="PATH",
                        help="write the JSON report to PATH (default stdout)")
    common.add_argument("--seed", type=int, help="solver / sampler seed")
    common.add_argument("--debug-dir", help="save every emitted SMT-LIB script here")
    common.add_argument("--domain", help="file with an extra domain declaration")
    common.add_argument("--max-nodes", type=int,
                        help="expression size cap (default 10^6; 2*10^5 for refute)")
    common.add_argument("--assume-bounded", action="store_true",
                        help="assume 1-boundedness when it cannot be proved")

    p = argparse.ArgumentParser(
        prog="riemann-wp",
        description="Riemann-sum weakest pre-expectations for programs with continuous sampling.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="task", required=True, metavar="TASK")

    def add(name, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("program", help="program file ('-' for stdin)")
        return sp

    sp = add("verify-bound", "check a bound on a loop-free program (or a program with annotated loops)")
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--post", required=True)
    sp.add_argument("--bound", required=True)
    sp.add_argument("--kind", choices=("lwp", "uwp", "lwlp", "uwlp"), default="uwp")
    sp.add_argument("--direction", choices=("upper", "lower"), default="upper")

    for name, help_ in (("verify-invariant", "check a uwp_N-superinvariant"),
                        ("verify-subinvariant-wlp", "check an lwlp_N-subinvariant")):
        sp = add(name, help_)
        sp.add_argument("--n", type=int, default=1)
        sp.add_argument("--post", required=True)
        sp.add_argument("--invariant")

    sp = add("cwp-bound", "bound a conditional pre-expectation by an invariant ratio")
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--n-wlp", type=int)
    sp.add_argument("--post", required=True)
    sp.add_argument("--invariant")
    sp.add_argument("--wlp-invariant")

    sp = add("refute", "search for a counterexample by unrolling")
    sp.add_argument("--post", required=True)
    sp.add_argument("--bound", required=True)
    sp.add_argument("--max-n", type=int, default=64)
    sp.add_argument("--max-seconds", type=float, default=600.0)
    sp.add_argument("--wlp", action="store_true", help="refute a lower bound on wlp instead")

    sp = add("simulate", "Monte Carlo estimate of wp")
    sp.add_argument("--post", required=True)
    sp.add_argument("--init", default="", help="initial state, e.g. 'i=1,M=3'")
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)

    sp = add("encode", "print the nondeterministic (HeyVL-style) encoding")
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--polarity", choices=("angelic", "demonic"), default="angelic")
    sp.add_argument("--post")
    sp.add_argument("--liberal", action="store_true")
    sp.add_argument("-o", "--output")

    sp = add("sweep", "plot lower/upper Riemann pre-expectations against N")
    sp.add_argument("--post", required=True)
    sp.add_argument("--init", default="")
    sp.add_argument("--ns", default="1,2,4,8,16")
    sp.add_argument("--grid", type=int, default=1, help="sample points per cell minus one")
    sp.add_argument("--liberal", action="store_true")
    sp.add_argument("--unfold", type=int)
    sp.add_argument("--samples", type=int, default=0)
    sp.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    sp.add_argument("--out", default="sweep-out")
    sp.add_argument("--stem", default="sweep")

    sp = sub.add_parser("run", parents=[common], help="run a JSON task file")
    sp.add_argument("taskfile")
    sp.add_argument("--jobs", type=int, default=1)
    return p


# ------------------------------------------------------------------ output

def _report(task: str, program: str, result) -> dict:
    rep = result if isinstance(result, dict) else result.to_json()
    rep = dict(rep)
    rep["task"] = task
    rep["program"] = program
    return rep


def _summary(rep: dict) -> str:
    status = rep["status"]
    line = f"{rep['task']}: {status}"
    if rep.get("N") is not None:
        line += f" (N={rep['N']})"
    parts = [line]
    if rep.get("bound"):
        parts.append(f"  bound: {rep['bound']}  where {rep['side_condition']}")
    if rep.get("witness") is not None:
        w = rep["witness"]
        parts.append("  witness: " + (", ".join(f"{k}={v}" for k, v in w.items()) or "any state"))
    if rep.get("estimate"):
        e = rep["estimate"]
        parts.append(f"  mean {e['mean']:.6f} +- {e['std_error']:.6f} "
                     f"(violated {e['violated_fraction']:.4f}, {e['samples']} samples)")
    if rep.get("output"):
        parts.append(f"  wrote {rep['output']}")
    if rep.get("reason"):
        parts.append(f"  reason: {rep['reason']}")
    for a in rep.get("assumptions", []):
        parts.append(f"  assumption: {a}")
    parts.append(f"  solver time {rep['solver_time_ms'] / 1000:.2f}s, query nodes {rep['query_nodes']}")
    return "\n".join(parts)


def _exit_code(rep: dict) -> int:
    return {"Verified": 0, "Estimated": 0, "Encoded": 0, "Refuted": 1}.get(rep["status"], 2)


def _emit(args, payload: dict, text: str):
    if args.json:
        out = dumps(payload)
        if args.json == "-":
            sys.stdout.write(out)
        else:
            Path(args.json).write_text(out)
            print(text)
    else:
        print(text)


def run_one(args) -> dict:
    handler = HANDLERS[args.task]
    return _report(args.task, args.program, handler(args))


def run_taskfile(args, parser) -> list:
    path = Path(args.taskfile)
    try:
        data = json.loads(load_source(args.taskfile))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.taskfile}: invalid JSON ({exc})") from exc
    tasks = data["tasks"] if isinstance(data, dict) else data
    argvs = []
    for i, t in enumerate(tasks):
        if not isinstance(t, dict) or t.get("task") not in HANDLERS:
            raise UsageError(f"task #{i}: unknown or missing 'task'")
        prog = str((path.parent / t["program"]) if args.taskfile != "-" else t["program"])
        argv = [t["task"], prog]
        for key, value in t.items():
            if key in ("task", "program"):
                continue
            flag = "--" + key.replace("_", "-")
            if value is True:
                argv.append(flag)
            elif value is not False and value is not None:
                argv += [flag, str(value)]
        for key in ("solver", "timeout", "seed", "debug_dir"):
            value = getattr(args, key)
            if value is not None and key not in t:
                argv += ["--" + key.replace("_", "-"), str(value)]
        argvs.append(argv)
    parsed = [parser.parse_args(a) for a in argvs]
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        return list(pool.map(_safe_run, parsed))


def _safe_run(args) -> dict:
    try:
        return run_one(args)
    except (UsageError, ParseError, VerifierError, TransformError, SolverError, ValueError) as exc:
        return {"task": args.task, "program": args.program, "status": "Unknown", "N": None,
                "solver_time_ms": 0, "query_nodes": 0, "assumptions": [],
                "reason": f"{type(exc).__name__}: {exc}"}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    if getattr(args, "n", 1) is not None and getattr(args, "n", 1) < 1:
        print("error: --n must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    needs_solver = args.task not in ("simulate", "encode", "sweep")
    if needs_solver and not solver_available(SolverConfig(path=args.solver)):
        print("error: SMT solver not found (install z3 or set RIEMANN_WP_SOLVER / --solver)",
              file=sys.stderr)
        return EXIT_UNAVAILABLE
    try:
        if args.task == "run":
            reps = run_taskfile(args, parser)
            _emit(args, {"reports": reps}, "\n".join(_summary(r) for r in reps))
            return max((_exit_code(r) for r in reps), default=0)
        rep = run_one(args)
    except (UsageError, ParseError, VerifierError, TransformError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOFTWARE
    if args.task == "encode" and not args.output and not args.json:
        sys.stdout.write(rep["encoding"])
        return 0
    _emit(args, rep, _summary(rep))
    return _exit_code(rep)


if __name__ == "__main__":
    sys.exit(main())
