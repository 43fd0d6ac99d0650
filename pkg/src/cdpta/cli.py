"""Command-line entry point.

Exit codes: 0 success or true verdict, 1 false verdict, 2 parse or validation
error, 3 internal error.  ``--format structured`` prints ``key=value`` lines
starting with ``format=cdpta-result/1``.
"""

from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence, TextIO

from .dsl import ParseFailure, parse
from .imc import IMC_HEADER, dump_imc, dump_imdp, imc_to_dot, load_imc, reduce_to_imc
from .imdp import build_imdp, imdp_to_dot
from .model import ModelError, check_initialised, validate
from .oracle import GridReach
from .solver import (
    BACKEND,
    ChoiceSystem,
    Mode,
    QualMode,
    QuantQuery,
    SolveConfig,
    Threshold,
    decide,
    policy_value,
    solve_query,
)
from .solver.engine import qual_indices, quant_system

RESULT_FORMAT = "cdpta-result/1"
EXIT_TRUE, EXIT_FALSE, EXIT_INVALID, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    """Parse or validation failure; the message is already formatted."""


def _targets(text: str) -> List[str]:
    out = [t.strip() for t in text.split(",") if t.strip()]
    if not out:
        raise argparse.ArgumentTypeError("at least one target location is required")
    return out


def _epsilon(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("epsilon must be positive")
    return value


def _threshold(text: str) -> Threshold:
    try:
        return Threshold.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cdpta", description="Reachability for one-clock cdPTAs.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse and check the structural assumptions")
    v.add_argument("file")

    c = sub.add_parser("compile", help="build the interval MDP or interval Markov chain")
    c.add_argument("file")
    c.add_argument("--emit", choices=("imdp", "imc"), default="imc")
    c.add_argument("--dot", metavar="PATH", help="also write a Graphviz rendering")
    c.add_argument("-o", "--output", metavar="PATH", help="write to PATH instead of stdout")

    def common(sp, modes):
        sp.add_argument("file")
        sp.add_argument("--target", type=_targets, required=True, metavar="L1,L2")
        sp.add_argument("--mode", choices=modes, required=True)
        sp.add_argument("--format", choices=("text", "structured"), default="text")

    s = sub.add_parser("solve", help="extremal reachability probability")
    common(s, ("max", "min"))
    s.add_argument("--threshold", type=_threshold, metavar='">= 4/5"')
    s.add_argument("--epsilon", type=_epsilon, default=1e-9)

    q = sub.add_parser("qual", help="qualitative reachability")
    common(q, tuple(m.value for m in QualMode))

    o = sub.add_parser("oracle", help="discretised grid MDP value")
    common(o, ("max", "min"))
    o.add_argument("-k", type=int, required=True, help="grid step 2^-k")
    o.add_argument("--epsilon", type=_epsilon, default=1e-12)
    return p


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _load_model(path: str):
    text = _read(path)
    try:
        model = parse(text)
    except ParseFailure as exc:
        raise InputError("\n".join(f"{path}:{e}" for e in exc.errors)) from None
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    report = validate(model)
    if not report.ok:
        lines = [f"{path}: {v.code} [{v.ref}]: {v.message}" for v in report.violations]
        if "NOT_INITIALISED" in report.codes():
            witness = report.witness or check_initialised(model)
            if witness:
                lines.append(f"{path}: witness edges: {' -> '.join(witness)}")
        raise InputError("\n".join(lines))
    return model


def _emit(out: TextIO, fmt: str, fields: Sequence) -> None:
    if fmt == "structured":
        out.write(f"format={RESULT_FORMAT}\n")
        for k, v in fields:
            out.write(f"{k}={_scalar(v, '.12g')}\n")
    else:
        for k, v in fields:
            out.write(f"{k}: {_scalar(v, '.6f')}\n")


def _scalar(v, float_format: str) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, float):
        return format(v, float_format)
    return str(v)


def _rational(value: float) -> Fraction:
    return Fraction(value).limit_denominator(10000)


def _cmd_validate(args, out) -> int:
    model = _load_model(args.file)
    out.write(f"{args.file}: ok (initialised; {len(model.locations)} locations, {len(model.edges)} edges)\n")
    return EXIT_TRUE


def _cmd_compile(args, out) -> int:
    model = _load_model(args.file)
    imdp = build_imdp(model)
    if args.emit == "imdp":
        text, dot = dump_imdp(imdp), (imdp_to_dot(imdp) if args.dot else None)
    else:
        imc = reduce_to_imc(imdp)
        text, dot = dump_imc(imc), (imc_to_dot(imc) if args.dot else None)
    if args.output:
        Path(args.output).write_text(text)
    else:
        out.write(text)
    if dot is not None:
        Path(args.dot).write_text(dot)
    return EXIT_TRUE


def _solve_imc_file(args, text: str, err: TextIO):
    """Solve a serialised IMC directly; targets are matched by location name."""
    imc = load_imc(text)
    system = ChoiceSystem.from_imc(imc)
    targets = imc.targets_for(args.target)
    stats = {"imc_states": len(imc.states), "imc_transitions": imc.transition_count()}
    return imc, system, targets, stats


def _cmd_solve(args, out, err) -> int:
    t0 = time.perf_counter()
    text = _read(args.file)
    mode = Mode(args.mode)
    if text.startswith(IMC_HEADER):
        imc, system, targets, stats = _solve_imc_file(args, text, err)
        cfg = SolveConfig(epsilon=args.epsilon, mode=mode)
        res = quant_system(system, targets, cfg)
        value, exact, verdict, undecided = res.values[imc.initial], None, None, False
        if args.threshold is not None:
            if abs(value - float(args.threshold.bound)) < 10 * args.epsilon:
                exact = policy_value(system, targets, res, mode, imc.initial)
            verdict, undecided = decide(value, args.threshold, args.epsilon, exact, mode)
        iterations, converged = res.iterations, res.converged
    else:
        model = _load_model(args.file)
        _check_locations(model, args.target)
        ans = solve_query(model, args.target, QuantQuery(mode, args.threshold, args.epsilon))
        value, verdict, undecided = ans.value, ans.verdict, ans.undecided
        iterations, converged, stats = ans.iterations, ans.converged, ans.stats
    wall = time.perf_counter() - t0
    if undecided:
        err.write(f"UNDECIDED: value {value:.12g} lies within 10*epsilon of the threshold "
                  f"{args.threshold}; reporting the float comparison\n")
    if not converged:
        err.write("warning: value iteration hit the iteration limit before converging\n")
    fields = [
        ("command", "solve"), ("mode", args.mode), ("targets", ",".join(args.target)),
        ("value", value), ("value_rational", _rational(value)),
        ("threshold", args.threshold), ("verdict", verdict), ("undecided", undecided),
        ("imdp_states", stats.get("imdp_states")), ("imdp_transitions", stats.get("imdp_transitions")),
        ("imc_states", stats.get("imc_states")), ("imc_transitions", stats.get("imc_transitions")),
        ("iterations", iterations), ("converged", converged), ("backend", BACKEND),
        ("wall_seconds", wall),
    ]
    _emit(out, args.format, fields)
    return EXIT_FALSE if verdict is False else EXIT_TRUE


def _check_locations(model, names) -> None:
    unknown = sorted(set(names) - set(model.locations))
    if unknown:
        raise InputError(f"TARGET_UNKNOWN_STATE: unknown location(s): {', '.join(unknown)}")


def _cmd_qual(args, out, err) -> int:
    t0 = time.perf_counter()
    text = _read(args.file)
    mode = QualMode(args.mode)
    if text.startswith(IMC_HEADER):
        imc, system, targets, stats = _solve_imc_file(args, text, err)
        holds_set = qual_indices(system, system.target_indices(targets), mode)
        holds = system.index[imc.initial] in holds_set
    else:
        model = _load_model(args.file)
        _check_locations(model, args.target)
        ans = solve_query(model, args.target, mode)
        holds, stats = ans.holds, ans.stats
    fields = [
        ("command", "qual"), ("mode", args.mode), ("targets", ",".join(args.target)), ("holds", holds),
        ("imdp_states", stats.get("imdp_states")), ("imdp_transitions", stats.get("imdp_transitions")),
        ("imc_states", stats.get("imc_states")), ("imc_transitions", stats.get("imc_transitions")),
        ("wall_seconds", time.perf_counter() - t0),
    ]
    _emit(out, args.format, fields)
    return EXIT_TRUE if holds else EXIT_FALSE


def _cmd_oracle(args, out, err) -> int:
    t0 = time.perf_counter()
    if args.k < 1:
        raise InputError("-k must be at least 1")
    model = _load_model(args.file)
    _check_locations(model, args.target)
    grid = GridReach(model, args.k)
    value = grid.value(args.target, args.mode, epsilon=args.epsilon)
    fields = [
        ("command", "oracle"), ("mode", args.mode), ("targets", ",".join(args.target)), ("k", args.k),
        ("value", value), ("value_rational", _rational(value)),
        ("grid_states", int(grid.valid.sum())), ("wall_seconds", time.perf_counter() - t0),
    ]
    _emit(out, args.format, fields)
    return EXIT_TRUE


def run(argv: Optional[Sequence[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_INVALID
    try:
        if args.command == "validate":
            return _cmd_validate(args, out)
        if args.command == "compile":
            return _cmd_compile(args, out)
        if args.command == "solve":
            return _cmd_solve(args, out, err)
        if args.command == "qual":
            return _cmd_qual(args, out, err)
        return _cmd_oracle(args, out, err)
    except InputError as exc:
        err.write(f"{exc}\n")
        return EXIT_INVALID
    except ModelError as exc:
        err.write(f"{exc}\n")
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - reported as an internal error
        err.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
