"""Command-line driver: ``selftest gen-ideal | verify | emit-correlations | adversarial``.

Exit codes: 0 pass, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .conditions import FAMILIES
from .correlations import all_questions, check_question, probability_table, tables_to_csv, tables_to_json
from .pipeline import DEFAULT_FIDELITY_TOL, DEFAULT_TOL, verify
from .states import Graph
from .strategies import (
    AdversarialTransform,
    StrategyFormatError,
    adversarial_embed,
    ideal_strategy,
    load,
    normalize_params,
    serialize,
)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse number list {text!r}") from None


def _read_graph(arg: str) -> Graph:
    path = Path(arg)
    text = path.read_text() if path.exists() else arg
    try:
        return Graph.from_json(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"graph {arg!r} is neither a readable file nor JSON: {exc}") from None


def params_from_args(family: str, args) -> dict:
    raw: dict = {}
    if args.n is not None:
        raw["n"] = args.n
    if args.theta is not None:
        raw["theta"] = args.theta
    if args.k is not None:
        raw["k"] = args.k
    if args.coeffs is not None:
        coeffs = _parse_floats(args.coeffs)
        if args.d is not None and args.d != len(coeffs):
            raise UsageError(f"--d {args.d} does not match {len(coeffs)} coefficients")
        raw["coeffs"] = coeffs
    elif args.d is not None and family == "schmidt":
        raise UsageError("--d needs --coeffs")
    if args.graph is not None:
        raw["graph"] = _read_graph(args.graph)
    return normalize_params(family, raw)


def _add_family_flags(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--family", choices=FAMILIES, required=required)
    p.add_argument("--n", type=int, help="number of parties")
    p.add_argument("--theta", type=float, help="GHZ / tilted CHSH angle in (0, pi/4]")
    p.add_argument("--k", type=int, help="Dicke excitation number")
    p.add_argument("--d", type=int, help="local dimension of a Schmidt state (checked against --coeffs)")
    p.add_argument("--coeffs", help="comma-separated Schmidt coefficients")
    p.add_argument("--graph", help="graph JSON file or inline JSON {\"n\": .., \"edges\": [[a, b], ..]}")


def _write(text: str | bytes, out: str | None) -> None:
    if out is None or out == "-":
        if isinstance(text, bytes):
            sys.stdout.buffer.write(text)
            sys.stdout.buffer.write(b"\n")
        else:
            sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    mode = "wb" if isinstance(text, bytes) else "w"
    with open(out, mode) as fh:
        fh.write(text)


def cmd_gen_ideal(args) -> int:
    family = args.family_pos or args.family
    if family is None:
        raise UsageError("a family is required")
    params = params_from_args(family, args)
    strategy = ideal_strategy(family, params)
    _write(serialize(strategy), args.out)
    return EXIT_PASS


def cmd_verify(args) -> int:
    strategy = load(args.strategy)
    family = args.family or strategy.family
    if family is None:
        raise UsageError("the strategy file has no family header; pass --family and its parameters")
    has_flags = any(getattr(args, k) is not None for k in ("n", "theta", "k", "d", "coeffs", "graph"))
    if has_flags or family != strategy.family:
        params = params_from_args(family, args)
    else:
        params = strategy.params
    result = verify(strategy, family, params, tol=args.tol, fidelity_tol=args.fidelity_tol)
    _write(result.to_csv() if args.format == "csv" else result.to_json(), args.out)
    if not result.passed:
        print(f"verification failed: {', '.join(result.failing()[:10])}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_PASS


def _parse_questions(text: str, strategy) -> list[tuple[int, ...]]:
    if text == "all":
        return all_questions(strategy)
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            q = tuple(int(v) for v in chunk.replace(" ", ",").split(",") if v)
        except ValueError:
            raise UsageError(f"cannot parse question {chunk!r}") from None
        out.append(check_question(strategy, q))
    return out


def cmd_emit_correlations(args) -> int:
    strategy = load(args.strategy)
    questions = _parse_questions(args.questions, strategy)
    tables = [probability_table(strategy, q) for q in questions]
    _write(tables_to_csv(tables) if args.format == "csv" else tables_to_json(tables), args.out)
    return EXIT_PASS


def cmd_adversarial(args) -> int:
    strategy = load(args.strategy)
    junk = [int(v) for v in _parse_floats(args.junk_dims)]
    embedded = adversarial_embed(strategy, AdversarialTransform(tuple(junk), seed=args.seed))
    _write(serialize(embedded), args.out)
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selftest", description="Self-testing verification toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-ideal", help="write the ideal strategy of a family as JSON")
    p.add_argument("family_pos", nargs="?", choices=FAMILIES, metavar="FAMILY")
    _add_family_flags(p, required=False)
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_gen_ideal)

    p = sub.add_parser("verify", help="check a strategy file against a family's self-test")
    p.add_argument("strategy")
    _add_family_flags(p, required=False)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="condition tolerance (default 1e-9)")
    p.add_argument("--fidelity-tol", type=float, default=DEFAULT_FIDELITY_TOL,
                   help="accepted isometry infidelity (default 1e-9)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="report file (default: stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("emit-correlations", help="write probability tables")
    p.add_argument("strategy")
    p.add_argument("--questions", default="all", help="'all' or e.g. '0,0;0,1'")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_emit_correlations)

    p = sub.add_parser("adversarial", help="embed a strategy with junk and random local unitaries")
    p.add_argument("strategy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--junk-dims", default="2", help="one value for all parties or one per party")
    p.add_argument("--out")
    p.set_defaults(func=cmd_adversarial)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_PASS
    try:
        if getattr(args, "tol", 1.0) <= 0:
            raise UsageError("--tol must be positive")
        return args.func(args)
    except (UsageError, StrategyFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
