"""Command-line front-end.

Commands: classify, solve, transform, generate, check-equiv.  Exit codes:
0 success, 2 parse error, 3 fragment or precondition violation, 4
enumeration cap exceeded (infeasible at the configured budget).  The
environment variable ``SO2KIT_CAPS`` overrides enumeration caps, e.g.
``SO2KIT_CAPS=arity=4,materialize=12,stream=20,outer=4``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import expand, kromgraph, reductions, transform
from .classify import FragmentError, classify, free_variable_listing
from .core import (
    CapExceededError,
    EnumerationCaps,
    Formula,
    So2Error,
    equivalent,
    evaluate,
)
from .expand import DEFAULT_BUDGET, ExpansionBudget
from .textio import ParseError, parse, print_formula
from .transform import TransformError

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_FRAGMENT = 3
EXIT_INFEASIBLE = 4


def _caps_from_env() -> tuple[EnumerationCaps, ExpansionBudget]:
    raw = os.environ.get("SO2KIT_CAPS", "")
    values = {}
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        key, _, val = part.partition("=")
        try:
            values[key.strip()] = int(val)
        except ValueError:
            raise So2Error(f"bad SO2KIT_CAPS entry {part!r}")
    caps = EnumerationCaps(max_quantifier_arity=values.get("arity", 4))
    budget = ExpansionBudget(
        outer_arity_cap=values.get("outer", DEFAULT_BUDGET.outer_arity_cap),
        materialize_universal_cap=values.get(
            "materialize", DEFAULT_BUDGET.materialize_universal_cap
        ),
        stream_universal_cap=values.get("stream", DEFAULT_BUDGET.stream_universal_cap),
    )
    return caps, budget


def _load_formula(args) -> Formula:
    if args.expr is not None:
        return parse(args.expr)
    if args.path is None:
        raise So2Error("provide a file path or --expr")
    with open(args.path, "r", encoding="utf-8") as handle:
        return parse(handle.read())


def _emit(payload: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(payload, indent=2, default=str))
        return
    verdict = payload.get("verdict")
    if verdict is not None:
        print("TRUE" if verdict else "FALSE")
    for key, value in payload.items():
        if key == "verdict":
            continue
        print(f"{key}: {json.dumps(value, default=str)}")


# ---------------------------------------------------------------------------
# Engines
# ---------------------------------------------------------------------------


def _normalize_for_krom(formula: Formula) -> Formula:
    work = formula
    if not classify(work).is_prenex:
        work = transform.to_prenex(work)
    if not classify(work).is_cnf:
        work = transform.to_cnf(work)
    return work


def _krom_admissible(formula: Formula) -> bool:
    try:
        work = _normalize_for_krom(formula)
        kromgraph._nl_fragment_of(work)
        return True
    except So2Error:
        return False


def _expansion_admissible(formula: Formula) -> bool:
    try:
        work = formula
        if not classify(work).is_prenex:
            work = transform.to_prenex(work)
        if not classify(work).is_cnf:
            work = transform.to_cnf(work)
        profile = classify(work)
        if not profile.is_simple:
            work = transform.make_simple(work)
            profile = classify(work)
        if not (profile.is_horn or profile.is_krom):
            return False
        expand._split_blocks_for_outer(work)
        return True
    except So2Error:
        return False


def _solve_krom_graph(formula: Formula, explain: bool) -> dict:
    work = kromgraph.nl_pipeline(_normalize_for_krom(formula))
    verdict = kromgraph.decide(work)
    out = {"engine": "krom-graph", "verdict": verdict}
    if explain:
        out.update(kromgraph.explain(work))
    return out


def _solve_expansion(formula: Formula, budget: ExpansionBudget, stream: bool,
                     explain: bool) -> dict:
    work = formula
    if not classify(work).is_prenex:
        work = transform.to_prenex(work)
    if not classify(work).is_cnf:
        work = transform.to_cnf(work)
    if not classify(work).is_simple:
        work = transform.make_simple(work)
    strategy = "stream" if stream else "auto"
    verdict = expand.decide_pik_horn_krom(work, budget=budget, strategy=strategy)
    out = {"engine": "expansion-stream" if stream else "expansion", "verdict": verdict}
    if explain:
        out.update(expand.expansion_stats(work, budget=budget))
    return out


def _solve_bruteforce(formula: Formula, caps: EnumerationCaps, explain: bool) -> dict:
    verdict = bool(evaluate(formula, caps=caps))
    out = {"engine": "bruteforce", "verdict": verdict}
    if explain:
        out["note"] = "exhaustive table enumeration"
    return out


def _solve_auto(formula: Formula, caps, budget, explain: bool) -> dict:
    if _krom_admissible(formula):
        return _solve_krom_graph(formula, explain)
    if _expansion_admissible(formula):
        return _solve_expansion(formula, budget, stream=False, explain=explain)
    return _solve_bruteforce(formula, caps, explain)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_classify(args) -> int:
    formula = _load_formula(args)
    profile = classify(formula)
    payload = profile.to_dict()
    payload["free_variables"] = free_variable_listing(formula)
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_solve(args) -> int:
    caps, budget = _caps_from_env()
    formula = _load_formula(args)
    engine = args.engine
    if engine == "auto":
        out = _solve_auto(formula, caps, budget, args.explain)
    elif engine == "krom-graph":
        out = _solve_krom_graph(formula, args.explain)
    elif engine == "expansion":
        out = _solve_expansion(formula, budget, stream=False, explain=args.explain)
    elif engine == "expansion-stream":
        out = _solve_expansion(formula, budget, stream=True, explain=args.explain)
    else:
        out = _solve_bruteforce(formula, caps, args.explain)
    _emit(out, args.json)
    return EXIT_OK


def cmd_transform(args) -> int:
    caps, _ = _caps_from_env()
    formula = _load_formula(args)
    if args.simple:
        result = transform.make_simple(formula)
    elif args.cnf:
        result = transform.to_cnf(formula)
    elif args.core:
        result = transform.to_core(formula)
    elif args.unique:
        result = transform.make_unique(formula)
    elif args.prenex:
        result = transform.to_prenex(formula)
    elif args.elide:
        name, term_text = args.elide
        from .core import split_prefix

        candidates = [v for _, v in split_prefix(formula)[0] if v.name == name]
        if not candidates:
            raise TransformError(f"no quantified variable named {name!r}")
        term = parse(term_text)
        result = transform.elide(formula, candidates[0], term)
    else:
        raise So2Error("choose one of --simple --cnf --core --unique --prenex --elide")
    text = print_formula(result)
    if args.check:
        if not equivalent(formula, result, caps=caps):
            raise So2Error("transform output is not equivalent to the input")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_generate(args) -> int:
    caps, budget = _caps_from_env()
    if args.pi1_core:
        with open(args.pi1_core, "r", encoding="utf-8") as handle:
            phi = parse(handle.read())
        formula = reductions.encode_pi1_core(phi)
        verified = None
        if args.verify:
            lhs, rhs = evaluate(phi, caps=caps), evaluate(formula, caps=caps)
            if lhs != rhs:
                raise So2Error("encoded formula disagrees with the source")
            verified = f"verified: {'TRUE' if rhs else 'FALSE'} == source"
    else:
        tm_path = args.pspace_tm or args.exp_tm
        with open(tm_path, "r", encoding="utf-8") as handle:
            machine = reductions.TMSpec.from_json(handle.read())
        word = args.input
        verified = None
        if args.pspace_tm:
            bound = args.space if args.space else max(1, len(word) + 1)
            params = reductions.EncodingParams.for_pspace(machine, bound)
            formula = reductions.encode_pspace_tm(machine, word, params)
            if args.verify:
                run = reductions.run_tm(machine, word, time_cap=100000, space_cap=bound)
                verdict = expand.decide_sigma1_sk(formula, budget=budget, strategy="stream")
                if (run == "accept") != verdict:
                    raise So2Error(f"engine verdict {verdict} != simulation {run}")
                verified = f"verified: {'TRUE' if verdict else 'FALSE'} == {run}"
        else:
            bound = args.space if args.space else 3
            params = reductions.EncodingParams.for_exp(machine, bound)
            formula = reductions.encode_exp_tm(machine, word, params)
            if args.verify:
                run = reductions.run_tm(
                    machine, word, time_cap=(1 << bound) - 1, space_cap=(1 << bound) - 2
                )
                verdict = expand.decide_sigma1_sh(formula, budget=budget, strategy="stream")
                if (run == "accept") != verdict:
                    raise So2Error(f"engine verdict {verdict} != simulation {run}")
                verified = f"verified: {'TRUE' if verdict else 'FALSE'} == {run}"
    text = print_formula(formula)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    else:
        print(text)
    if verified:
        print(verified)
    return EXIT_OK


def cmd_check_equiv(args) -> int:
    caps, _ = _caps_from_env()
    with open(args.left, "r", encoding="utf-8") as handle:
        phi = parse(handle.read())
    with open(args.right, "r", encoding="utf-8") as handle:
        psi = parse(handle.read())
    same = equivalent(phi, psi, caps=caps)
    if args.json:
        print(json.dumps({"equivalent": same}))
    else:
        print("EQUIVALENT" if same else "DIFFERENT")
    return EXIT_OK if same else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="so2kit",
        description="Second-order quantified Boolean formula toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_input(p):
        p.add_argument("path", nargs="?", help="formula file")
        p.add_argument("--expr", help="formula text instead of a file")

    p = sub.add_parser("classify", help="print the fragment profile as JSON")
    add_input(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("solve", help="decide truth")
    add_input(p)
    p.add_argument(
        "--engine",
        choices=["auto", "bruteforce", "krom-graph", "expansion", "expansion-stream"],
        default="auto",
    )
    p.add_argument(
        "--explain",
        "--stats",
        action="store_true",
        help="attach the engine report (conditions, marking, or expansion sizes)",
    )
    p.add_argument("--json", action="store_true")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized helpers")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("transform", help="apply a rewrite")
    add_input(p)
    p.add_argument("--simple", action="store_true")
    p.add_argument("--cnf", action="store_true")
    p.add_argument("--core", action="store_true")
    p.add_argument("--unique", action="store_true")
    p.add_argument("--prenex", action="store_true")
    p.add_argument("--elide", nargs=2, metavar=("F", "T"))
    p.add_argument("--check", action="store_true", help="verify equivalence")
    p.add_argument("--out")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("generate", help="emit an encoder's formula")
    p.add_argument("--pspace-tm", help="machine JSON for the space-bounded encoder")
    p.add_argument("--exp-tm", help="machine JSON for the time-bounded encoder")
    p.add_argument("--pi1-core", help="formula file for the core-form encoder")
    p.add_argument("--input", default="", help="machine input word")
    p.add_argument("--space", type=int, help="space bound")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("check-equiv", help="oracle equivalence of two files")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check_equiv)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CapExceededError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (FragmentError, TransformError) as exc:
        print(f"fragment error: {exc}", file=sys.stderr)
        return EXIT_FRAGMENT
    except So2Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FRAGMENT
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
