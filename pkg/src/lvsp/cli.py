"""Command-line front end: ``lvsp {check,parse,inside-outside,oracle}``.

Exit codes: 0 success, 1 domain failure (ill-defined weights, unsupported
semiring, unknown terminal, zero posterior), 2 I/O or syntax failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .deduction import DEFAULT_MAX_GENERATIONS, Chart, format_chart, parse
from .derivation import flatten, string_value, tree_value
from .errors import (
    ConfigurationError,
    DescriptionMismatch,
    GrammarSyntaxError,
    NonConvergenceWarning,
    UndefinedPosterior,
    UnknownTerminal,
    UnsupportedOperation,
    WellDefinednessError,
)
from .grammar import WeightedCFG, enumerate_derivations, parse_grammar_file
from .outside import compute_outside, expected_rule_counts
from .semiring import DEFAULT_TOLERANCE, SEMIRING_NAMES, make_semiring
from .tensor import Tensor, format_values, tensor_add, zero_tensor

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    grammar_path: Path
    semiring: str = "probability"
    sentences: list[list[str]] = field(default_factory=list)
    tolerance: float = DEFAULT_TOLERANCE
    max_generations: int = DEFAULT_MAX_GENERATIONS
    output_format: str = "text"
    dump_chart: bool = False
    description: str = "auto"
    cap: int = 10_000

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ConfigurationError("--tolerance must be positive")
        if self.max_generations < 1:
            raise ConfigurationError("--max-generations must be >= 1")
        if self.cap < 1:
            raise ConfigurationError("--cap must be >= 1")


def _load(config: RunConfig) -> WeightedCFG:
    semiring = make_semiring(config.semiring)
    text = Path(config.grammar_path).read_text(encoding="utf-8")
    return parse_grammar_file(text, semiring)


def _tensor_json(t: Tensor) -> dict:
    return {"value": [t.semiring.to_json(v) for v in t.data], "shape": list(t.shape)}


def tensor_from_json(obj: dict, semiring) -> Tensor:
    return Tensor(semiring, obj["shape"], [semiring.from_json(v) for v in obj["value"]])


def _best(t: Tensor):
    return t.semiring.sum(t.data)


def _sentences(config: RunConfig) -> list[list[str]]:
    if not config.sentences:
        raise ConfigurationError("give a sentence with --sentence or a file with --input")
    return config.sentences


def _parse_chart(g: WeightedCFG, words, config: RunConfig) -> Chart:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonConvergenceWarning)
        chart = parse(g, words, config.description, config.max_generations, config.tolerance)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return chart


def cmd_check(config: RunConfig, out=sys.stdout) -> int:
    try:
        g = _load(config)
    except WellDefinednessError as exc:
        print(f"not well-defined: {len(exc.violations)} violation(s)", file=out)
        for v in exc.violations:
            print(f"  {v}", file=out)
        return EXIT_DOMAIN
    dims = " ".join(f"{nt}={d}" for nt, d in g.dims.items())
    print(f"well-defined: {len(g.rules)} rules, dims {dims}", file=out)
    return EXIT_OK


def cmd_parse(config: RunConfig, out=sys.stdout) -> int:
    g = _load(config)
    for words in _sentences(config):
        chart = _parse_chart(g, words, config)
        value = chart.goal_value()
        if config.output_format == "json":
            record = _tensor_json(value)
            if g.semiring.name == "viterbi-derivation":
                record["best"] = list(_best(value).rules)
            if config.dump_chart:
                record["chart"] = {str(x): _tensor_json(v) for x, v in chart.values.items()}
            print(json.dumps(record), file=out)
            continue
        if len(config.sentences) > 1:
            print(f"sentence: {' '.join(words)}", file=out)
        print(f"value: {format_values(value)}", file=out)
        print(f"shape: {list(value.shape)}", file=out)
        if g.semiring.name == "viterbi-derivation":
            print(f"best: {' '.join(_best(value).rules)}", file=out)
        if config.dump_chart:
            print(format_chart(chart), file=out)
    return EXIT_OK


def cmd_inside_outside(config: RunConfig, out=sys.stdout) -> int:
    g = _load(config)
    if not g.semiring.is_commutative:
        raise UnsupportedOperation(
            f"inside-outside needs a commutative semiring; {g.semiring.name} is not"
        )
    for words in _sentences(config):
        chart = _parse_chart(g, words, config)
        compute_outside(chart, config.max_generations, config.tolerance)
        counts = expected_rule_counts(chart) if g.semiring.name == "probability" else None
        if config.output_format == "json":
            record = {
                "inside": {str(x): _tensor_json(v) for x, v in chart.values.items()},
                "outside": {str(x): _tensor_json(v) for x, v in chart.outer.items()},
            }
            if counts is not None:
                record["counts"] = counts
            print(json.dumps(record), file=out)
            continue
        if len(config.sentences) > 1:
            print(f"sentence: {' '.join(words)}", file=out)
        print("inside:", file=out)
        print(format_chart(chart), file=out)
        print("outside:", file=out)
        print(format_chart(chart, chart.outer, chart.outer_generations), file=out)
        if counts is not None:
            print("counts:", file=out)
            for rule_id, c in counts.items():
                print(f"{rule_id} {c!r}", file=out)
    return EXIT_OK


def cmd_oracle(config: RunConfig, out=sys.stdout) -> int:
    g = _load(config)
    status = EXIT_OK
    s = g.semiring
    for words in _sentences(config):
        result = enumerate_derivations(g, words, config.cap)
        total = zero_tensor(s, (g.dims[g.start],))
        mismatches = 0
        if config.output_format == "text" and len(config.sentences) > 1:
            print(f"sentence: {' '.join(words)}", file=out)
        trees = []
        for t in result.trees:
            tv = tree_value(g, t)
            sv = string_value(g, flatten(t))
            ok = tv.allclose(sv, config.tolerance)
            mismatches += not ok
            total = tensor_add(total, tv)
            trees.append((t, tv, sv, ok))
        if config.output_format == "json":
            print(json.dumps({
                "derivations": [
                    {"tree": t.sexpr(), "tree_value": _tensor_json(tv),
                     "string_value": _tensor_json(sv), "match": ok}
                    for t, tv, sv, ok in trees
                ],
                "total": _tensor_json(total),
                "truncated": result.truncated,
            }), file=out)
        else:
            for t, tv, sv, ok in trees:
                print(t.sexpr(), file=out)
                print(f"  tree value:   {format_values(tv)}", file=out)
                print(f"  string value: {format_values(sv)}", file=out)
                if not ok:
                    print("  MISMATCH: tree and string values differ", file=out)
            print(f"{len(trees)} derivations", file=out)
            print(f"total: {format_values(total)}", file=out)
        if result.truncated:
            print(f"warning: derivations truncated at cap {config.cap}; total is partial",
                  file=sys.stderr if config.output_format == "json" else out)
        if mismatches:
            status = EXIT_DOMAIN
    return status


COMMANDS = {
    "check": cmd_check,
    "parse": cmd_parse,
    "inside-outside": cmd_inside_outside,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grammar", required=True, type=Path, help="grammar file")
    common.add_argument("--semiring", default="probability", choices=SEMIRING_NAMES)
    common.add_argument("--sentence", help="whitespace-separated tokens")
    common.add_argument("--input", type=Path, help="file with one sentence per line")
    common.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    common.add_argument("--max-generations", type=int, default=DEFAULT_MAX_GENERATIONS)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--dump-chart", action="store_true")
    common.add_argument("--description", default="auto", choices=["auto", "cky", "cky-unary"])
    common.add_argument("--cap", type=int, default=10_000, help="oracle: max derivations")

    parser = argparse.ArgumentParser(prog="lvsp", description="Tensor-weighted semiring parsing.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="check weight shapes against dimensions")
    sub.add_parser("parse", parents=[common], help="value of the goal item")
    sub.add_parser("inside-outside", parents=[common], help="inner/outer values and expected counts")
    sub.add_parser("oracle", parents=[common], help="enumerate derivations by brute force")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    sentences = []
    if args.sentence is not None:
        sentences.append(args.sentence.split())
    if args.input is not None:
        lines = args.input.read_text(encoding="utf-8").splitlines()
        sentences.extend(line.split() for line in lines if line.strip())
    return RunConfig(
        command=args.command,
        grammar_path=args.grammar,
        semiring=args.semiring,
        sentences=sentences,
        tolerance=args.tolerance,
        max_generations=args.max_generations,
        output_format="json" if args.json else "text",
        dump_chart=args.dump_chart,
        description=args.description,
        cap=args.cap,
    )


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        return COMMANDS[config.command](config, out=out)
    except (OSError, GrammarSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except UndefinedPosterior as exc:
        print(f"error: undefined posterior: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (WellDefinednessError, UnsupportedOperation, UnknownTerminal,
            DescriptionMismatch, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
