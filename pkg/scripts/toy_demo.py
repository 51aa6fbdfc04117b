"""Parse "a a a" with the toy latent-variable grammar and show every quantity."""
from __future__ import annotations

import argparse
from pathlib import Path

from lvsp.deduction import format_chart, parse
from lvsp.derivation import flatten, string_value, tree_value
from lvsp.grammar import enumerate_derivations, parse_grammar_file
from lvsp.outside import compute_outside, expected_rule_counts, inside_outside_product
from lvsp.semiring import make_semiring
from lvsp.tensor import format_values

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grammar", type=Path, default=ROOT / "grammars" / "toy.grammar")
    ap.add_argument("--sentence", default="a a a")
    args = ap.parse_args()

    g = parse_grammar_file(args.grammar.read_text(), make_semiring("probability"))
    words = args.sentence.split()

    print("derivations")
    for t in enumerate_derivations(g, words).trees:
        print(f"  {t.sexpr()}")
        print(f"    tree   {format_values(tree_value(g, t))}")
        print(f"    string {format_values(string_value(g, flatten(t)))}")

    chart = compute_outside(parse(g, words))
    print("\ninner values")
    print(format_chart(chart))
    print("\nV(x) (x)* Z(x) per item")
    for x in chart.items:
        print(f"  {x} : {format_values(inside_outside_product(chart, x))}")
    print("\nexpected rule counts")
    for rule_id, c in expected_rule_counts(chart).items():
        print(f"  {rule_id} {g.rule(rule_id)}: {c:.6f}")


if __name__ == "__main__":
    main()
