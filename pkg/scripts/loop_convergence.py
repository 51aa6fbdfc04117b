"""Generations needed by the looping-bucket solver on S -> S cycles.

For each cycle weight c the inner value of "a" should approach w / (1 - c).
Prints one row per (c, tolerance) with the generations used and the error.
"""
from __future__ import annotations

import argparse
import warnings

from lvsp.deduction import parse
from lvsp.errors import NonConvergenceWarning
from lvsp.grammar import parse_grammar_file
from lvsp.semiring import make_semiring


def cycle_grammar(c: float, w: float):
    text = f"start S\ndim S 1\nrule S -> S : [{c!r}]\nrule S -> a : [{w!r}]\n"
    return parse_grammar_file(text, make_semiring("probability"))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--weights", type=float, nargs="+", default=[0.1, 0.5, 0.9, 0.99])
    ap.add_argument("--tolerances", type=float, nargs="+", default=[1e-6, 1e-9, 1e-12])
    ap.add_argument("--leaf", type=float, default=0.5)
    ap.add_argument("--max-generations", type=int, default=100_000)
    args = ap.parse_args()

    print(f"{'c':>6} {'tolerance':>10} {'generations':>12} {'abs error':>12}")
    for c in args.weights:
        exact = args.leaf / (1 - c)
        for tol in args.tolerances:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NonConvergenceWarning)
                chart = parse(cycle_grammar(c, args.leaf), ["a"], "auto", args.max_generations, tol)
            value = chart.goal_value().item()
            print(f"{c:>6} {tol:>10.0e} {chart.generations[0]:>12} {abs(value - exact):>12.2e}")


if __name__ == "__main__":
    main()
