"""Acceptance criteria 1-10, each checked against an independent oracle."""
from __future__ import annotations

import io
import itertools
import math
import random
import time
from collections import Counter

import pytest

from conftest import ACCEPTANCE, GRAMMARS, load
from oracles import grammar_rules, scalar_inside_outside, tree_items, tree_rule_counts
from lvsp.cli import RunConfig, cmd_check
from lvsp.deduction import Item, parse, sentence_value
from lvsp.derivation import flatten, sentence_value_oracle, string_value, tree_value
from lvsp.grammar import enumerate_derivations, parse_grammar_file
from lvsp.outside import compute_outside, expected_rule_counts, inside_outside_product, split_check
from lvsp.semiring import SEMIRING_NAMES, make_semiring
from lvsp.tensor import Tensor, contract, tensor_add, zero_tensor
from lvsp.testing import (
    GrammarConfig,
    grammar_with_dims,
    random_grammar,
    random_sentence,
    random_tensor,
    random_tree,
    random_value,
    reweight,
)

TOL = 1e-9


def record(number: int, title: str, ok: bool, detail: str, seconds: float) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail} ({seconds:.2f}s)"
    ACCEPTANCE[number] = line
    print(line)


def same(s, x, y) -> bool:
    return x == y if s.is_exact else s.approx_eq(x, y, TOL)


def tensors_same(a: Tensor, b: Tensor) -> bool:
    return a.shape == b.shape and all(same(a.semiring, p, q) for p, q in zip(a.data, b.data))


# -- 1 --------------------------------------------------------------------------------

def test_c01_semiring_axioms():
    start, failures, checked = time.perf_counter(), [], 0
    rng = random.Random(1)
    for name in SEMIRING_NAMES:
        s = make_semiring(name)
        for _ in range(1000):
            a, b, c = (random_value(s, rng) for _ in range(3))
            add, mul = s.add, s.mul
            laws = {
                "add-comm": same(s, add(a, b), add(b, a)),
                "add-assoc": same(s, add(add(a, b), c), add(a, add(b, c))),
                "mul-assoc": same(s, mul(mul(a, b), c), mul(a, mul(b, c))),
                "add-identity": same(s, add(a, s.zero), a),
                "mul-identity": same(s, mul(a, s.one), a) and same(s, mul(s.one, a), a),
                "annihilation": mul(a, s.zero) == s.zero and mul(s.zero, a) == s.zero,
                "left-dist": same(s, mul(a, add(b, c)), add(mul(a, b), mul(a, c))),
                "right-dist": same(s, mul(add(a, b), c), add(mul(a, c), mul(b, c))),
            }
            if s.is_commutative:
                laws["mul-comm"] = same(s, mul(a, b), mul(b, a))
            checked += 1
            failures += [(name, law, (a, b, c)) for law, ok in laws.items() if not ok]
    seconds = time.perf_counter() - start
    ok = not failures and seconds < 5
    record(1, "semiring axioms", ok, f"{checked} triples, {len(failures)} violations", seconds)
    assert not failures, failures[:5]
    assert seconds < 5


# -- 2 --------------------------------------------------------------------------------

def _compatible_triple(s, rng):
    """A, and B, C of one shape, with rank k of A matching rank l of B."""
    ra, rb = rng.randint(1, 4), rng.randint(1, 4)
    sa = [rng.randint(1, 4) for _ in range(ra)]
    sb = [rng.randint(1, 4) for _ in range(rb)]
    k, l = rng.randint(1, ra), rng.randint(1, rb)
    sb[l - 1] = sa[k - 1]
    return (random_tensor(s, sa, rng), random_tensor(s, sb, rng), random_tensor(s, sb, rng), k, l)


def test_c02_contraction_distributes():
    start, failures, cases = time.perf_counter(), [], 0
    rng = random.Random(2)
    for name in SEMIRING_NAMES:
        s = make_semiring(name)
        for _ in range(500):
            a, b, c, k, l = _compatible_triple(s, rng)
            bc = tensor_add(b, c)
            left = tensors_same(contract(a, k, bc, l), tensor_add(contract(a, k, b, l), contract(a, k, c, l)))
            right = tensors_same(contract(bc, l, a, k), tensor_add(contract(b, l, a, k), contract(c, l, a, k)))
            cases += 1
            if not (left and right):
                failures.append((name, a.shape, b.shape, k, l, left, right))
    seconds = time.perf_counter() - start
    ok = not failures and seconds < 30
    record(2, "contraction distributivity", ok, f"{cases} instances, {len(failures)} violations", seconds)
    assert not failures, failures[:5]
    assert seconds < 30


# -- 3 --------------------------------------------------------------------------------

def test_c03_tree_string_equivalence():
    start, failures, cases = time.perf_counter(), [], 0
    rng = random.Random(3)
    config = GrammarConfig(max_nonterminals=5, max_dim=3, unary_rules=2, binary_rules=5)
    while cases < 240:
        s = make_semiring(SEMIRING_NAMES[cases % len(SEMIRING_NAMES)])
        g = random_grammar(s, rng, config)
        t = random_tree(g, rng, max_depth=5)
        if t is None:
            continue
        cases += 1
        if not tensors_same(tree_value(g, t), string_value(g, flatten(t))):
            failures.append((s.name, t.sexpr()))
    seconds = time.perf_counter() - start
    record(3, "tree value = string value", not failures,
           f"{cases} grammars over all six semirings, {len(failures)} mismatches", seconds)
    assert not failures, failures[:5]


# -- 4 and 6 --------------------------------------------------------------------------

PARSER_SEMIRINGS = ("boolean", "counting", "probability", "viterbi")


def parser_cases():
    """100 random (grammar, sentence) pairs plus the toy case, per semiring."""
    rng = random.Random(4)
    config = GrammarConfig(max_nonterminals=4, max_dim=3, unary_rules=1, binary_rules=4)
    p = make_semiring("probability")
    base = []
    while len(base) < 100:
        g = random_grammar(p, rng, config)
        sentence = random_sentence(g, rng, 6)
        if enumerate_derivations(g, sentence, cap=2000).truncated:
            continue
        base.append((g, sentence))
    cases = []
    for g, sentence in base:
        for name in PARSER_SEMIRINGS:
            gs = reweight(g, make_semiring(name), rng)
            if name == "counting":
                gs = grammar_with_dims(gs, {nt: 1 for nt in g.dims}, rng)
            cases.append((name, gs, sentence))
    cases.append(("probability", load("toy.grammar"), "a a a".split()))
    cases.append(("counting", load("toy_counting.grammar", "counting"), "a a a".split()))
    cases.append(("boolean", load("toy_boolean.grammar", "boolean"), "a a a".split()))
    cases.append(("viterbi", load("toy.grammar", "viterbi"), "a a a".split()))
    return cases


_CASES: list | None = None


def _parser_cases():
    global _CASES
    if _CASES is None:
        _CASES = parser_cases()
    return _CASES


def test_c04_parser_correctness():
    start = time.perf_counter()
    cases = _parser_cases()
    failures, parsed = [], Counter()
    for name, g, sentence in cases:
        got = sentence_value(g, "auto", sentence)
        want = sentence_value_oracle(g, sentence)
        parsed[name] += any(v != g.semiring.zero for v in want.data)
        if not tensors_same(got, want):
            failures.append((name, " ".join(sentence)))
    seconds = time.perf_counter() - start
    ok = not failures and seconds < 120
    nonzero = ", ".join(f"{n} {parsed[n]}" for n in PARSER_SEMIRINGS)
    record(4, "parser = brute-force oracle", ok,
           f"{len(cases)} runs, {len(failures)} mismatches, nonzero values: {nonzero}", seconds)
    assert not failures, failures[:5]
    assert seconds < 120


def test_c06_inside_outside_identity():
    start, failures, items = time.perf_counter(), [], 0
    for name, g, sentence in _parser_cases():
        if name != "probability":
            continue
        chart = compute_outside(parse(g, sentence))
        mass: dict[Item, Tensor] = {}
        for t in enumerate_derivations(g, sentence).trees:
            v = tree_value(g, t)
            for x, c in tree_items(g, t).items():
                x = Item(*x)
                for _ in range(c):
                    mass[x] = tensor_add(mass[x], v) if x in mass else v
        for x in chart.items:
            items += 1
            want = mass.get(x, zero_tensor(g.semiring, (g.dims[g.start],)))
            if not inside_outside_product(chart, x).allclose(want, TOL):
                failures.append((" ".join(sentence), str(x)))
    seconds = time.perf_counter() - start
    record(6, "inside-outside identity", not failures, f"{items} items, {len(failures)} mismatches", seconds)
    assert not failures, failures[:5]


# -- 5 --------------------------------------------------------------------------------

def test_c05_scalar_regression():
    start, failures, compared = time.perf_counter(), [], 0
    rng = random.Random(5)
    config = GrammarConfig(all_ones_dims=True, unary_rules=2, binary_rules=5)
    for _ in range(50):
        pg = random_grammar(make_semiring("probability"), rng, config)
        sentence = random_sentence(pg, rng, 6)
        for name in ("probability", "boolean", "counting", "viterbi", "log"):
            g = pg if name == "probability" else reweight(pg, make_semiring(name), rng)
            s = g.semiring
            chart = compute_outside(parse(g, sentence))
            inside, outside = scalar_inside_outside(grammar_rules(g), g.start, sentence,
                                                    s.add, s.mul, s.zero, s.one)
            for key in inside:
                x = Item(*key)
                got_in = chart.values[x].data[0] if x in chart.values else s.zero
                got_out = chart.outer[x].data[0] if x in chart.outer else None
                compared += 1
                if not same(s, got_in, inside[key]):
                    failures.append((name, key, "inner", got_in, inside[key]))
                # items the chart never derives have no outer value to compare
                if got_out is not None and not same(s, got_out, outside[key]):
                    failures.append((name, key, "outer", got_out, outside[key]))
    seconds = time.perf_counter() - start
    record(5, "scalar regression", not failures,
           f"50 PCFGs x 5 semirings, {compared} items, {len(failures)} mismatches", seconds)
    assert not failures, failures[:5]


# -- 7 --------------------------------------------------------------------------------

def _paths(t, prefix=()):
    yield prefix
    for p, c in enumerate(t.children):
        yield from _paths(c, prefix + (p,))


def test_c07_outer_tree_split():
    start, failures, pairs = time.perf_counter(), [], 0
    rng = random.Random(7)
    p = make_semiring("probability")
    config = GrammarConfig(max_nonterminals=5, max_dim=3, unary_rules=2, binary_rules=5)
    while pairs < 50:
        g = random_grammar(p, rng, config)
        t = random_tree(g, rng, max_depth=5)
        if t is None or not t.children:
            continue
        path = rng.choice(list(_paths(t))[1:])
        pairs += 1
        if not split_check(g, t, path, TOL):
            failures.append((t.sexpr(), path))
    seconds = time.perf_counter() - start
    record(7, "V(D) = V(T) (x)* Z(O)", not failures, f"{pairs} pairs, {len(failures)} failures", seconds)
    assert not failures, failures[:5]


# -- 8 --------------------------------------------------------------------------------

def _cycle(name: str, c: str, w: str):
    return parse_grammar_file(f"start S\ndim S 1\nrule S -> S : [{c}]\nrule S -> a : [{w}]\n", make_semiring(name))


def test_c08_looping_buckets():
    start, problems = time.perf_counter(), []
    w = 0.5
    for c in (0.1, 0.5, 0.9):
        # stopping when steps fall below 1e-9 would leave c/(1-c) * 1e-9 behind
        value = parse(_cycle("probability", c, w), ["a"], tolerance=1e-13).goal_value().item()
        if abs(value - w / (1 - c)) > TOL:
            problems.append(f"c={c}: {value} vs {w / (1 - c)}")
    two = ("start S\ndim S 1\ndim B 1\nrule S -> B : [{0}]\nrule B -> S : [{1}]\n"
           "rule B -> a : [{2}]\nrule S -> a : [{3}]\n")
    discrete = [
        ("boolean", _cycle("boolean", "T", "T"), (True,)),
        ("viterbi", _cycle("viterbi", "0.9", "0.5"), (0.5,)),
        ("boolean", parse_grammar_file(two.format("T", "T", "T", "F"), make_semiring("boolean")), (True,)),
        ("viterbi", parse_grammar_file(two.format("0.5", "0.8", "0.4", "0.1"), make_semiring("viterbi")), (0.2,)),
    ]
    for name, g, want in discrete:
        chart = parse(g, ["a"])
        for b, bucket in enumerate(chart.buckets):
            if bucket.looping and chart.generations[b] > len(bucket.items) + 1:
                problems.append(f"{name}: {chart.generations[b]} generations for {len(bucket.items)} items")
        if chart.goal_value().data != want or not chart.converged:
            problems.append(f"{name}: {chart.goal_value().data} vs {want}")
    m = "start S\ndim S 2\nrule S -> S : [0.3, 0.2, 0.1, 0.4]\nrule S -> a : [0.5, 0.25]\n"
    g = parse_grammar_file(m, make_semiring("probability"))
    v = parse(g, ["a"], tolerance=1e-13).goal_value()
    fixed = tensor_add(g.weight("r2"), contract(g.weight("r1"), 1, v, 1))
    residual = math.sqrt(sum((p - q) ** 2 for p, q in zip(v.data, fixed.data)))
    if not residual < TOL:
        problems.append(f"matrix residual {residual}")
    seconds = time.perf_counter() - start
    record(8, "looping buckets", not problems,
           f"geometric closed form, discrete generation bounds, matrix residual {residual:.1e}"
           + (f"; {problems}" if problems else ""), seconds)
    assert not problems, problems


# -- 9 --------------------------------------------------------------------------------

def test_c09_expected_counts():
    start, problems = time.perf_counter(), []
    g = load("toy.grammar")
    sentence = "a a a".split()
    got = expected_rule_counts(compute_outside(parse(g, sentence)))
    trees = enumerate_derivations(g, sentence).trees
    weights = [sum(tree_value(g, t).data) for t in trees]
    want = Counter()
    for t, p in zip(trees, weights):
        for r, c in tree_rule_counts(t).items():
            want[r] += c * p / sum(weights)
    for r in got:
        if abs(got[r] - want[r]) > TOL:
            problems.append(f"{r}: {got[r]} vs {want[r]}")
    unambiguous = expected_rule_counts(compute_outside(parse(g, ["a", "a"])))
    if unambiguous != {"r1": 1.0, "r2": 0.0, "r3": 2.0}:
        problems.append(f"unambiguous counts {unambiguous}")
    seconds = time.perf_counter() - start
    record(9, "expected rule counts", not problems,
           "toy \"a a a\" against enumeration, exact integers on \"a a\"", seconds)
    assert not problems, problems


# -- 10 -------------------------------------------------------------------------------

def mutations(text: str, limit: int = 20):
    """toy files with one rule's weight resized along one rank."""
    g = parse_grammar_file(text, make_semiring("probability"))
    out = []
    for r in g.rules:
        shape = g.expected_shape(r)
        for rank, new in itertools.product(range(len(shape)), range(1, 5)):
            if new == shape[rank]:
                continue
            mutated = shape[:rank] + (new,) + shape[rank + 1:]
            lines = []
            for line in format_lines(g):
                if line.startswith(f"rule {r.lhs} -> {' '.join(r.rhs)} :"):
                    values = ", ".join(["0.5"] * math.prod(mutated))
                    line = f"rule {r.lhs} -> {' '.join(r.rhs)} : [{values}]"
                lines.append(line)
            out.append((r.id, mutated, "\n".join(lines) + "\n"))
    return out[:limit]


def format_lines(g):
    from lvsp.grammar import format_grammar
    return format_grammar(g).splitlines()


def test_c10_well_definedness_gate(tmp_path):
    start, problems = time.perf_counter(), []
    path = GRAMMARS / "toy.grammar"
    out = io.StringIO()
    if cmd_check(RunConfig("check", path), out=out) != 0:
        problems.append(f"toy grammar rejected: {out.getvalue()}")
    cases = mutations(path.read_text())
    for n, (rule_id, shape, text) in enumerate(cases):
        f = tmp_path / f"m{n}.grammar"
        f.write_text(text)
        out = io.StringIO()
        code = cmd_check(RunConfig("check", f), out=out)
        report = out.getvalue()
        if code != 1 or f"{rule_id} (" not in report:
            problems.append(f"{rule_id} {shape}: exit {code}, {report!r}")
    seconds = time.perf_counter() - start
    record(10, "well-definedness gate", not problems and len(cases) == 20,
           f"toy passes, {len(cases)} mutations, {len(problems)} not caught", seconds)
    assert len(cases) == 20
    assert not problems, problems
