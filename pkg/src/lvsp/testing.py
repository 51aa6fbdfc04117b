"""Seeded random generators for grammars and the values they carry."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

from .grammar import Rule, Tree, WeightedCFG, tree_yield
from .semiring import Scored, Semiring
from .tensor import Tensor


def random_value(s: Semiring, rng: random.Random):
    name = s.name
    if name == "boolean":
        return rng.random() < 0.6
    if name == "counting":
        return rng.randint(0, 3)
    if name == "probability":
        return 0.0 if rng.random() < 0.1 else rng.uniform(0.0, 1.0)
    if name == "viterbi":
        return 0.0 if rng.random() < 0.1 else rng.random()
    if name == "log":
        return -math.inf if rng.random() < 0.1 else rng.uniform(-3.0, 1.0)
    if name == "viterbi-derivation":
        if rng.random() < 0.1:
            return s.zero
        # coarse scores so that ties, and hence the tie-break, get exercised
        score = rng.choice([0.25, 0.5, 0.75, 1.0])
        rules = tuple(rng.choice("abc") for _ in range(rng.randint(0, 2)))
        return Scored(score, rules)
    raise ValueError(f"no generator for semiring {name!r}")


def random_tensor(s: Semiring, shape: Sequence[int], rng: random.Random) -> Tensor:
    size = math.prod(shape)
    return Tensor(s, shape, [random_value(s, rng) for _ in range(size)])


def _rule_value(s: Semiring, rng: random.Random, rule_id: str):
    """A weight entry; nonzero most of the time so that parses exist."""
    if s.name == "boolean":
        return rng.random() < 0.8
    if s.name == "counting":
        return rng.randint(0, 2)
    if s.name in ("probability", "viterbi"):
        return rng.uniform(0.05, 1.0)
    if s.name == "log":
        return rng.uniform(-2.0, 0.0)
    if s.name == "viterbi-derivation":
        return s.annotate(rng.choice([0.25, 0.5, 1.0]), rule_id)
    raise ValueError(f"no generator for semiring {s.name!r}")


@dataclass
class GrammarConfig:
    max_nonterminals: int = 5
    max_dim: int = 3
    terminals: tuple[str, ...] = ("a", "b")
    binary_rules: int = 4
    unary_rules: int = 0
    unary_cycles: bool = False
    all_ones_dims: bool = False


def random_grammar(s: Semiring, rng: random.Random, config: GrammarConfig | None = None) -> WeightedCFG:
    """Random CNF grammar (plus optional unary rules) with well-defined weights.

    Every nonterminal gets a lexical rule so every sentence over the terminal
    alphabet has a chance to parse.  Unary rules only go from lower to higher
    index, so enumeration stays finite, unless ``unary_cycles`` is set.
    """
    config = config or GrammarConfig()
    k = rng.randint(1, config.max_nonterminals)
    names = ["S"] + [f"N{q}" for q in range(1, k)]
    dims = {nt: 1 if config.all_ones_dims else rng.randint(1, config.max_dim) for nt in names}
    shapes: dict[tuple[str, tuple[str, ...]], None] = {}
    for nt in names:
        for t in rng.sample(config.terminals, rng.randint(1, len(config.terminals))):
            shapes[(nt, (t,))] = None
    for _ in range(config.binary_rules):
        shapes[(rng.choice(names), (rng.choice(names), rng.choice(names)))] = None
    if k > 1:
        for _ in range(config.unary_rules):
            a, b = rng.sample(range(k), 2)
            if not config.unary_cycles and a > b:
                a, b = b, a
            shapes[(names[a], (names[b],))] = None
        if config.unary_cycles and config.unary_rules:
            shapes[(names[1], (names[0],))] = None
            shapes[(names[0], (names[1],))] = None
    rules, weights = [], {}
    for index, (lhs, rhs) in enumerate(shapes, start=1):
        rule = Rule(f"r{index}", lhs, rhs)
        shape = tuple(dims[x] for x in rhs if x in dims) + (dims[lhs],)
        weights[rule.id] = Tensor(s, shape, [_rule_value(s, rng, rule.id) for _ in range(math.prod(shape))])
        rules.append(rule)
    return WeightedCFG(s, "S", dims, rules, weights)


def random_tree(g: WeightedCFG, rng: random.Random, max_depth: int = 5, root: str | None = None) -> Tree | None:
    """Random derivation tree of depth at most ``max_depth``, or None if none exists."""
    # least[A] = smallest depth of any tree rooted at A
    least: dict[str, int] = {}
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            kids = g.children(r)
            if all(c in least for c in kids):
                d = 1 + max((least[c] for c in kids), default=0)
                if d < least.get(r.lhs, math.inf):
                    least[r.lhs] = d
                    changed = True

    def grow(sym, budget):
        options = [
            r for r in g.rules_for(sym)
            if all(least.get(c, math.inf) <= budget - 1 for c in g.children(r))
        ]
        if not options:
            return None
        r = rng.choice(options)
        return Tree(r.id, tuple(grow(c, budget - 1) for c in g.children(r)))

    sym = root or g.start
    if least.get(sym, math.inf) > max_depth:
        return None
    return grow(sym, max_depth)


def random_sentence(g: WeightedCFG, rng: random.Random, max_length: int = 6) -> list[str]:
    """Half the time the yield of a random tree, otherwise uniform tokens."""
    if rng.random() < 0.5:
        for _ in range(10):
            t = random_tree(g, rng, max_depth=4)
            if t is not None:
                words = tree_yield(g, t)
                if len(words) <= max_length:
                    return words
    terminals = sorted(g.terminals)
    return [rng.choice(terminals) for _ in range(rng.randint(1, max_length))]


def grammar_with_dims(g: WeightedCFG, dims: dict[str, int], rng: random.Random) -> WeightedCFG:
    """Same rules with new dimensions; weights are drawn afresh."""
    s = g.semiring
    weights = {}
    for r in g.rules:
        shape = tuple(dims[c] for c in g.children(r)) + (dims[r.lhs],)
        weights[r.id] = Tensor(s, shape, [_rule_value(s, rng, r.id) for _ in range(math.prod(shape))])
    return WeightedCFG(s, g.start, dims, g.rules, weights)


def reweight(g: WeightedCFG, s: Semiring, rng: random.Random) -> WeightedCFG:
    """Same rules and dimensions over another semiring."""
    weights = {
        r.id: Tensor(s, g.weights[r.id].shape,
                     [_rule_value(s, rng, r.id) for _ in range(g.weights[r.id].size)])
        for r in g.rules
    }
    return WeightedCFG(s, g.start, g.dims, g.rules, weights)
