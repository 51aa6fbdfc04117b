"""Tensor-weighted context-free grammars.

Every nonterminal ``A`` is assigned a dimension ``dim(A)``.  The weight of a
rule ``A -> x_1 ... x_m`` is a tensor whose ranks are the dimensions of the
nonterminals among ``x_1 ... x_m`` (left to right), followed by ``dim(A)``
last.  Terminals contribute no rank.  Rules without nonterminal children
therefore carry vectors of size ``dim(A)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

from .errors import GrammarSyntaxError, WellDefinednessError
from .semiring import Semiring
from .tensor import Tensor


@dataclass(frozen=True)
class Rule:
    id: str
    lhs: str
    rhs: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.lhs} -> {' '.join(self.rhs)}"


class Violation(NamedTuple):
    rule_id: str
    rule: str
    expected: tuple[int, ...]
    actual: str

    def __str__(self) -> str:
        return f"{self.rule_id} ({self.rule}): expected shape {list(self.expected)}, got {self.actual}"


@dataclass(frozen=True)
class WeightedCFG:
    semiring: Semiring
    start: str
    dims: Mapping[str, int]
    rules: tuple[Rule, ...]
    weights: Mapping[str, Tensor]
    terminals: frozenset[str] = field(default=frozenset())

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "dims", dict(self.dims))
        object.__setattr__(self, "weights", dict(self.weights))
        if not self.rules:
            raise GrammarSyntaxError("grammar must have at least one rule")
        if self.start not in self.dims:
            raise GrammarSyntaxError(f"start symbol {self.start!r} has no dim declaration")
        for nt, d in self.dims.items():
            if d < 1:
                raise GrammarSyntaxError(f"dimension of {nt} must be >= 1, got {d}")
        seen_ids, seen_rules = set(), set()
        terminals = set()
        for r in self.rules:
            if r.id in seen_ids:
                raise GrammarSyntaxError(f"duplicate rule id {r.id!r}")
            if (r.lhs, r.rhs) in seen_rules:
                raise GrammarSyntaxError(f"duplicate rule {r}")
            seen_ids.add(r.id)
            seen_rules.add((r.lhs, r.rhs))
            if r.lhs not in self.dims:
                raise GrammarSyntaxError(f"rule {r.id}: lhs {r.lhs!r} is not a declared nonterminal")
            if not r.rhs:
                raise GrammarSyntaxError(f"rule {r.id}: empty right-hand sides are not supported")
            if r.id not in self.weights:
                raise GrammarSyntaxError(f"rule {r.id} ({r}) has no weight")
            terminals.update(sym for sym in r.rhs if sym not in self.dims)
        object.__setattr__(self, "terminals", frozenset(terminals))
        object.__setattr__(self, "_by_id", {r.id: r for r in self.rules})
        by_lhs: dict[str, list[Rule]] = {}
        for r in self.rules:
            by_lhs.setdefault(r.lhs, []).append(r)
        object.__setattr__(self, "_by_lhs", by_lhs)

    @property
    def nonterminals(self) -> frozenset[str]:
        return frozenset(self.dims)

    def rule(self, rule_id: str) -> Rule:
        return self._by_id[rule_id]

    def rules_for(self, lhs: str) -> list[Rule]:
        return self._by_lhs.get(lhs, [])

    def children(self, rule: Rule | str) -> tuple[str, ...]:
        """Nonterminals on the right-hand side, left to right."""
        if isinstance(rule, str):
            rule = self.rule(rule)
        return tuple(sym for sym in rule.rhs if sym in self.dims)

    def expected_shape(self, rule: Rule | str) -> tuple[int, ...]:
        if isinstance(rule, str):
            rule = self.rule(rule)
        return tuple(self.dims[c] for c in self.children(rule)) + (self.dims[rule.lhs],)

    def weight(self, rule: Rule | str) -> Tensor:
        rule_id = rule if isinstance(rule, str) else rule.id
        return self.weights[rule_id]


def check_well_defined(g: WeightedCFG) -> list[Violation]:
    """Rules whose weight shape is not (child dims..., lhs dim); empty means pass."""
    violations = []
    for r in g.rules:
        expected = g.expected_shape(r)
        actual = g.weights[r.id].shape
        if actual != expected:
            violations.append(Violation(r.id, str(r), expected, str(list(actual))))
    return violations


def validate(g: WeightedCFG) -> WeightedCFG:
    violations = check_well_defined(g)
    if violations:
        raise WellDefinednessError(violations)
    return g


# -- grammar files -------------------------------------------------------------

_RULE_RE = re.compile(r"^rule\s+(\S+)\s*->\s*(.*?)\s*:\s*(\[.*)$", re.S)


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def _logical_lines(text: str):
    """Yield (line_number, text) joining bracketed literals that span lines."""
    buf, start, depth = [], None, 0
    for number, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip() and depth == 0:
            continue
        if depth == 0:
            start = number
        buf.append(line)
        depth += line.count("[") - line.count("]")
        if depth < 0:
            raise GrammarSyntaxError("unbalanced ']'", number)
        if depth == 0:
            yield start, " ".join(buf).strip()
            buf = []
    if depth:
        raise GrammarSyntaxError("unterminated tensor literal", start)


def parse_tensor_tokens(literal: str) -> list[str]:
    literal = literal.strip()
    if not (literal.startswith("[") and literal.endswith("]")):
        raise ValueError("tensor literal must be enclosed in [ ]")
    body = literal[1:-1]
    if "[" in body or "]" in body:
        raise ValueError("tensor literals are flat lists")
    return [tok for tok in re.split(r"[\s,]+", body) if tok]


def parse_grammar_file(text: str, semiring: Semiring) -> WeightedCFG:
    """Read the line-based grammar format; ill-defined weights are fatal."""
    start = None
    dims: dict[str, int] = {}
    raw_rules = []
    for number, line in _logical_lines(text):
        keyword = line.split(None, 1)[0]
        if keyword == "start":
            parts = line.split()
            if len(parts) != 2:
                raise GrammarSyntaxError("expected 'start <symbol>'", number)
            if start is not None:
                raise GrammarSyntaxError("start symbol declared twice", number)
            start = parts[1]
        elif keyword == "dim":
            parts = line.split()
            if len(parts) != 3 or not parts[2].isdigit():
                raise GrammarSyntaxError("expected 'dim <nonterminal> <positive int>'", number)
            if parts[1] in dims:
                raise GrammarSyntaxError(f"dimension of {parts[1]} declared twice", number)
            if int(parts[2]) < 1:
                raise GrammarSyntaxError(f"dimension of {parts[1]} must be >= 1", number)
            dims[parts[1]] = int(parts[2])
        elif keyword == "rule":
            m = _RULE_RE.match(line)
            if not m:
                raise GrammarSyntaxError("expected 'rule <lhs> -> <rhs ...> : [values]'", number)
            lhs, rhs, literal = m.groups()
            try:
                tokens = parse_tensor_tokens(literal)
            except ValueError as exc:
                raise GrammarSyntaxError(str(exc), number) from None
            raw_rules.append((number, lhs, tuple(rhs.split()), tokens))
        else:
            raise GrammarSyntaxError(f"unknown directive {keyword!r}", number)

    if start is None:
        raise GrammarSyntaxError("missing 'start' declaration")
    if not raw_rules:
        raise GrammarSyntaxError("grammar must have at least one rule")

    rules, weights, violations = [], {}, []
    for index, (number, lhs, rhs, tokens) in enumerate(raw_rules, start=1):
        rule_id = f"r{index}"
        if lhs not in dims:
            raise GrammarSyntaxError(f"undeclared nonterminal {lhs!r} (no dim line)", number)
        if not rhs:
            raise GrammarSyntaxError("empty right-hand sides are not supported", number)
        rule = Rule(rule_id, lhs, rhs)
        shape = tuple(dims[s] for s in rhs if s in dims) + (dims[lhs],)
        if len(tokens) != math.prod(shape):
            violations.append(Violation(rule_id, str(rule), shape, f"{len(tokens)} values"))
            continue
        try:
            values = [semiring.annotate(semiring.parse_token(t), rule_id) for t in tokens]
        except ValueError as exc:
            raise GrammarSyntaxError(str(exc), number) from None
        rules.append(rule)
        weights[rule_id] = Tensor(semiring, shape, values)
    if violations:
        raise WellDefinednessError(violations)
    return validate(WeightedCFG(semiring, start, dims, rules, weights))


def format_grammar(g: WeightedCFG) -> str:
    """Inverse of :func:`parse_grammar_file` (rule ids are renumbered in order)."""
    fmt = g.semiring.format_value
    if g.semiring.name == "viterbi-derivation":
        fmt = lambda v: repr(v.score)
    lines = [f"start {g.start}"]
    lines += [f"dim {nt} {d}" for nt, d in g.dims.items()]
    for r in g.rules:
        values = ", ".join(fmt(v) for v in g.weights[r.id].data)
        lines.append(f"rule {r.lhs} -> {' '.join(r.rhs)} : [{values}]")
    return "\n".join(lines) + "\n"


# -- derivation trees ------------------------------------------------------------

@dataclass(frozen=True)
class Tree:
    """Grammar derivation tree ``<rule: children...>``, one child per rhs nonterminal."""

    rule: str
    children: tuple["Tree", ...] = ()

    def sexpr(self) -> str:
        parts = [self.rule] + [c.sexpr() for c in self.children]
        return "(" + " ".join(parts) + ")"

    def __str__(self) -> str:
        return self.sexpr()

    def nodes(self):
        """Preorder iteration over all subtrees."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def height(self) -> int:
        return 1 + max((c.height() for c in self.children), default=0)


def parse_sexpr(text: str) -> Tree:
    tokens = re.findall(r"\(|\)|[^\s()]+", text)
    pos = 0

    def parse():
        nonlocal pos
        if tokens[pos] != "(":
            raise ValueError(f"expected '(' at token {pos}")
        pos += 1
        rule = tokens[pos]
        pos += 1
        children = []
        while tokens[pos] != ")":
            children.append(parse())
        pos += 1
        return Tree(rule, tuple(children))

    tree = parse()
    if pos != len(tokens):
        raise ValueError("trailing tokens after tree")
    return tree


def check_tree(g: WeightedCFG, t: Tree) -> None:
    """Raise ValueError unless every child's rule rewrites the matching rhs nonterminal."""
    for node in t.nodes():
        expected = g.children(node.rule)
        if len(expected) != len(node.children):
            raise ValueError(f"rule {node.rule} needs {len(expected)} children, got {len(node.children)}")
        for sym, child in zip(expected, node.children):
            if g.rule(child.rule).lhs != sym:
                raise ValueError(f"child {child.rule} of {node.rule} does not rewrite {sym}")


def tree_yield(g: WeightedCFG, t: Tree) -> list[str]:
    out = []

    def walk(node):
        kids = iter(node.children)
        for sym in g.rule(node.rule).rhs:
            if sym in g.dims:
                walk(next(kids))
            else:
                out.append(sym)

    walk(t)
    return out


class Enumeration(NamedTuple):
    trees: list[Tree]
    truncated: bool


def _splits(i: int, j: int, parts: int):
    """Ways to cut [i, j) into ``parts`` non-empty consecutive pieces, leftmost first."""
    if parts == 1:
        yield ((i, j),)
        return
    for mid in range(i + 1, j - parts + 2):
        for rest in _splits(mid, j, parts - 1):
            yield ((i, mid),) + rest


def enumerate_derivations(g: WeightedCFG, sentence: Sequence[str], cap: int = 10_000) -> Enumeration:
    """All derivation trees of ``sentence`` rooted at the start symbol.

    Trees are grown by height; when unary cycles make the set infinite the
    result is cut at ``cap`` trees and flagged as truncated.
    """
    if not sentence:
        raise ValueError("sentence must be non-empty")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    words = tuple(sentence)
    n = len(words)
    memo: dict[tuple, tuple[tuple[Tree, ...], bool]] = {}

    def trees(sym: str, i: int, j: int, h: int):
        key = (sym, i, j, h)
        if key in memo:
            return memo[key]
        found: list[Tree] = []
        truncated = False
        if h >= 1:
            for rule in g.rules_for(sym):
                if len(rule.rhs) > j - i:
                    continue
                for pieces in _splits(i, j, len(rule.rhs)):
                    options = []
                    ok, cut_here = True, False
                    for x, (a, b) in zip(rule.rhs, pieces):
                        if x in g.dims:
                            sub, cut = trees(x, a, b, h - 1)
                            if not sub:
                                ok = False
                                break
                            cut_here |= cut
                            options.append(sub)
                        elif b - a != 1 or words[a] != x:
                            ok = False
                            break
                    if not ok:
                        continue
                    truncated |= cut_here
                    for combo in _product(options):
                        found.append(Tree(rule.id, combo))
                        if len(found) > cap:
                            truncated = True
                            break
                    if len(found) > cap:
                        break
                if len(found) > cap:
                    break
        result = (tuple(found[:cap + 1]), truncated)
        memo[key] = result
        return result

    bound = n * (len(g.dims) + 1)
    stall_limit = len(g.dims) + 1
    h, last_count, stall = 0, -1, 0
    while True:
        h += 1
        found, truncated = trees(g.start, 0, n, h)
        if len(found) > cap or truncated:
            return Enumeration(list(found[:cap]), True)
        stall = stall + 1 if len(found) == last_count else 0
        last_count = len(found)
        if h >= bound and stall >= stall_limit:
            return Enumeration(list(found), False)


def _product(options):
    if not options:
        yield ()
        return
    first, rest = options[0], options[1:]
    for head in first:
        for tail in _product(rest):
            yield (head,) + tail
