"""Values of grammar derivation trees and derivation strings."""
from __future__ import annotations

from typing import Sequence

from .errors import PartialOperationError
from .grammar import Tree, WeightedCFG, enumerate_derivations
from .tensor import Tensor, contract, contract_list, tensor_add, zero_tensor

DerivationString = tuple  # rule ids in depth-first, left-to-right order


def tree_value(g: WeightedCFG, t: Tree) -> Tensor:
    """``w(r) (x) [V(T_1), ..., V(T_k)]`` evaluated bottom-up without recursion."""
    values: dict[int, Tensor] = {}
    stack = [(t, False)]
    while stack:
        node, expanded = stack.pop()
        if not expanded:
            stack.append((node, True))
            stack.extend((c, False) for c in node.children)
            continue
        args = [values.pop(id(c)) for c in node.children]
        values[id(node)] = contract_list(g.weight(node.rule), args)
    return values[id(t)]


def flatten(t: Tree) -> DerivationString:
    return tuple(node.rule for node in t.nodes())


def unflatten(g: WeightedCFG, rules: Sequence[str]) -> Tree:
    """Rebuild the tree of a derivation string, checking that it is a leftmost derivation."""
    rules = list(rules)
    if not rules:
        raise ValueError("empty derivation string")
    pos = 0

    def build(expected_lhs):
        nonlocal pos
        if pos >= len(rules):
            raise ValueError("derivation string ends with open nonterminals")
        rule = g.rule(rules[pos])
        if expected_lhs is not None and rule.lhs != expected_lhs:
            raise ValueError(f"rule {rule.id} does not rewrite {expected_lhs}")
        pos += 1
        return Tree(rule.id, tuple(build(sym) for sym in g.children(rule)))

    tree = build(None)
    if pos != len(rules):
        raise ValueError("derivation string has rules left over")
    return tree


def string_value(g: WeightedCFG, rules: Sequence[str]) -> Tensor:
    """Left-to-right product of rule weights along a derivation string.

    The running value keeps one rank per still-open nonterminal (leftmost
    first) plus the root's rank last.  Each new rule rewrites the leftmost
    open nonterminal, so its lhs rank (the last one) is contracted against
    the first rank of the running value and its children take that place.
    """
    rules = list(rules)
    if not rules:
        raise ValueError("empty derivation string")
    acc = g.weight(rules[0])
    for rule_id in rules[1:]:
        if acc.rank < 2:
            raise PartialOperationError(f"no open nonterminal left for rule {rule_id}")
        w = g.weight(rule_id)
        acc = contract(acc, 1, w, w.rank)
    return acc


def tree_spans(g: WeightedCFG, t: Tree, start: int = 0) -> list[tuple[int, str, int]]:
    """``(i, lhs, j)`` for every node, preorder; positions are 0-based."""
    out: list[tuple[int, str, int]] = []

    def walk(node, i):
        slot = len(out)
        out.append(None)
        j = i
        kids = iter(node.children)
        for sym in g.rule(node.rule).rhs:
            j = walk(next(kids), j) if sym in g.dims else j + 1
        out[slot] = (i, g.rule(node.rule).lhs, j)
        return j

    walk(t, start)
    return out


def sentence_value_oracle(g: WeightedCFG, sentence: Sequence[str], cap: int = 100_000) -> Tensor:
    """Sum of tree values over every derivation of ``sentence`` (brute force)."""
    result = enumerate_derivations(g, sentence, cap)
    if result.truncated:
        raise ValueError(f"more than {cap} derivations; the oracle needs a finite, capped set")
    total = zero_tensor(g.semiring, (g.dims[g.start],))
    for t in result.trees:
        total = tensor_add(total, tree_value(g, t))
    return total
