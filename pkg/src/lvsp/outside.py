"""Outer values of chart items and the expected rule counts built on them.

The outer value of an item ``x`` has shape ``shape(V(x)) ++ [dim(S)]``; the
goal's outer value starts from the ``dim(S) x dim(S)`` identity, and for every
instance ``w a_2 ... a_n / b`` using ``x`` as its antecedent at position ``k``

    Z(x) (+)= ( w (x)_k [I, V(a_{k+1}), ..., V(a_n)] )^pi
              (x) [V(a_2), ..., V(a_{k-1})]  (x)*  Z(b)

where ``I`` is the identity on ``shape(V(x)) ++ [dim(S)]`` and ``pi`` moves
the ranks introduced by ``I`` past the trailing ranks so that the final
contraction against ``Z(b)`` lines up.  The inner product ``V(x) (x)* Z(x)``
then equals the sum over complete derivations of ``V(D)`` times the number
of times ``x`` occurs in ``D``.

Only commutative semirings are supported.
"""
from __future__ import annotations

import warnings
from typing import Iterable, Sequence

from .deduction import (
    DEFAULT_MAX_GENERATIONS,
    Chart,
    Item,
    _tensors_equal,
)
from .derivation import tree_value
from .errors import NonConvergenceWarning, SchedulingError, UndefinedPosterior, UnsupportedOperation
from .grammar import Tree, WeightedCFG
from .semiring import DEFAULT_TOLERANCE, Semiring
from .tensor import (
    Tensor,
    contract_list,
    contract_star,
    identity_tensor,
    permute,
    tensor_add,
    zero_tensor,
)


def build_pi(k: int, rank_tk: int, total_rank: int) -> tuple[int, ...]:
    """Permutation applied after contracting the identity into rank ``k``.

    ``k`` is the 1-based rank of the first antecedent's tensor that the removed
    item occupied, ``rank_tk`` the rank of the removed item's value and
    ``total_rank`` the rank of the tensor being permuted.  Before permuting,
    the ranks are laid out as

        e_1..e_{k-1}, d_2..d_r, s, e^, d^_2..d^_r, s^, t_1..t_m

    (``e`` ranks still to meet the earlier siblings, ``d`` the removed value's
    trailing dims, ``s`` the start dimension, hatted ranks the second half of
    the identity, ``t`` everything after).  Afterwards they read

        e_1..e_{k-1}, d_2..d_r, t_1..t_m, s, e^, d^_2..d^_r, s^
    """
    if k < 1 or rank_tk < 1:
        raise AssertionError(f"invalid permutation request k={k}, rank={rank_tk}")
    before = [("e", q) for q in range(k - 1)]
    before += [("d", q) for q in range(rank_tk - 1)]
    block = [("s",), ("e^",)] + [("d^", q) for q in range(rank_tk - 1)] + [("s^",)]
    trailing = total_rank - len(before) - len(block)
    if trailing < 0:
        raise AssertionError(
            f"rank bookkeeping failed: k={k}, rank={rank_tk}, total={total_rank}"
        )
    tail = [("t", q) for q in range(trailing)]
    source = before + block + tail
    target = before + tail + block
    where = {label: pos for pos, label in enumerate(target, start=1)}
    pi = tuple(where[label] for label in source)

    # the result is the block rotation [1..i, j+1..n, i+1..j]
    i, j = len(before), len(before) + trailing
    assert pi == rotation_pi(i, j, total_rank), (pi, i, j)
    return pi


def rotation_pi(i: int, j: int, n: int) -> tuple[int, ...]:
    """``[1, ..., i, j+1, ..., n, i+1, ..., j]``."""
    return tuple(range(1, i + 1)) + tuple(range(j + 1, n + 1)) + tuple(range(i + 1, j + 1))


def outside_term(
    weight: Tensor,
    values: Sequence[Tensor | None],
    hole_shape: Sequence[int],
    parent_outer: Tensor,
    start_dim: int,
) -> Tensor:
    """One instance's contribution to the outer value of its removed antecedent.

    ``values`` are the item values of antecedents 2..n with ``None`` at the
    position of the removed item.
    """
    holes = [p for p, v in enumerate(values) if v is None]
    if len(holes) != 1:
        raise ValueError("exactly one antecedent must be removed")
    pos = holes[0]
    s = weight.semiring
    ident = identity_tensor(s, tuple(hole_shape) + (start_dim,))
    after = [ident] + list(values[pos + 1:])
    acc = contract_list(weight, after, start=pos + 1)
    acc = permute(acc, build_pi(pos + 1, len(hole_shape), acc.rank))
    acc = contract_list(acc, list(values[:pos]))
    return contract_star(acc, parent_outer)


def _require_commutative(s: Semiring) -> None:
    if not s.is_commutative:
        raise UnsupportedOperation(
            f"outer values need a commutative semiring; {s.name} is not "
            "(the non-commutative construction is out of scope)"
        )


def _start_dim(chart: Chart) -> int:
    return chart.grammar.dims[chart.grammar.start]


def _outer_shape(chart: Chart, x: Item) -> tuple[int, ...]:
    return chart.item_shape(x) + (_start_dim(chart),)


def _inner(chart: Chart, a: Item) -> Tensor:
    try:
        return chart.values[a]
    except KeyError:
        raise SchedulingError(f"inner value of [{a}] is missing") from None


def _outer_sum(chart: Chart, x: Item, parent_outer) -> Tensor:
    s = chart.semiring
    d_s = _start_dim(chart)
    total = zero_tensor(s, _outer_shape(chart, x))
    if x == chart.goal:
        total = tensor_add(total, identity_tensor(s, (d_s,)))
    for inst, pos in chart.uses.get(x, ()):
        values = [None if p == pos else _inner(chart, a) for p, a in enumerate(inst.items)]
        term = outside_term(
            chart.grammar.weight(inst.rule), values, chart.item_shape(x),
            parent_outer(inst.conclusion), d_s,
        )
        total = tensor_add(total, term)
    return total


def outer_value(chart: Chart, x: Item) -> Tensor:
    """Outer value of an item in a non-looping bucket; stored in the chart."""
    _require_commutative(chart.semiring)
    if chart.buckets[chart.bucket_of[x]].looping:
        raise SchedulingError(f"[{x}] is in a looping bucket; use outer_value_looping")

    def parent_outer(b):
        try:
            return chart.outer[b]
        except KeyError:
            raise SchedulingError(f"outer value of [{b}] read before it was computed") from None

    value = _outer_sum(chart, x, parent_outer)
    assert value.shape == _outer_shape(chart, x)
    chart.outer[x] = value
    return value


def outer_value_looping(
    chart: Chart,
    bucket: Iterable[Item],
    max_generations: int = DEFAULT_MAX_GENERATIONS,
    tolerance: float = DEFAULT_TOLERANCE,
) -> tuple[dict[Item, Tensor], int, bool]:
    """Generation-bounded outer values for one bucket (looping or not).

    Returns ``(values, generations, converged)`` and stores the values.
    """
    s = chart.semiring
    _require_commutative(s)
    if not s.is_omega_continuous:
        raise UnsupportedOperation(
            f"looping buckets need an omega-continuous semiring; {s.name} is not"
        )
    members = tuple(bucket)
    inside = set(members)
    prev = {x: zero_tensor(s, _outer_shape(chart, x)) for x in members}
    converged, generation = False, 0
    # parents outside the bucket are final, so without an internal edge
    # a single generation is exact
    cyclic = any(inst.conclusion in inside for x in members for inst, _ in chart.uses.get(x, ()))
    limit = max_generations if cyclic else 1
    while generation < limit:
        generation += 1

        def parent_outer(b):
            if b in inside:
                return prev[b]
            try:
                return chart.outer[b]
            except KeyError:
                raise SchedulingError(f"outer value of [{b}] read before it was computed") from None

        cur = {x: _outer_sum(chart, x, parent_outer) for x in members}
        done = limit == 1 or all(
            _tensors_equal(chart, prev[x], cur[x], tolerance) for x in members
        )
        prev = cur
        if done:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"outer values of a looping bucket of {len(members)} items did not converge "
            f"in {max_generations} generations",
            NonConvergenceWarning,
            stacklevel=2,
        )
        chart.converged = False
    chart.outer.update(prev)
    return prev, generation, converged


def compute_outside(
    chart: Chart,
    max_generations: int = DEFAULT_MAX_GENERATIONS,
    tolerance: float = DEFAULT_TOLERANCE,
) -> Chart:
    """Fill in every outer value, parents before children."""
    _require_commutative(chart.semiring)
    for b in range(len(chart.buckets) - 1, -1, -1):
        bucket = chart.buckets[b]
        if bucket.looping:
            _, generations, _ = outer_value_looping(chart, bucket.items, max_generations, tolerance)
            chart.outer_generations[b] = generations
        else:
            outer_value(chart, bucket.items[0])
    return chart


def inside_outside_product(chart: Chart, x: Item) -> Tensor:
    """``V(x) (x)* Z(x)``, a vector over the start symbol's dimension."""
    return contract_star(chart.values[x], chart.outer[x])


# -- outer trees ---------------------------------------------------------------------

def _subtree(t: Tree, path: Sequence[int]) -> Tree:
    for p in path:
        t = t.children[p]
    return t


def outer_tree_value(g: WeightedCFG, tree: Tree, path: Sequence[int]) -> Tensor:
    """Value of the outer tree left after removing the node at ``path``.

    ``path`` lists child indices from the root.  Computed recursively from the
    sibling subtrees' tree values, independently of any chart.
    """
    _require_commutative(g.semiring)
    d_s = g.dims[g.start]
    if not path:
        return identity_tensor(g.semiring, (d_s,))
    parent = _subtree(tree, path[:-1])
    pos = path[-1]
    values = [None if p == pos else tree_value(g, c) for p, c in enumerate(parent.children)]
    hole_shape = (g.dims[g.rule(parent.children[pos].rule).lhs],)
    return outside_term(
        g.weight(parent.rule), values, hole_shape, outer_tree_value(g, tree, path[:-1]), d_s
    )


def split_check(g: WeightedCFG, tree: Tree, path: Sequence[int], tolerance: float = DEFAULT_TOLERANCE) -> bool:
    """Whether ``V(D) == V(T) (x)* Z(O)`` for the split of ``tree`` at ``path``."""
    whole = tree_value(g, tree)
    inner = tree_value(g, _subtree(tree, path))
    split = contract_star(inner, outer_tree_value(g, tree, path))
    return whole.allclose(split, tolerance)


def tree_paths(t: Tree, prefix: tuple[int, ...] = ()):
    """Every node path of ``t``, preorder."""
    yield prefix
    for p, c in enumerate(t.children):
        yield from tree_paths(c, prefix + (p,))


# -- expected counts ----------------------------------------------------------------

def sentence_probability(chart: Chart) -> float:
    """Goal value summed over the start symbol's latent states."""
    return sum(chart.goal_value().data)


def expected_rule_counts(chart: Chart) -> dict[str, float]:
    """Posterior expected number of uses of each rule in a parse of the sentence.

    The goal's inner value is a vector over the start symbol's latent states;
    the sentence probability is its plain sum, i.e. the root distribution is
    assumed to be folded into the rule weights already.  Needs inner and outer
    values in the chart.
    """
    s = chart.semiring
    if s.name != "probability":
        raise UnsupportedOperation("expected counts are defined for the probability semiring only")
    total = sentence_probability(chart)
    if not total > 0:
        raise UndefinedPosterior("sentence has zero probability; posterior undefined")
    counts = {r.id: 0.0 for r in chart.grammar.rules}
    for inst in chart.instances:
        if inst.conclusion not in chart.outer:
            continue
        args = [_inner(chart, a) for a in inst.items]
        use = contract_list(chart.grammar.weight(inst.rule), args)
        mass = contract_star(use, chart.outer[inst.conclusion])
        counts[inst.rule] += sum(mass.data) / total
    return counts
