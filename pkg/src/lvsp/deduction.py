"""Item-based parsing: CKY instantiation with bucket-ordered inner values.

An inference instance concludes an item ``[i, A, j]`` from a grammar rule
(always the first antecedent, whose weight tensor acts as a function) and a
list of item antecedents (its arguments).  The inner value of an item is

    V(x) = (+) over instances  w(rule) (x) [V(a_2), ..., V(a_k)]

computed bucket by bucket.  Buckets are the strongly connected components of
the item dependency graph in topological order; a bucket whose items depend
on themselves is "looping" and is solved by generation-bounded iteration.

Positions are 0-based: the goal item for an ``n``-word sentence is
``[0, S, n]``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import networkx as nx

from .errors import (
    DescriptionMismatch,
    NonConvergenceWarning,
    SchedulingError,
    UnknownTerminal,
    UnsupportedOperation,
)
from .grammar import Tree, WeightedCFG
from .semiring import DEFAULT_TOLERANCE
from .tensor import Tensor, contract_list, format_values, tensor_add, zero_tensor

DEFAULT_MAX_GENERATIONS = 10_000


class Item(NamedTuple):
    start: int
    label: str
    end: int

    def __str__(self) -> str:
        return f"{self.start} {self.label} {self.end}"


def _item_key(x: Item):
    return (x.end - x.start, x.start, x.label)


@dataclass(frozen=True)
class InferenceInstance:
    """``rule a_2 ... a_k / conclusion``, optionally guarded by side-condition items."""

    conclusion: Item
    rule: str
    items: tuple[Item, ...] = ()
    side: tuple[Item, ...] = ()

    @property
    def antecedents(self) -> tuple:
        return (self.rule,) + self.items

    @classmethod
    def from_antecedents(cls, conclusion: Item, antecedents: Sequence, side: Sequence[Item] = ()):
        """Build from a raw antecedent list, enforcing rule-first normal form."""
        if not antecedents or not isinstance(antecedents[0], str):
            raise DescriptionMismatch(
                f"first antecedent of the instance concluding [{conclusion}] must be a grammar rule"
            )
        rest = tuple(antecedents[1:])
        for a in rest:
            if not isinstance(a, Item):
                raise DescriptionMismatch(
                    f"antecedent {a!r} of [{conclusion}] is not an item; only the first "
                    "antecedent may be a rule"
                )
        return cls(conclusion, antecedents[0], rest, tuple(side))

    def __str__(self) -> str:
        parts = [self.rule] + [f"[{a}]" for a in self.items]
        text = f"{' '.join(parts)} / [{self.conclusion}]"
        if self.side:
            text += " if " + " ".join(f"[{p}]" for p in self.side)
        return text


class Instantiation(NamedTuple):
    instances: list[InferenceInstance]
    goal: Item


def _check_terminals(g: WeightedCFG, sentence: Sequence[str]) -> None:
    for w in sentence:
        if w not in g.terminals:
            raise UnknownTerminal(f"unknown terminal {w!r}")


def instantiate_cky(
    g: WeightedCFG,
    sentence: Sequence[str],
    unary: bool = False,
    guard: Callable[[InferenceInstance], bool] | None = None,
) -> Instantiation:
    """Instances of the CKY description over ``sentence``.

    ``w(A -> w_i) / [i, A, i+1]`` and ``w(A -> B C) [i, B, k] [k, C, j] / [i, A, j]``;
    with ``unary=True`` also ``w(A -> B) [i, B, j] / [i, A, j]``.  Only instances
    whose antecedent items are themselves derivable are produced.
    """
    for r in g.rules:
        kids = g.children(r)
        if len(r.rhs) == 1 and not kids:
            continue
        if len(r.rhs) == 2 and len(kids) == 2:
            continue
        if unary and len(r.rhs) == 1 and len(kids) == 1:
            continue
        form = "A -> a, A -> B C" + (", A -> B" if unary else "")
        raise DescriptionMismatch(f"rule {r.id} ({r}) is not of the form {form}")
    if not sentence:
        raise ValueError("sentence must be non-empty")
    _check_terminals(g, sentence)

    n = len(sentence)
    lexical, binary, unaries = [], [], []
    for r in g.rules:
        kids = g.children(r)
        if not kids:
            lexical.append(r)
        elif len(kids) == 2:
            binary.append(r)
        else:
            unaries.append(r)

    instances: list[InferenceInstance] = []
    derivable: set[Item] = set()

    def emit(inst):
        if guard is not None and not guard(inst):
            return
        instances.append(inst)
        derivable.add(inst.conclusion)

    def close_unary(i, j):
        # every unary instance over derivable items, cycles included
        done: set[tuple[str, str]] = set()
        changed = True
        while changed:
            changed = False
            for r in unaries:
                child = Item(i, r.rhs[0], j)
                if child in derivable and (r.id, child) not in done:
                    done.add((r.id, child))
                    emit(InferenceInstance(Item(i, r.lhs, j), r.id, (child,)))
                    changed = True

    for i, word in enumerate(sentence):
        for r in lexical:
            if r.rhs[0] == word:
                emit(InferenceInstance(Item(i, r.lhs, i + 1), r.id))
        if unary:
            close_unary(i, i + 1)
    for length in range(2, n + 1):
        for i in range(n - length + 1):
            j = i + length
            for k in range(i + 1, j):
                for r in binary:
                    left, right = Item(i, r.rhs[0], k), Item(k, r.rhs[1], j)
                    if left in derivable and right in derivable:
                        emit(InferenceInstance(Item(i, r.lhs, j), r.id, (left, right)))
            if unary:
                close_unary(i, j)
    return Instantiation(instances, Item(0, g.start, n))


def _has_unary(g: WeightedCFG) -> bool:
    return any(len(r.rhs) == 1 and g.children(r) for r in g.rules)


DESCRIPTIONS = {
    "cky": lambda g, sentence: instantiate_cky(g, sentence, unary=False),
    "cky-unary": lambda g, sentence: instantiate_cky(g, sentence, unary=True),
}


def instantiate(description: str, g: WeightedCFG, sentence: Sequence[str]) -> Instantiation:
    if description == "auto":
        description = "cky-unary" if _has_unary(g) else "cky"
    try:
        build = DESCRIPTIONS[description]
    except KeyError:
        raise DescriptionMismatch(
            f"unknown description {description!r}; choose from auto, {', '.join(DESCRIPTIONS)}"
        ) from None
    return build(g, sentence)


def validate_instances(instances: Iterable[InferenceInstance], g: WeightedCFG) -> None:
    """Check rule-first normal form and that every side condition is derivable."""
    instances = list(instances)
    concluded = {inst.conclusion for inst in instances}
    for inst in instances:
        InferenceInstance.from_antecedents(inst.conclusion, inst.antecedents, inst.side)
        if inst.rule not in {r.id for r in g.rules}:
            raise DescriptionMismatch(f"instance {inst} names an unknown rule")
        for p in inst.side:
            if p not in concluded:
                raise DescriptionMismatch(f"side condition [{p}] of {inst} is never derived")


# -- buckets -------------------------------------------------------------------

class Bucket(NamedTuple):
    items: tuple[Item, ...]
    looping: bool


def bucket_order(instances: Iterable[InferenceInstance]) -> list[Bucket]:
    """Strongly connected components of the item graph, dependencies first."""
    graph = nx.DiGraph()
    for inst in instances:
        graph.add_node(inst.conclusion)
        for a in inst.items:
            graph.add_edge(a, inst.conclusion)
    cond = nx.condensation(graph)
    members = {c: tuple(sorted(cond.nodes[c]["members"], key=_item_key)) for c in cond.nodes}
    order = nx.lexicographical_topological_sort(cond, key=lambda c: _item_key(members[c][0]))
    buckets = []
    for c in order:
        items = members[c]
        looping = len(items) > 1 or graph.has_edge(items[0], items[0])
        buckets.append(Bucket(items, looping))
    return buckets


# -- charts ----------------------------------------------------------------------

@dataclass
class LoopResult:
    values: dict[Item, Tensor]
    generations: int
    converged: bool
    history: list[dict[Item, Tensor]] | None = None


@dataclass
class Chart:
    grammar: WeightedCFG
    sentence: tuple[str, ...]
    instances: list[InferenceInstance]
    goal: Item
    buckets: list[Bucket]
    values: dict[Item, Tensor] = field(default_factory=dict)
    outer: dict[Item, Tensor] = field(default_factory=dict)
    # bucket index -> generations used by the looping solver
    generations: dict[int, int] = field(default_factory=dict)
    outer_generations: dict[int, int] = field(default_factory=dict)
    converged: bool = True

    def __post_init__(self):
        self.by_conclusion: dict[Item, list[InferenceInstance]] = {}
        self.uses: dict[Item, list[tuple[InferenceInstance, int]]] = {}
        for inst in self.instances:
            self.by_conclusion.setdefault(inst.conclusion, []).append(inst)
            for pos, a in enumerate(inst.items):
                self.uses.setdefault(a, []).append((inst, pos))
        self.bucket_of = {x: b for b, bucket in enumerate(self.buckets) for x in bucket.items}

    @property
    def semiring(self):
        return self.grammar.semiring

    @property
    def items(self) -> list[Item]:
        return [x for bucket in self.buckets for x in bucket.items]

    def item_shape(self, x: Item) -> tuple[int, ...]:
        return (self.grammar.dims[x.label],)

    def goal_value(self) -> Tensor:
        return self.values.get(self.goal, zero_tensor(self.semiring, self.item_shape(self.goal)))


def build_chart(g: WeightedCFG, sentence: Sequence[str], description: str = "auto") -> Chart:
    """Instantiate and schedule, without computing any values yet."""
    instances, goal = instantiate(description, g, sentence)
    return Chart(g, tuple(sentence), instances, goal, bucket_order(instances))


def _instance_value(chart: Chart, inst: InferenceInstance, lookup) -> Tensor:
    args = [lookup(a) for a in inst.items]
    return contract_list(chart.grammar.weight(inst.rule), args)


def _sum(chart: Chart, x: Item, terms) -> Tensor:
    total = zero_tensor(chart.semiring, chart.item_shape(x))
    for term in terms:
        total = tensor_add(total, term)
    return total


def _computed(chart: Chart, a: Item) -> Tensor:
    try:
        return chart.values[a]
    except KeyError:
        raise SchedulingError(f"value of [{a}] read before it was computed") from None


def inner_value(chart: Chart, x: Item) -> Tensor:
    """Inner value of an item in a non-looping bucket; stored in the chart."""
    if chart.buckets[chart.bucket_of[x]].looping:
        raise SchedulingError(f"[{x}] is in a looping bucket; use inner_value_looping")
    value = _sum(
        chart, x,
        (_instance_value(chart, inst, lambda a: _computed(chart, a))
         for inst in chart.by_conclusion.get(x, ())),
    )
    chart.values[x] = value
    return value


def _tensors_equal(chart: Chart, a: Tensor, b: Tensor, tolerance: float) -> bool:
    eq = chart.semiring.equal
    return all(eq(p, q, tolerance) for p, q in zip(a.data, b.data))


def inner_value_looping(
    chart: Chart,
    bucket: Iterable[Item],
    max_generations: int = DEFAULT_MAX_GENERATIONS,
    tolerance: float = DEFAULT_TOLERANCE,
    trace: bool = False,
) -> LoopResult:
    """Generation-bounded inner values for the items of one looping bucket.

    Generation ``g`` uses the generation ``g - 1`` values for items inside the
    bucket and the final values for items outside it, starting from zeros.
    Iteration stops once two successive generations agree.
    """
    s = chart.semiring
    if not s.is_omega_continuous:
        raise UnsupportedOperation(
            f"looping buckets need an omega-continuous semiring; {s.name} is not"
        )
    members = tuple(bucket)
    inside = set(members)
    prev = {x: zero_tensor(s, chart.item_shape(x)) for x in members}
    history = [prev] if trace else None
    converged = False
    generation = 0
    # without an edge inside the bucket one generation is already exact
    limit = max_generations if _self_dependent(chart, members) else 1
    while generation < limit:
        generation += 1

        def lookup(a):
            return prev[a] if a in inside else _computed(chart, a)

        cur = {
            x: _sum(chart, x, (_instance_value(chart, inst, lookup)
                               for inst in chart.by_conclusion.get(x, ())))
            for x in members
        }
        if trace:
            history.append(cur)
        done = limit == 1 or all(
            _tensors_equal(chart, prev[x], cur[x], tolerance) for x in members
        )
        prev = cur
        if done:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"looping bucket of {len(members)} items did not converge in "
            f"{max_generations} generations",
            NonConvergenceWarning,
            stacklevel=2,
        )
        chart.converged = False
    chart.values.update(prev)
    return LoopResult(prev, generation, converged, history)


def _self_dependent(chart: Chart, members) -> bool:
    inside = set(members)
    return any(
        a in inside
        for x in members
        for inst in chart.by_conclusion.get(x, ())
        for a in inst.items
    )


def compute_inside(
    chart: Chart,
    max_generations: int = DEFAULT_MAX_GENERATIONS,
    tolerance: float = DEFAULT_TOLERANCE,
) -> Chart:
    for b, bucket in enumerate(chart.buckets):
        if bucket.looping:
            result = inner_value_looping(chart, bucket.items, max_generations, tolerance)
            chart.generations[b] = result.generations
        else:
            inner_value(chart, bucket.items[0])
    return chart


def parse(
    g: WeightedCFG,
    sentence: Sequence[str],
    description: str = "auto",
    max_generations: int = DEFAULT_MAX_GENERATIONS,
    tolerance: float = DEFAULT_TOLERANCE,
) -> Chart:
    """Build the chart for ``sentence`` and fill in every inner value."""
    return compute_inside(build_chart(g, sentence, description), max_generations, tolerance)


def sentence_value(
    g: WeightedCFG,
    description: str,
    sentence: Sequence[str],
    max_generations: int = DEFAULT_MAX_GENERATIONS,
    tolerance: float = DEFAULT_TOLERANCE,
) -> Tensor:
    """Inner value of the goal item; the zero vector when the goal is underivable."""
    return parse(g, sentence, description, max_generations, tolerance).goal_value()


# -- item derivation trees ---------------------------------------------------------

@dataclass(frozen=True)
class ItemTree:
    """``<conclusion: rule, D_2, ..., D_k>``; the rule leaf is kept as a plain id."""

    item: Item
    rule: str
    children: tuple["ItemTree", ...] = ()


def enumerate_item_derivations(chart: Chart, x: Item | None = None, cap: int = 100_000) -> list[ItemTree]:
    """Every item derivation tree headed by ``x`` (default: the goal).

    Only meaningful for charts without looping buckets; raises ValueError
    when more than ``cap`` trees exist.
    """
    if any(b.looping for b in chart.buckets):
        raise ValueError("item derivations are infinite in charts with looping buckets")
    memo: dict[Item, list[ItemTree]] = {}

    def trees(item):
        if item in memo:
            return memo[item]
        out = []
        for inst in chart.by_conclusion.get(item, ()):
            combos = [[]]
            for a in inst.items:
                combos = [c + [t] for c in combos for t in trees(a)]
                if len(combos) > cap:
                    raise ValueError(f"more than {cap} item derivations")
            out.extend(ItemTree(item, inst.rule, tuple(c)) for c in combos)
        memo[item] = out
        return out

    return trees(chart.goal if x is None else x)


def to_grammar_tree(t: ItemTree) -> Tree:
    """The grammar derivation corresponding to an item derivation."""
    return Tree(t.rule, tuple(to_grammar_tree(c) for c in t.children))


def item_tree_value(chart: Chart, t: ItemTree) -> Tensor:
    args = [item_tree_value(chart, c) for c in t.children]
    return contract_list(chart.grammar.weight(t.rule), args)


# -- reporting ---------------------------------------------------------------------

def format_chart(chart: Chart, values: dict[Item, Tensor] | None = None, generations=None) -> str:
    """One ``i NT j : [values]`` line per item, buckets separated by ``---``."""
    values = chart.values if values is None else values
    generations = chart.generations if generations is None else generations
    blocks = []
    for b, bucket in enumerate(chart.buckets):
        lines = []
        suffix = f"  (loop, g={generations.get(b, 0)})" if bucket.looping else ""
        for x in bucket.items:
            shown = format_values(values[x]) if x in values else "unset"
            lines.append(f"{x} : {shown}{suffix}")
        blocks.append("\n".join(lines))
    return "\n---\n".join(blocks)
