"""Dense tensors over a semiring and the partial-semiring operations on them.

Tensors are stored row-major in a flat tuple.  Rank indices passed to the
contraction functions are 1-based, matching the usual mathematical notation
``A (x)_[k;l] B``; everything else is 0-based Python.

Contraction order: contracting rank ``k`` of ``a`` with rank ``l`` of ``b``
yields the ranks

    a[:k-1] ++ b[:l-1] ++ b[l:] ++ a[k:]

i.e. the uncontracted ranks of ``b`` are spliced in where the contracted rank
of ``a`` was.
"""
from __future__ import annotations

import itertools
import math
from typing import Any, Iterable, Sequence

from .errors import PartialOperationError
from .semiring import DEFAULT_TOLERANCE, Semiring


def _size(shape: Sequence[int]) -> int:
    return math.prod(shape)


def _strides(shape: Sequence[int]) -> tuple[int, ...]:
    strides = [1] * len(shape)
    for i in range(len(shape) - 2, -1, -1):
        strides[i] = strides[i + 1] * shape[i + 1]
    return tuple(strides)


class Tensor:
    """An immutable rank-n array of semiring values."""

    __slots__ = ("semiring", "shape", "data")

    def __init__(self, semiring: Semiring, shape: Iterable[int], data: Iterable[Any]):
        shape = tuple(int(d) for d in shape)
        data = tuple(data)
        if any(d < 1 for d in shape):
            raise ValueError(f"tensor dimensions must be positive, got {shape}")
        if len(data) != _size(shape):
            raise ValueError(
                f"shape {list(shape)} needs {_size(shape)} values, got {len(data)}"
            )
        object.__setattr__(self, "semiring", semiring)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "data", data)

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    @classmethod
    def scalar(cls, semiring: Semiring, value) -> "Tensor":
        return cls(semiring, (), (value,))

    @classmethod
    def vector(cls, semiring: Semiring, values: Sequence) -> "Tensor":
        return cls(semiring, (len(values),), values)

    @classmethod
    def from_nested(cls, semiring: Semiring, nested) -> "Tensor":
        """Build from nested lists, e.g. ``[[1, 2], [3, 4]]``."""
        shape = []
        probe = nested
        while isinstance(probe, (list, tuple)):
            shape.append(len(probe))
            probe = probe[0]
        flat = []

        def walk(node, depth):
            if depth == len(shape):
                flat.append(node)
                return
            if not isinstance(node, (list, tuple)) or len(node) != shape[depth]:
                raise ValueError("ragged nested list")
            for child in node:
                walk(child, depth + 1)

        walk(nested, 0)
        return cls(semiring, shape, flat)

    @property
    def rank(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return len(self.data)

    def __getitem__(self, index) -> Any:
        if not isinstance(index, tuple):
            index = (index,)
        if len(index) != self.rank:
            raise IndexError(f"expected {self.rank} indices, got {len(index)}")
        offset = 0
        for i, d, s in zip(index, self.shape, _strides(self.shape)):
            if not 0 <= i < d:
                raise IndexError(f"index {index} out of range for shape {self.shape}")
            offset += i * s
        return self.data[offset]

    def item(self):
        if self.size != 1:
            raise ValueError(f"tensor of shape {list(self.shape)} is not a single value")
        return self.data[0]

    def tolist(self):
        if self.rank == 0:
            return self.data[0]

        def build(offset, depth):
            if depth == self.rank - 1:
                return list(self.data[offset:offset + self.shape[depth]])
            step = _size(self.shape[depth + 1:])
            return [build(offset + i * step, depth + 1) for i in range(self.shape[depth])]

        return build(0, 0)

    def map(self, fn) -> "Tensor":
        return Tensor(self.semiring, self.shape, (fn(v) for v in self.data))

    def allclose(self, other: "Tensor", tolerance: float = DEFAULT_TOLERANCE) -> bool:
        if self.shape != other.shape:
            return False
        eq = self.semiring.approx_eq
        return all(eq(x, y, tolerance) for x, y in zip(self.data, other.data))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tensor):
            return NotImplemented
        return (
            self.semiring.name == other.semiring.name
            and self.shape == other.shape
            and self.data == other.data
        )

    def __hash__(self) -> int:
        return hash((self.semiring.name, self.shape, self.data))

    def __repr__(self) -> str:
        return f"Tensor({self.semiring.name}, shape={list(self.shape)}, data={format_values(self)})"


def format_values(t: Tensor) -> str:
    """Flat row-major literal, e.g. ``[0.5, 0.5]``."""
    fmt = t.semiring.format_value
    return "[" + ", ".join(fmt(v) for v in t.data) + "]"


def _same_semiring(a: Tensor, b: Tensor) -> Semiring:
    if a.semiring.name != b.semiring.name:
        raise PartialOperationError(
            f"tensors over different semirings: {a.semiring.name} and {b.semiring.name}"
        )
    return a.semiring


def zero_tensor(semiring: Semiring, shape: Iterable[int]) -> Tensor:
    shape = tuple(shape)
    return Tensor(semiring, shape, [semiring.zero] * _size(shape))


def identity_tensor(semiring: Semiring, dims: Iterable[int]) -> Tensor:
    """Rank-2r identity: one where the first r indices equal the last r."""
    dims = tuple(dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"identity dimensions must be positive, got {list(dims)}")
    n = _size(dims)
    # in row-major order the pair (p, q) of flattened halves sits at p * n + q
    data = [semiring.zero] * (n * n)
    for p in range(n):
        data[p * n + p] = semiring.one
    return Tensor(semiring, dims + dims, data)


def tensor_add(a: Tensor, b: Tensor) -> Tensor:
    s = _same_semiring(a, b)
    if a.shape != b.shape:
        raise PartialOperationError(
            f"cannot add tensors of shapes {list(a.shape)} and {list(b.shape)}"
        )
    add = s.add
    return Tensor(s, a.shape, [add(x, y) for x, y in zip(a.data, b.data)])


def contract_multi(a: Tensor, k: int, b: Tensor, l: int, r: int) -> Tensor:
    """Contract ranks k..k+r-1 of ``a`` with ranks l..l+r-1 of ``b``."""
    s = _same_semiring(a, b)
    if r < 1:
        raise PartialOperationError(f"must contract at least one rank, got r={r}")
    if not (1 <= k and k + r - 1 <= a.rank):
        raise PartialOperationError(
            f"ranks {k}..{k + r - 1} do not exist in a tensor of rank {a.rank}"
        )
    if not (1 <= l and l + r - 1 <= b.rank):
        raise PartialOperationError(
            f"ranks {l}..{l + r - 1} do not exist in a tensor of rank {b.rank}"
        )
    ca = a.shape[k - 1:k - 1 + r]
    cb = b.shape[l - 1:l - 1 + r]
    if ca != cb:
        raise PartialOperationError(
            f"cannot contract dims {list(ca)} of {list(a.shape)} "
            f"with dims {list(cb)} of {list(b.shape)}"
        )
    pa, qa = a.shape[:k - 1], a.shape[k - 1 + r:]
    pb, qb = b.shape[:l - 1], b.shape[l - 1 + r:]
    PA, C, QA = _size(pa), _size(ca), _size(qa)
    PB, QB = _size(pb), _size(qb)

    add, mul, zero = s.add, s.mul, s.zero
    ad, bd = a.data, b.data
    out = []
    # the contracted block is consecutive in both operands, so each operand
    # is viewed as a 3-block (prefix, contracted, suffix) array
    for ia in range(PA):
        a_base = ia * C * QA
        for ib in range(PB):
            b_base = ib * C * QB
            for jb in range(QB):
                for ja in range(QA):
                    acc = zero
                    for c in range(C):
                        acc = add(acc, mul(ad[a_base + c * QA + ja], bd[b_base + c * QB + jb]))
                    out.append(acc)
    return Tensor(s, pa + pb + qb + qa, out)


def contract(a: Tensor, k: int, b: Tensor, l: int) -> Tensor:
    """``a (x)_[k;l] b``: contract rank k of ``a`` with rank l of ``b``."""
    return contract_multi(a, k, b, l, 1)


def contract_star(a: Tensor, b: Tensor) -> Tensor:
    """Contract as many leading ranks as the lower-rank operand has."""
    return contract_multi(a, 1, b, 1, min(a.rank, b.rank))


def contract_list(x: Tensor, args: Sequence[Tensor], start: int = 1) -> Tensor:
    """``x (x) [A_1, ..., A_n]``: rank ``start + i - 1`` of ``x`` against rank 1 of ``A_i``.

    Equivalent to ``x (x)_n A_n (x)_{n-1} ... (x)_1 A_1`` in a commutative
    semiring.  Each entry is accumulated as ``x * A_1 * ... * A_n`` so that for
    non-commutative semirings the factors come out in argument order.
    """
    if not args:
        return x
    s = x.semiring
    for arg in args:
        _same_semiring(x, arg)
    n = len(args)
    lo = start - 1
    if start < 1 or lo + n > x.rank:
        raise PartialOperationError(
            f"cannot contract {n} arguments from rank {start} of a rank-{x.rank} tensor"
        )
    for i, arg in enumerate(args):
        if arg.rank < 1 or arg.shape[0] != x.shape[lo + i]:
            raise PartialOperationError(
                f"argument {i + 1} of shape {list(arg.shape)} does not match rank "
                f"{lo + i + 1} (dim {x.shape[lo + i]}) of {list(x.shape)}"
            )

    pre, post = x.shape[:lo], x.shape[lo + n:]
    subs = [arg.shape[1:] for arg in args]
    contracted = x.shape[lo:lo + n]
    out_shape = pre + tuple(d for sub in subs for d in sub) + post

    xs = _strides(x.shape)
    arg_strides = [_strides(arg.shape) for arg in args]
    add, mul, zero = s.add, s.mul, s.zero
    xd = x.data
    ranges = lambda dims: itertools.product(*(range(d) for d in dims))
    contracted_idx = list(ranges(contracted))

    out = []
    for p in ranges(pre):
        p_off = sum(i * st for i, st in zip(p, xs))
        for sub_idx in itertools.product(*(list(ranges(sub)) for sub in subs)):
            sub_offs = [
                sum(i * st for i, st in zip(si, ast[1:]))
                for si, ast in zip(sub_idx, arg_strides)
            ]
            for q in ranges(post):
                q_off = sum(i * st for i, st in zip(q, xs[lo + n:]))
                acc = zero
                for c in contracted_idx:
                    c_off = sum(i * st for i, st in zip(c, xs[lo:lo + n]))
                    term = xd[p_off + c_off + q_off]
                    for ci, arg, ast, so in zip(c, args, arg_strides, sub_offs):
                        term = mul(term, arg.data[ci * ast[0] + so])
                    acc = add(acc, term)
                out.append(acc)
    return Tensor(s, out_shape, out)


def permute(a: Tensor, pi: Sequence[int]) -> Tensor:
    """Move rank i of ``a`` to rank ``pi[i]`` (1-based positions)."""
    pi = tuple(pi)
    if sorted(pi) != list(range(1, a.rank + 1)):
        raise ValueError(f"{list(pi)} is not a permutation of 1..{a.rank}")
    new_shape = [0] * a.rank
    for i, p in enumerate(pi):
        new_shape[p - 1] = a.shape[i]
    new_strides = _strides(new_shape)
    # stride in the result of each source rank
    moved = [new_strides[p - 1] for p in pi]
    out = [None] * a.size
    for value, idx in zip(a.data, itertools.product(*(range(d) for d in a.shape))):
        out[sum(i * st for i, st in zip(idx, moved))] = value
    return Tensor(a.semiring, new_shape, out)


def inverse_permutation(pi: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(pi)
    for i, p in enumerate(pi):
        inv[p - 1] = i + 1
    return tuple(inv)
