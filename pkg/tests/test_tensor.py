from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lvsp.errors import PartialOperationError
from lvsp.semiring import SEMIRING_NAMES, make_semiring
from lvsp.tensor import (
    Tensor,
    contract,
    contract_list,
    contract_multi,
    contract_star,
    identity_tensor,
    inverse_permutation,
    permute,
    tensor_add,
    zero_tensor,
)
from lvsp.testing import random_tensor

P = make_semiring("probability")
C = make_semiring("counting")


def naive_contract(a, k, b, l, r=1):
    """Index-by-index evaluation of the contraction definition."""
    s = a.semiring
    k0, l0 = k - 1, l - 1
    shape = a.shape[:k0] + b.shape[:l0] + b.shape[l0 + r:] + a.shape[k0 + r:]
    out = []
    for idx in itertools.product(*(range(d) for d in shape)):
        p = 0
        a_pre, p = idx[p:p + k0], p + k0
        b_pre, p = idx[p:p + l0], p + l0
        b_post, p = idx[p:p + len(b.shape) - l0 - r], p + len(b.shape) - l0 - r
        a_post = idx[p:]
        total = s.zero
        for m in itertools.product(*(range(d) for d in a.shape[k0:k0 + r])):
            total = s.add(total, s.mul(a[a_pre + m + a_post], b[b_pre + m + b_post]))
        out.append(total)
    return Tensor(s, shape, out)


def test_frozen_matrix_vector():
    a = Tensor.from_nested(P, [[0.1, 0.2], [0.3, 0.4]])
    b = Tensor.vector(P, [0.5, 0.5])
    assert contract(a, 2, b, 1).allclose(Tensor.vector(P, [0.15, 0.35]), 1e-12)
    assert contract(a, 1, b, 1).allclose(Tensor.vector(P, [0.2, 0.3]), 1e-12)


def test_add_counting():
    assert tensor_add(Tensor.vector(C, [1, 2]), Tensor.vector(C, [3, 4])) == Tensor.vector(C, [4, 6])


def test_add_shape_mismatch():
    with pytest.raises(PartialOperationError):
        tensor_add(zero_tensor(C, (2, 3)), zero_tensor(C, (3, 2)))


def test_contract_shape_rule():
    a = zero_tensor(C, (2, 3, 4))
    b = zero_tensor(C, (5, 3, 6))
    assert contract(a, 2, b, 2).shape == (2, 5, 6, 4)
    toy = contract(zero_tensor(C, (3, 3, 2)), 1, zero_tensor(C, (3,)), 1)
    assert toy.shape == (3, 2)


@pytest.mark.parametrize("k,l", [(0, 1), (3, 1), (1, 2)])
def test_contract_errors(k, l):
    with pytest.raises(PartialOperationError):
        contract(zero_tensor(C, (2, 2)), k, zero_tensor(C, (3,)), l)


def test_identity_neutral():
    rng = random.Random(5)
    v = random_tensor(P, (2,), rng)
    assert contract(identity_tensor(P, (2,)), 1, v, 1) == v
    m = random_tensor(P, (2, 3), rng)
    ident = identity_tensor(P, (2, 3))
    assert ident.shape == (2, 3, 2, 3)
    assert contract_multi(ident, 1, m, 1, 2) == m
    assert identity_tensor(C, (2,)).tolist() == [[1, 0], [0, 1]]


def test_zero_annihilates():
    b = Tensor.vector(C, [1, 2])
    assert contract(zero_tensor(C, (2, 3)), 1, b, 1) == zero_tensor(C, (3,))
    assert zero_tensor(make_semiring("boolean"), (2, 2)).data == (False,) * 4


def test_star():
    assert contract_star(Tensor.vector(C, [1, 2, 3]), Tensor.vector(C, [4, 5, 6])).item() == 32
    v = Tensor.vector(P, [0.5, 0.5])
    assert contract_star(v, identity_tensor(P, (2,))) == v
    out = contract_star(zero_tensor(P, (3,)), zero_tensor(P, (3, 2)))
    assert out.shape == (2,)


def test_list_contraction():
    rng = random.Random(9)
    x = random_tensor(P, (2, 2, 2), rng)
    a1, a2 = random_tensor(P, (2,), rng), random_tensor(P, (2,), rng)
    by_hand = contract(contract(x, 2, a2, 1), 1, a1, 1)
    assert contract_list(x, [a1, a2]).allclose(by_hand)
    assert contract_list(x, []) == x
    w = random_tensor(P, (3, 3, 2), rng)
    assert contract_list(w, [random_tensor(P, (3,), rng)] * 2).shape == (2,)


def test_list_contraction_rank2_argument():
    rng = random.Random(3)
    x = random_tensor(C, (2, 3, 4), rng)
    a = random_tensor(C, (3, 5), rng)
    assert contract_list(x, [a], start=2) == contract(x, 2, a, 1)


def test_permute():
    m = Tensor.from_nested(C, [[1, 2, 3], [4, 5, 6]])
    assert permute(m, (2, 1)).tolist() == [[1, 4], [2, 5], [3, 6]]
    assert permute(m, (1, 2)) == m
    t = Tensor(C, (2, 3, 4), range(24))
    moved = permute(t, (3, 1, 2))
    assert moved.shape == (3, 4, 2)
    assert moved[1, 2, 0] == t[0, 1, 2]
    with pytest.raises(ValueError):
        permute(m, (1, 1))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.permutations([1, 2, 3, 4]))
def test_permute_inverse(seed, pi):
    t = random_tensor(C, (2, 1, 3, 2), random.Random(seed))
    assert permute(permute(t, pi), inverse_permutation(pi)) == t


shapes = st.lists(st.integers(1, 3), min_size=1, max_size=3)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(SEMIRING_NAMES), shapes, shapes, st.data())
def test_contract_matches_naive(seed, name, sa, sb, data):
    s = make_semiring(name)
    rng = random.Random(seed)
    k = data.draw(st.integers(1, len(sa)))
    l = data.draw(st.integers(1, len(sb)))
    r = data.draw(st.integers(1, min(len(sa) - k + 1, len(sb) - l + 1)))
    sb = sb[:l - 1] + sa[k - 1:k - 1 + r] + sb[l - 1 + r:]
    a, b = random_tensor(s, sa, rng), random_tensor(s, sb, rng)
    got, want = contract_multi(a, k, b, l, r), naive_contract(a, k, b, l, r)
    assert got.shape == want.shape
    assert got.allclose(want, 1e-9)
    if r == 1:
        assert got == contract(a, k, b, l)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(SEMIRING_NAMES))
def test_scalar_degeneration(seed, name):
    s = make_semiring(name)
    rng = random.Random(seed)
    a, b = random_tensor(s, (1, 1), rng), random_tensor(s, (1,), rng)
    assert contract(a, 1, b, 1).item() == s.mul(a.data[0], b.data[0])
    c = random_tensor(s, (1, 1), rng)
    assert tensor_add(a, c).data[0] == s.add(a.data[0], c.data[0])
