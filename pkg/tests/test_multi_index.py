import cmath
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from barronfunc.errors import SupportOutOfRangeError
from barronfunc.function_space import CoeffVector
from barronfunc.multi_index import MultiIndex, basis_eval, enumerate_indices, l1_norm, max_support

sparse_maps = st.dictionaries(st.integers(1, 6), st.integers(-5, 5), max_size=6)
coeff_vectors = st.lists(st.floats(-0.499, 0.499), min_size=6, max_size=6)


@pytest.mark.parametrize("entries,expected", [({}, 0), ({1: 2, 2: -1, 4: 3}, 6), ({3: 5}, 5)])
def test_l1_norm(entries, expected):
    assert l1_norm(MultiIndex(entries)) == expected


@pytest.mark.parametrize("entries,expected", [({}, 0), ({3: 5}, 3), ({1: 1, 7: -2}, 7)])
def test_max_support(entries, expected):
    assert max_support(MultiIndex(entries)) == expected


def test_zeros_are_dropped_and_equality_is_sparse():
    assert MultiIndex({1: 0, 2: 3}) == MultiIndex({2: 3})
    assert MultiIndex({1: 0}) == MultiIndex()
    assert MultiIndex({2: 3}) != MultiIndex({2: -3})


def test_positions_are_one_based():
    with pytest.raises(ValueError):
        MultiIndex({0: 1})


def test_enumerate_small_case_in_order():
    assert enumerate_indices(1, 1) == [MultiIndex(), MultiIndex({1: -1}), MultiIndex({1: 1})]


@pytest.mark.parametrize("dim,linf,count", [(2, 1, 9), (2, 2, 25), (3, 1, 27), (1, 4, 9)])
def test_enumerate_count_and_uniqueness(dim, linf, count):
    out = enumerate_indices(dim, linf)
    assert len(out) == count == (2 * linf + 1) ** dim
    assert len(set(out)) == count
    assert MultiIndex() in out
    assert out == sorted(out)


def test_basis_eval_examples():
    v = CoeffVector(np.array([0.25, 0.0]))
    assert basis_eval(MultiIndex(), v) == 1 + 0j
    assert basis_eval(MultiIndex({1: 1}), v) == pytest.approx(1j, abs=1e-15)
    w = CoeffVector(np.array([0.1, 0.3]))
    # direct complex-exponential oracle
    assert basis_eval(MultiIndex({1: 2, 2: -1}), w) == pytest.approx(cmath.exp(-0.2j * cmath.pi),
                                                                     abs=1e-14)


def test_basis_eval_out_of_range():
    with pytest.raises(SupportOutOfRangeError):
        basis_eval(MultiIndex({3: 1}), CoeffVector(np.array([0.1, 0.2])))


def test_json_roundtrip_sorted_pairs():
    k = MultiIndex({4: 3, 1: 2, 2: -1})
    assert json.loads(k.to_json()) == [[1, 2], [2, -1], [4, 3]]
    assert MultiIndex.from_json(k.to_json()) == k


@given(sparse_maps, coeff_vectors)
def test_unit_modulus(entries, b):
    assert abs(abs(basis_eval(MultiIndex(entries), np.array(b))) - 1) < 1e-12


@given(sparse_maps, sparse_maps, coeff_vectors)
@settings(max_examples=200)
def test_group_property(e1, e2, b):
    k1, k2 = MultiIndex(e1), MultiIndex(e2)
    lhs = basis_eval(k1, np.array(b)) * basis_eval(k2, np.array(b))
    assert abs(lhs - basis_eval(k1 + k2, np.array(b))) < 1e-10


@given(sparse_maps)
def test_negation_and_hash(entries):
    k = MultiIndex(entries)
    assert -(-k) == k
    assert hash(MultiIndex(dict(entries))) == hash(k)
    assert (k + (-k)) == MultiIndex()
