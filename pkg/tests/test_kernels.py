from __future__ import annotations

import json
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stepkernel import kernels as k

P = F(1, 5)


@st.composite
def kernels(draw, max_n: int = 4, symmetric: bool = True):
    n = draw(st.integers(1, max_n))
    raw = draw(st.lists(st.integers(1, 6), min_size=n, max_size=n))
    mu = tuple(F(x, sum(raw)) for x in raw)
    vals = st.fractions(min_value=-2, max_value=2, max_denominator=7)
    rows = [[draw(vals) for _ in range(n)] for _ in range(n)]
    if symmetric:
        rows = [[rows[min(i, j)][max(i, j)] for j in range(n)] for i in range(n)]
    return k.StepKernel(mu, tuple(map(tuple, rows)), require_symmetric=symmetric)


def test_validation():
    with pytest.raises(ValueError):
        k.StepKernel((F(1, 2), F(1, 3)), ((0, 0), (0, 0)))
    with pytest.raises(ValueError):
        k.StepKernel((F(1), F(0)), ((0, 0), (0, 0)))
    with pytest.raises(ValueError):
        k.StepKernel((F(1, 2), F(1, 2)), ((0, 1), (0, 0)))
    with pytest.raises(ValueError):
        k.StepKernel((F(1),), ((0, 1),))
    assert not k.StepKernel((F(1, 2), F(1, 2)), ((0, 1), (0, 0)), require_symmetric=False).is_symmetric


def test_to_fraction():
    assert k.to_fraction("0.2") == F(1, 5)
    assert k.to_fraction("3/7") == F(3, 7)
    assert k.to_fraction(np.int64(4)) == 4
    with pytest.raises(TypeError):
        k.to_fraction(None)


@given(kernels())
def test_integer_form_reconstructs(w):
    a_int, da, m_int, dm = w.integer_form
    for i in range(w.n):
        assert F(int(m_int[i]), dm) == w.measures[i]
        for j in range(w.n):
            assert F(int(a_int[i, j]), da) == w.matrix[i][j]


@given(kernels())
def test_json_round_trip(w):
    assert k.kernel_from_json(json.dumps(w.to_json())) == w


def test_json_rejects_asymmetric_and_malformed():
    with pytest.raises(ValueError):
        k.kernel_from_json({"measures": ["1/2", "1/2"], "matrix": [["0", "1"], ["0", "0"]]})
    with pytest.raises(ValueError):
        k.kernel_from_json({"matrix": [["1"]]})


def test_degree_and_regularity():
    w = k.four_block_dense_kernel(P)
    assert list(k.degree_function(w)) == [F(3, 4) * P, F(5, 4) * P, F(5, 4) * P, F(5, 4) * P]
    assert not k.is_regular(w, P)
    assert k.is_regular(k.constant(P), P)
    assert k.is_regular(k.five_block_psd_kernel(), 0)


def test_operator_product_definition():
    w1 = k.StepKernel((F(1, 3), F(2, 3)), ((1, 2), (2, 0)))
    w2 = k.StepKernel((F(1, 3), F(2, 3)), ((0, 1), (1, 3)))
    prod = k.operator_product(w1, w2)
    for i in range(2):
        for j in range(2):
            assert prod.matrix[i][j] == sum(w1.matrix[i][m] * w1.measures[m] * w2.matrix[m][j] for m in range(2))
    assert not prod.is_symmetric
    with pytest.raises(ValueError):
        k.operator_product(w1, k.constant(P))


@given(kernels(3), st.integers(1, 5))
def test_operator_power_matches_repeated_product(w, m):
    expected = w
    for _ in range(m - 1):
        expected = k.operator_product(expected, w)
    assert k.operator_power(w, m).matrix == expected.matrix
    assert k.operator_power(w, m).is_symmetric


def test_tensor_product_indexing():
    w1 = k.StepKernel((F(1, 4), F(3, 4)), ((1, 2), (2, 3)))
    w2 = k.StepKernel((F(1, 2), F(1, 2)), ((5, 7), (7, 11)))
    t = k.tensor_product(w1, w2)
    for i1 in range(2):
        for j1 in range(2):
            for i2 in range(2):
                for j2 in range(2):
                    a = k.tensor_index(i1, i2, 2)
                    b = k.tensor_index(j1, j2, 2)
                    assert t.matrix[a][b] == w1.matrix[i1][j1] * w2.matrix[i2][j2]
    assert t.measures == (F(1, 8), F(1, 8), F(3, 8), F(3, 8))
    assert k.tensor_power(w1, 3).n == 8


def test_shift_scale_add_hadamard():
    w = k.StepKernel((F(1, 2), F(1, 2)), ((1, 2), (2, 3)))
    assert k.shift(w, -1).matrix == ((0, 1), (1, 2))
    assert k.scale(w, 2).matrix == ((2, 4), (4, 6))
    assert k.add(w, w).matrix == k.scale(w, 2).matrix
    assert k.hadamard_product(w, w).matrix == ((1, 4), (4, 9))


@given(kernels(4), st.lists(st.integers(0, 4), min_size=4, max_size=4))
def test_reweight_measures(w, raw):
    weight = k.BlockFunction(tuple(raw[: w.n]) + (1,) * max(0, w.n - len(raw)))
    if sum(weight) == 0:
        with pytest.raises(ValueError):
            k.reweight(w, weight)
        return
    r = k.reweight(w, weight)
    kept = [i for i in range(w.n) if weight[i] != 0]
    assert sum(r.measures) == 1
    total = sum(w.measures[i] * weight[i] for i in range(w.n))
    assert list(r.measures) == [w.measures[i] * weight[i] / total for i in kept]
    assert r.matrix == tuple(tuple(w.matrix[i][j] for j in kept) for i in kept)


def test_internal_mass_and_density():
    w = k.four_block_dense_kernel(P)
    assert k.internal_mass(w, range(4)) == k.mean(w) == F(9, 8) * P
    assert k.internal_density(w, [0]) == 3 * P
    with pytest.raises(ValueError):
        k.internal_density(w, [])


@pytest.mark.parametrize("p", [F(1, 10), F(1, 5), F(3, 10)])
def test_four_block_properties(p):
    w = k.four_block_dense_kernel(p)
    assert w.is_graphon
    assert k.mean(w) == F(9, 8) * p
    for j in (1, 2, 3):
        assert k.internal_density(w, [b for b in range(4) if b != j]) == p


@pytest.mark.parametrize("p", [F(1, 10), F(1, 5), F(3, 10)])
def test_four_block_has_a_sparse_set(p):
    """Split block 0 into pieces of measure 1/12 and 1/6; that first piece plus block 1 is too sparse."""
    w = k.four_block_dense_kernel(p)
    a = w.matrix
    split = [0, 0, 1, 2, 3]
    mu = (F(1, 12), F(1, 6), F(1, 4), F(1, 4), F(1, 4))
    refined = k.StepKernel(mu, tuple(tuple(a[split[i]][split[j]] for j in range(5)) for i in range(5)))
    assert k.mean(refined) == k.mean(w)
    assert k.internal_density(refined, [0, 2]) == F(3, 4) * p < p


def test_operator_power_block_mass():
    p = P
    w = k.four_block_dense_kernel(p)
    for ell in range(1, 7):
        mass = k.internal_mass(k.operator_power(w, ell), [0])
        assert mass == F(3**ell, 4 ** (ell + 1)) * p**ell


def test_five_block_kernel():
    w = k.five_block_psd_kernel()
    assert w.n == 5 and all(m == F(1, 5) for m in w.measures)
    assert all(sum(row) == 0 for row in w.matrix)


def test_block_function_helpers():
    assert list(k.BlockFunction.indicator(4, [1, 3])) == [0, 1, 0, 1]
    f = k.BlockFunction((1, -2))
    assert not f.nonnegative
    assert k.norm1(f, (F(1, 2), F(1, 2))) == F(3, 2)
    assert k.inner(f, f, (F(1, 2), F(1, 2))) == F(5, 2)
    w = k.constant(P)
    assert k.quadratic_form(w, k.BlockFunction((2,))) == 4 * P
