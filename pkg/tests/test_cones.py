from __future__ import annotations

import itertools
import json
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stepkernel import kernels as k
from stepkernel.cones import (
    ConeVerdict,
    copositive_matrix,
    cut_norm,
    is_copositive,
    is_locally_dense,
    is_psd,
    min_simplex_quadratic,
    psd_factor,
    psd_matrix,
    quadratic_value,
    spectrum,
)
from stepkernel.errors import CapExceededError
from stepkernel.homdensity import cycle_density_spectral_exact

P = F(1, 5)


@st.composite
def sym_matrices(draw, max_n: int = 5, lo: int = -6, hi: int = 6):
    n = draw(st.integers(1, max_n))
    upper = [[draw(st.integers(lo, hi)) for _ in range(n)] for _ in range(n)]
    return [[F(upper[min(i, j)][max(i, j)]) for j in range(n)] for i in range(n)]


@st.composite
def kernels(draw, max_n: int = 4):
    m = draw(sym_matrices(max_n))
    n = len(m)
    raw = draw(st.lists(st.integers(1, 5), min_size=n, max_size=n))
    return k.StepKernel(tuple(F(x, sum(raw)) for x in raw), tuple(map(tuple, m)))


def simplex_grid(n: int, steps: int):
    for c in itertools.product(range(steps + 1), repeat=n - 1):
        if sum(c) <= steps:
            yield [F(x, steps) for x in c] + [F(steps - sum(c), steps)]


# -- PSD ------------------------------------------------------------------------------


def test_psd_examples():
    v = psd_matrix([[1, 2], [2, 1]])
    assert not v.holds
    assert list(v.witness) == [1, -1] and v.value == -2
    assert is_psd(k.five_block_psd_kernel()).holds
    assert is_psd(k.shift(k.constant(P), -P)).holds
    assert psd_matrix([[0, 0], [0, 0]]).holds


def test_psd_needs_the_schur_step():
    # every diagonal and every 2x2 minor is fine, the 3x3 determinant is negative
    m = [[2, -1, -1], [-1, 2, -1], [-1, -1, F(1, 2)]]
    v = psd_matrix(m)
    assert not v.holds
    assert quadratic_value([[F(x) for x in r] for r in m], list(v.witness)) == v.value < 0


@given(sym_matrices(6))
def test_psd_agrees_with_eigenvalues(m):
    v = psd_matrix(m)
    lam = float(np.linalg.eigvalsh(np.array(m, dtype=float)).min())
    if lam > 1e-9:
        assert v.holds
    elif lam < -1e-9:
        assert not v.holds
    if not v.holds:
        assert quadratic_value(m, list(v.witness)) == v.value < 0


@given(st.integers(1, 5), st.integers(1, 5), st.randoms())
def test_gram_matrices_are_psd_and_factor(n, r, rnd):
    b = [[F(rnd.randint(-4, 4), rnd.randint(1, 3)) for _ in range(r)] for _ in range(n)]
    m = [[sum(b[i][t] * b[j][t] for t in range(r)) for j in range(n)] for i in range(n)]
    assert psd_matrix(m).holds
    factor, diag = psd_factor(m)
    assert all(d > 0 for d in diag) and len(diag) <= r
    for i in range(n):
        for j in range(n):
            assert sum(factor[i][t] * diag[t] * factor[j][t] for t in range(len(diag))) == m[i][j]


def test_psd_factor_rejects_indefinite():
    with pytest.raises(ValueError):
        psd_factor([[1, 2], [2, 1]])


def test_kernel_witness_has_the_same_value():
    w = k.StepKernel((F(1, 4), F(3, 4)), ((1, 3), (3, 1)))
    v = is_psd(w)
    assert not v.holds
    assert k.quadratic_form(w, v.witness) == v.value < 0


def test_verdict_invariant_and_json():
    with pytest.raises(ValueError):
        ConeVerdict(False)
    with pytest.raises(ValueError):
        ConeVerdict(False, k.BlockFunction((1,)), F(1))
    data = psd_matrix([[1, 2], [2, 1]]).to_json()
    assert json.loads(json.dumps(data)) == {"holds": False, "witness": ["1", "-1"], "value": "-2"}


# -- simplex and copositivity ------------------------------------------------------------


def test_min_simplex_examples():
    assert min_simplex_quadratic([[1, 0], [0, 1]]) == (F(1, 2), [F(1, 2), F(1, 2)])
    assert min_simplex_quadratic([[0, -1], [-1, 0]]) == (F(-1, 2), [F(1, 2), F(1, 2)])
    assert min_simplex_quadratic([[3]]) == (3, [1])


@given(sym_matrices(4))
def test_min_simplex_against_grid(m):
    value, x = min_simplex_quadratic(m)
    assert all(xi >= 0 for xi in x) and sum(x) == 1
    assert quadratic_value(m, x) == value
    steps = 12
    grid = min(quadratic_value(m, y) for y in simplex_grid(len(m), steps))
    assert value <= grid
    # x^T M x is Lipschitz on the simplex, so a fine grid gets close to the minimum
    spread = max(abs(v) for row in m for v in row)
    assert grid - value <= 4 * spread * len(m) / steps


def test_min_simplex_cap():
    with pytest.raises(CapExceededError):
        min_simplex_quadratic([[F(int(i == j)) for j in range(17)] for i in range(17)])


@given(sym_matrices(5))
def test_copositivity_matches_simplex_minimum(m):
    v = copositive_matrix(m)
    value, _ = min_simplex_quadratic(m)
    assert v.holds == (value >= 0)
    if not v.holds:
        assert all(x >= 0 for x in v.witness)
        assert quadratic_value(m, list(v.witness)) == v.value < 0


def test_copositive_examples():
    assert is_copositive(k.four_block_dense_kernel(P)).holds
    assert is_copositive(k.five_block_psd_kernel()).holds
    w = k.four_block_dense_kernel(P)
    v = is_copositive(k.shift(w, -F(10, 40) - F(1, 100)))  # q > 9p/8
    assert not v.holds
    # all-ones works: its form is mean(W) - q < 0
    assert k.quadratic_form(k.shift(w, -F(10, 40)), k.BlockFunction.ones(4)) < 0
    assert k.quadratic_form(k.shift(w, -F(10, 40) - F(1, 100)), v.witness) == v.value < 0


def test_copositive_but_not_psd_horn_matrix():
    horn = [[1, -1, 1, 1, -1], [-1, 1, -1, 1, 1], [1, -1, 1, -1, 1], [1, 1, -1, 1, -1], [-1, 1, 1, -1, 1]]
    assert copositive_matrix(horn).holds
    assert not psd_matrix(horn).holds


# -- local density ---------------------------------------------------------------------


def test_constant_is_exactly_p_locally_dense():
    w = k.constant(P)
    assert is_locally_dense(w, P).holds
    assert not is_locally_dense(w, P + F(1, 1000)).holds


def test_local_density_needs_a_graphon():
    with pytest.raises(ValueError):
        is_locally_dense(k.five_block_psd_kernel(), P)


@pytest.mark.parametrize("p", [F(1, 10), F(1, 5), F(3, 10)])
def test_four_block_kernel_is_not_locally_dense(p):
    v = is_locally_dense(k.four_block_dense_kernel(p), p)
    assert not v.holds
    # the witness puts weight on blocks 0 and 1 only, with more on block 1
    assert v.witness[2] == v.witness[3] == 0 and v.witness[1] > v.witness[0] > 0
    assert min_simplex_quadratic(k.shift(k.four_block_dense_kernel(p), -p).matrix)[0] == -p / 4


@pytest.mark.parametrize("p", [F(1, 10), F(1, 5), F(3, 10)])
def test_four_block_tensor_square_is_not_locally_dense(p):
    sq = k.tensor_product(k.four_block_dense_kernel(p), k.four_block_dense_kernel(p))
    assert not is_locally_dense(sq, p * p).holds
    blocks = [k.tensor_index(i, j, 4) for i, j in ((0, 1), (1, 0), (1, 1), (1, 2))]
    assert k.internal_density(sq, blocks) == F(3, 4) * p * p


def test_local_density_and_reweighting():
    from stepkernel.search import gen_locally_dense

    for seed in range(15):
        w = gen_locally_dense(P, 3, seed)
        for weight in ((1, 2, 3), (5, 1, 1)):
            assert is_locally_dense(k.reweight(w, k.BlockFunction(weight)), P).holds
    bad = k.four_block_dense_kernel(P)
    assert not is_locally_dense(k.reweight(bad, k.BlockFunction((1, 7, 2, 2))), P).holds


# -- cut norm --------------------------------------------------------------------------


def brute_cut_norm(w: k.StepKernel) -> F:
    best = F(0)
    n = w.n
    for s in itertools.product((0, 1), repeat=n):
        for t in itertools.product((0, 1), repeat=n):
            val = sum(w.measures[i] * w.measures[j] * w.matrix[i][j] for i in range(n) if s[i] for j in range(n) if t[j])
            best = max(best, abs(val))
    return best


@given(kernels(4))
def test_cut_norm_against_brute_force(w):
    assert cut_norm(w) == brute_cut_norm(w)


def test_cut_norm_examples():
    assert cut_norm(k.constant(0)) == 0
    assert cut_norm(k.shift(k.constant(F(1, 3)), -F(1, 2))) == F(1, 6)
    assert cut_norm(k.shift(k.constant(P), -P)) == 0
    assert cut_norm(k.shift(k.four_block_dense_kernel(P), -P)) > 0


def test_cut_norm_cap():
    w = k.StepKernel.uniform([[F(int(i == j)) for j in range(15)] for i in range(15)])
    with pytest.raises(CapExceededError):
        cut_norm(w)


# -- spectrum --------------------------------------------------------------------------


def test_spectrum_examples():
    assert spectrum(k.constant(P)).eigenvalues == pytest.approx([0.2])
    a, b = F(1), F(1, 2)
    rep = spectrum(k.StepKernel.uniform(((a, b), (b, a))))
    assert rep.eigenvalues == pytest.approx([0.75, 0.25])
    five = spectrum(k.five_block_psd_kernel())
    assert min(five.eigenvalues) >= -1e-9
    assert five.converged


@given(kernels(5))
def test_spectrum_matches_numpy_and_traces(w):
    rep = spectrum(w)
    assert len(rep.eigenvalues) == w.n and rep.residual <= rep.tolerance
    mags = [abs(x) for x in rep.eigenvalues]
    assert mags == sorted(mags, reverse=True)
    root = np.sqrt(w.float_measures())
    s = root[:, None] * w.float_matrix() * root[None, :]
    assert sorted(rep.eigenvalues) == pytest.approx(sorted(np.linalg.eigvalsh(s)), abs=1e-9)
    lam = np.array(rep.eigenvalues)
    for c in range(2, 9):
        exact = float(cycle_density_spectral_exact(c, w))
        assert float((lam**c).sum()) == pytest.approx(exact, rel=1e-9, abs=1e-9 * max(1.0, float(np.abs(lam).max()) ** c))


def test_spectrum_converges_with_repeated_zero_eigenvalues():
    w = k.StepKernel.uniform(((0, 0, 0, 0), (0, 0, 0, 1), (0, 0, 1, 0), (0, 1, 0, 1)))
    rep = spectrum(w)
    assert sorted(rep.eigenvalues) == pytest.approx(sorted(np.linalg.eigvalsh(np.array(w.float_matrix()) / 4)), abs=1e-12)
