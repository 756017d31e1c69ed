"""Step kernels: block measures plus a symmetric rational matrix.

A step kernel ``W`` on blocks ``0..n-1`` takes the value ``matrix[i][j]`` on
block ``i`` x block ``j``; block ``i`` has probability ``measures[i]``. All
arithmetic here is exact (``fractions.Fraction``).
"""

from __future__ import annotations

import json
import math
from dataclasses import InitVar, dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


def to_fraction(x) -> Fraction:
    """Exact conversion; strings may be ``"a/b"`` or decimals (``"0.2"`` -> 1/5)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))
    raise TypeError(f"cannot convert {x!r} to a rational")


def fraction_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _lcm_denominators(values: Iterable[Fraction]) -> int:
    d = 1
    for v in values:
        d = math.lcm(d, v.denominator)
    return d


@dataclass(frozen=True)
class BlockFunction:
    """One rational value per block."""

    values: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(to_fraction(v) for v in self.values))

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i: int) -> Fraction:
        return self.values[i]

    @property
    def nonnegative(self) -> bool:
        return all(v >= 0 for v in self.values)

    @classmethod
    def ones(cls, n: int) -> BlockFunction:
        return cls((Fraction(1),) * n)

    @classmethod
    def indicator(cls, n: int, blocks: Iterable[int]) -> BlockFunction:
        s = set(blocks)
        return cls(tuple(Fraction(int(i in s)) for i in range(n)))

    def to_json(self) -> list[str]:
        return [fraction_str(v) for v in self.values]


@dataclass(frozen=True)
class StepKernel:
    """Block-constant kernel.

    ``measures`` must be strictly positive and sum to one. The matrix must be
    symmetric unless ``require_symmetric=False`` is passed; only the operator
    product creates asymmetric kernels, as intermediate values.
    """

    measures: tuple[Fraction, ...]
    matrix: tuple[tuple[Fraction, ...], ...]
    require_symmetric: InitVar[bool] = True

    def __post_init__(self, require_symmetric: bool) -> None:
        mu = tuple(to_fraction(m) for m in self.measures)
        a = tuple(tuple(to_fraction(x) for x in row) for row in self.matrix)
        n = len(mu)
        if n == 0:
            raise ValueError("a step kernel needs at least one block")
        if len(a) != n or any(len(row) != n for row in a):
            raise ValueError(f"matrix must be {n}x{n} to match {n} block measures")
        if any(m <= 0 for m in mu):
            raise ValueError("block measures must be strictly positive")
        if sum(mu) != 1:
            raise ValueError(f"block measures must sum to 1, got {sum(mu)}")
        if require_symmetric and any(a[i][j] != a[j][i] for i in range(n) for j in range(i)):
            raise ValueError("kernel matrix is not symmetric")
        object.__setattr__(self, "measures", mu)
        object.__setattr__(self, "matrix", a)

    @property
    def n(self) -> int:
        return len(self.measures)

    @cached_property
    def is_symmetric(self) -> bool:
        a = self.matrix
        return all(a[i][j] == a[j][i] for i in range(self.n) for j in range(i))

    @property
    def is_graphon(self) -> bool:
        return all(0 <= x <= 1 for row in self.matrix for x in row)

    def array(self) -> np.ndarray:
        """Object array of Fractions (a fresh copy)."""
        out = np.empty((self.n, self.n), dtype=object)
        for i, row in enumerate(self.matrix):
            for j, x in enumerate(row):
                out[i, j] = x
        return out

    def measure_array(self) -> np.ndarray:
        return np.array(self.measures, dtype=object)

    def float_matrix(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.matrix])

    def float_measures(self) -> np.ndarray:
        return np.array([float(m) for m in self.measures])

    @cached_property
    def integer_form(self) -> tuple[np.ndarray, int, np.ndarray, int]:
        """``(A_int, dA, mu_int, dmu)`` with ``A = A_int / dA`` and ``mu = mu_int / dmu``.

        The integer arrays have ``dtype=object`` so products never overflow.
        """
        da = _lcm_denominators(x for row in self.matrix for x in row)
        dm = _lcm_denominators(self.measures)
        a_int = np.array([[int(x * da) for x in row] for row in self.matrix], dtype=object)
        m_int = np.array([int(m * dm) for m in self.measures], dtype=object)
        return a_int, da, m_int, dm

    @classmethod
    def uniform(cls, matrix: Sequence[Sequence], **kw) -> StepKernel:
        n = len(matrix)
        return cls((Fraction(1, n),) * n, tuple(tuple(row) for row in matrix), **kw)

    def _with_matrix(self, rows, *, symmetric: bool = True) -> StepKernel:
        return StepKernel(self.measures, tuple(tuple(r) for r in rows), require_symmetric=symmetric)

    def to_json(self) -> dict:
        return {
            "measures": [fraction_str(m) for m in self.measures],
            "matrix": [[fraction_str(x) for x in row] for row in self.matrix],
        }

    def __str__(self) -> str:
        rows = "; ".join(" ".join(fraction_str(x) for x in row) for row in self.matrix)
        return f"StepKernel(mu=[{', '.join(fraction_str(m) for m in self.measures)}], A=[{rows}])"


def _from_object_array(measures, arr: np.ndarray, *, symmetric: bool = True) -> StepKernel:
    return StepKernel(tuple(measures), tuple(tuple(row) for row in arr.tolist()), require_symmetric=symmetric)


def kernel_from_json(data: dict | str) -> StepKernel:
    """Parse the kernel JSON form; asymmetric matrices are rejected."""
    if isinstance(data, str):
        data = json.loads(data)
    try:
        mu = [to_fraction(m) for m in data["measures"]]
        rows = [[to_fraction(x) for x in row] for row in data["matrix"]]
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed kernel JSON: {exc}") from exc
    return StepKernel(tuple(mu), tuple(tuple(r) for r in rows))


# -- named kernels ----------------------------------------------------------------


def constant(p) -> StepKernel:
    p = to_fraction(p)
    if not 0 <= p <= 1:
        raise ValueError("constant graphon value must lie in [0, 1]")
    return StepKernel((Fraction(1),), ((p,),))


def four_block_dense_kernel(p) -> StepKernel:
    """Uniform 4-block graphon: block 0 carries 3p, the other three form a 1-vs-2 pattern.

    Edge density is 9p/8. Block 0 is disconnected from the rest, so a set
    made of a small part of block 0 and all of block 1 has internal density
    below p: the kernel is *not* p-locally dense for any p > 0.
    """
    p = to_fraction(p)
    if not 0 <= 3 * p <= 1:
        raise ValueError("entries 3p must lie in [0, 1]")
    z = Fraction(0)
    rows = (
        (3 * p, z, z, z),
        (z, p, 2 * p, 2 * p),
        (z, 2 * p, p, 2 * p),
        (z, 2 * p, 2 * p, p),
    )
    return StepKernel.uniform(rows)


FIVE_BLOCK_MATRIX = (
    (18, -12, 12, -12, -6),
    (-12, 35, 28, -19, -32),
    (12, 28, 56, -44, -52),
    (-12, -19, -44, 35, 40),
    (-6, -32, -52, 40, 50),
)


def five_block_psd_kernel() -> StepKernel:
    """Uniform 5-block kernel that is PSD and 0-regular, yet has negative H-densities."""
    return StepKernel.uniform(FIVE_BLOCK_MATRIX)


# -- degree, regularity, operator action ---------------------------------------------


def degree_function(w: StepKernel) -> BlockFunction:
    return apply(w, BlockFunction.ones(w.n))


def is_regular(w: StepKernel, p) -> bool:
    p = to_fraction(p)
    return all(d == p for d in degree_function(w))


def apply(w: StepKernel, f: BlockFunction) -> BlockFunction:
    """``(T_W f)[i] = sum_j mu_j A[i,j] f[j]``."""
    if len(f) != w.n:
        raise ValueError("block function dimension does not match the kernel")
    mu = w.measures
    return BlockFunction(tuple(sum(mu[j] * row[j] * f[j] for j in range(w.n)) for row in w.matrix))


def norm1(f: BlockFunction, measures: Sequence[Fraction]) -> Fraction:
    if len(f) != len(measures):
        raise ValueError("dimension mismatch")
    return sum((m * abs(v) for m, v in zip(measures, f)), Fraction(0))


def inner(f: BlockFunction, g: BlockFunction, measures: Sequence[Fraction]) -> Fraction:
    if not len(f) == len(g) == len(measures):
        raise ValueError("dimension mismatch")
    return sum((m * a * b for m, a, b in zip(measures, f, g)), Fraction(0))


def quadratic_form(w: StepKernel, f: BlockFunction) -> Fraction:
    """``iint f(x) W(x,y) f(y)`` = ``<f, T_W f>``."""
    return inner(f, apply(w, f), w.measures)


# -- algebra -----------------------------------------------------------------------


def _same_measures(w1: StepKernel, w2: StepKernel) -> None:
    if w1.measures != w2.measures:
        raise ValueError("kernels must live on identical block measures")


def operator_product(w1: StepKernel, w2: StepKernel) -> StepKernel:
    """``(W1 o W2)[i,j] = sum_k A1[i,k] mu_k A2[k,j]``; may be asymmetric."""
    _same_measures(w1, w2)
    prod = (w1.array() * w1.measure_array()[None, :]).dot(w2.array())
    return _from_object_array(w1.measures, prod, symmetric=False)


def operator_power(w: StepKernel, k: int) -> StepKernel:
    if k < 1:
        raise ValueError("operator power needs k >= 1")
    result = w
    base = w
    k -= 1
    # binary powering; powers of a symmetric kernel stay symmetric
    while k:
        if k & 1:
            result = operator_product(result, base)
        k >>= 1
        if k:
            base = operator_product(base, base)
    return result


def tensor_product(w1: StepKernel, w2: StepKernel) -> StepKernel:
    """Blocks ``(i, j)`` are numbered row-major as ``i * w2.n + j``."""
    mu = tuple(a * b for a in w1.measures for b in w2.measures)
    arr = np.kron(w1.array(), w2.array())
    return _from_object_array(mu, arr, symmetric=w1.is_symmetric and w2.is_symmetric)


def tensor_power(w: StepKernel, k: int) -> StepKernel:
    if k < 1:
        raise ValueError("tensor power needs k >= 1")
    out = w
    for _ in range(k - 1):
        out = tensor_product(out, w)
    return out


def tensor_index(i: int, j: int, n2: int) -> int:
    return i * n2 + j


def hadamard_product(w1: StepKernel, w2: StepKernel) -> StepKernel:
    _same_measures(w1, w2)
    return _from_object_array(w1.measures, w1.array() * w2.array(), symmetric=w1.is_symmetric and w2.is_symmetric)


def shift(w: StepKernel, c) -> StepKernel:
    """``W + c`` (every entry shifted by ``c``)."""
    c = to_fraction(c)
    return w._with_matrix(([x + c for x in row] for row in w.matrix), symmetric=w.is_symmetric)


def scale(w: StepKernel, c) -> StepKernel:
    c = to_fraction(c)
    return w._with_matrix(([x * c for x in row] for row in w.matrix), symmetric=w.is_symmetric)


def add(w1: StepKernel, w2: StepKernel) -> StepKernel:
    _same_measures(w1, w2)
    return _from_object_array(w1.measures, w1.array() + w2.array(), symmetric=w1.is_symmetric and w2.is_symmetric)


def reweight(w: StepKernel, weight: BlockFunction) -> StepKernel:
    """Same values under the measure ``mu_i w_i / sum_j mu_j w_j``; zero-weight blocks are dropped."""
    if len(weight) != w.n:
        raise ValueError("weight dimension does not match the kernel")
    if not weight.nonnegative:
        raise ValueError("weights must be nonnegative")
    total = sum(m * x for m, x in zip(w.measures, weight))
    if total == 0:
        raise ValueError("weight function vanishes almost everywhere")
    keep = [i for i in range(w.n) if weight[i] != 0]
    mu = tuple(w.measures[i] * weight[i] / total for i in keep)
    rows = tuple(tuple(w.matrix[i][j] for j in keep) for i in keep)
    return StepKernel(mu, rows, require_symmetric=w.is_symmetric)


def permute_blocks(w: StepKernel, perm: Sequence[int]) -> StepKernel:
    """Block ``i`` of the result is block ``perm[i]`` of ``w``."""
    mu = tuple(w.measures[p] for p in perm)
    rows = tuple(tuple(w.matrix[p][q] for q in perm) for p in perm)
    return StepKernel(mu, rows, require_symmetric=w.is_symmetric)


def internal_mass(w: StepKernel, blocks: Iterable[int]) -> Fraction:
    """``iint_{U x U} W`` for ``U`` the union of the given blocks."""
    s = sorted(set(blocks))
    mu, a = w.measures, w.matrix
    return sum((mu[i] * mu[j] * a[i][j] for i in s for j in s), Fraction(0))


def internal_density(w: StepKernel, blocks: Iterable[int]) -> Fraction:
    """Internal mass of ``U`` divided by ``|U|^2``."""
    s = sorted(set(blocks))
    size = sum((w.measures[i] for i in s), Fraction(0))
    if size == 0:
        raise ValueError("empty block set")
    return internal_mass(w, s) / size**2


def mean(w: StepKernel) -> Fraction:
    """``iint W`` over the whole space."""
    return internal_mass(w, range(w.n))
