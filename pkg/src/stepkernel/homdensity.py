"""Homomorphism densities of graphs in step kernels.

Two independent evaluation routes are provided: :func:`density` sums over every
map ``V(H) -> blocks`` and :func:`density_dp` eliminates one vertex at a time.
Both work on the integer form of the kernel (common denominators pulled out),
so results are exact ``Fraction`` values.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import CapExceededError
from .graphs import Graph, spanning_subgraphs
from .kernels import BlockFunction, StepKernel, to_fraction

BRUTE_FORCE_BUDGET = 10**9


def _require_symmetric(w: StepKernel) -> None:
    if not w.is_symmetric:
        raise ValueError("homomorphism densities need a symmetric kernel")


def density(h: Graph, w: StepKernel) -> Fraction:
    """``t(H, W)`` by summing over all ``n ** v(H)`` block assignments."""
    _require_symmetric(w)
    n, v = w.n, h.vertex_count
    if n**v > BRUTE_FORCE_BUDGET:
        raise CapExceededError(f"{n}^{v} terms exceeds the brute-force budget; use density_dp")
    a_int, da, m_int, dm = w.integer_form
    a = a_int.tolist()
    mu = m_int.tolist()
    total = 0
    for phi in itertools.product(range(n), repeat=v):
        term = 1
        for u, x in h.edges:
            term *= a[phi[u]][phi[x]]
            if not term:
                break
        else:
            for b in phi:
                term *= mu[b]
            total += term
    return Fraction(total, da**h.edge_count * dm**v)


# -- vertex elimination -------------------------------------------------------------


@dataclass(frozen=True)
class _Step:
    consumed: tuple[int, ...]
    out_vars: tuple[int, ...]


@dataclass(frozen=True)
class _Plan:
    factor_vars: tuple[tuple[int, ...], ...]  # initial factors: edges, then one weight per vertex
    steps: tuple[_Step, ...]
    final: tuple[int, ...]  # factors left after elimination
    kept: tuple[int, ...]


@lru_cache(maxsize=4096)
def _plan(h: Graph, kept: tuple[int, ...] = ()) -> _Plan:
    """Greedy min-degree elimination order over the vertices not in ``kept``."""
    factor_vars: list[tuple[int, ...]] = [tuple(e) for e in h.edges]
    factor_vars += [(v,) for v in range(h.vertex_count)]
    alive = set(range(len(factor_vars)))
    vars_of = list(factor_vars)
    adj = {v: set(h.neighbors[v]) for v in range(h.vertex_count)}
    remaining = [v for v in range(h.vertex_count) if v not in kept]
    steps = []
    while remaining:
        v = min(remaining, key=lambda x: (len(adj[x]), x))
        remaining.remove(v)
        consumed = tuple(sorted(f for f in alive if v in vars_of[f]))
        out = tuple(sorted({x for f in consumed for x in vars_of[f]} - {v}))
        alive -= set(consumed)
        alive.add(len(vars_of))
        vars_of.append(out)
        steps.append(_Step(consumed, out))
        for x in adj[v]:
            adj[x] |= adj[v]
            adj[x] -= {x, v}
        del adj[v]
    return _Plan(tuple(factor_vars), tuple(steps), tuple(sorted(alive)), tuple(kept))


def _evaluate(plan: _Plan, matrix: np.ndarray, weights: Sequence[np.ndarray]):
    """Contract the factor graph; returns a scalar or an array indexed by ``plan.kept``."""
    tensors = [matrix if len(fv) == 2 else weights[fv[0]] for fv in plan.factor_vars]
    vars_of = list(plan.factor_vars)
    for step in plan.steps:
        args = []
        for f in step.consumed:
            args += [tensors[f], list(vars_of[f])]
        # object einsum returns bare Python ints for scalars; re-wrap so they are
        # not later coerced to (overflowing) int64
        tensors.append(np.asarray(np.einsum(*args, list(step.out_vars)), dtype=matrix.dtype))
        vars_of.append(step.out_vars)
    args = []
    for f in plan.final:
        args += [tensors[f], list(vars_of[f])]
    if not args:
        return 1
    out = np.einsum(*args, list(plan.kept))
    if isinstance(out, np.ndarray):
        return out.item() if out.ndim == 0 else out
    return out


def _integer_weights(w: StepKernel, v: int) -> list[np.ndarray]:
    return [w.integer_form[2]] * v


def density_dp(h: Graph, w: StepKernel) -> Fraction:
    """``t(H, W)`` by variable elimination; equal to :func:`density`."""
    _require_symmetric(w)
    a_int, da, m_int, dm = w.integer_form
    total = _evaluate(_plan(h), a_int, _integer_weights(w, h.vertex_count))
    return Fraction(int(total), da**h.edge_count * dm**h.vertex_count)


def _normalize_fix(h: Graph, w: StepKernel, fix) -> dict[int, int]:
    pairs = fix.items() if isinstance(fix, Mapping) else fix
    out: dict[int, int] = {}
    for v, b in pairs:
        v, b = int(v), int(b)
        if not 0 <= v < h.vertex_count:
            raise ValueError(f"vertex {v} is not in H")
        if not 0 <= b < w.n:
            raise ValueError(f"block {b} is not a block of W")
        if v in out:
            raise ValueError(f"vertex {v} fixed twice")
        out[v] = b
    return out


def conditioned_density(h: Graph, w: StepKernel, fix) -> Fraction:
    """``t(H, W | x_v = block b, ...)``: fixed vertices carry no measure factor.

    ``fix`` is a mapping or a sequence of ``(vertex, block)`` pairs.
    """
    _require_symmetric(w)
    assignment = _normalize_fix(h, w, fix)
    a_int, da, m_int, dm = w.integer_form
    weights = _integer_weights(w, h.vertex_count)
    for v, b in assignment.items():
        unit = np.zeros(w.n, dtype=object)
        unit[b] = 1
        weights[v] = unit
    total = _evaluate(_plan(h), a_int, weights)
    return Fraction(int(total), da**h.edge_count * dm ** (h.vertex_count - len(assignment)))


def weighted_density(h: Graph, w: StepKernel, weight: BlockFunction) -> Fraction:
    """``int prod_v w(x_v) prod_{uv} W(x_u, x_v)`` with respect to the block measures."""
    _require_symmetric(w)
    if len(weight) != w.n:
        raise ValueError("weight dimension does not match the kernel")
    if not weight.nonnegative:
        raise ValueError("weights must be nonnegative")
    a_int, da, m_int, dm = w.integer_form
    dw = math.lcm(*(x.denominator for x in weight))
    w_int = np.array([int(x * dw) for x in weight], dtype=object)
    total = _evaluate(_plan(h), a_int, [m_int * w_int] * h.vertex_count)
    return Fraction(int(total), da**h.edge_count * (dm * dw) ** h.vertex_count)


def rooted_density_kernel(h: Graph, a: int, b: int, w: StepKernel) -> StepKernel:
    """The kernel ``(x, y) -> t(H, W | x_a = x, x_b = y)`` on the blocks of ``W``.

    Raises ``ValueError`` if the result is not symmetric; it is never symmetrised.
    """
    _require_symmetric(w)
    if a == b:
        raise ValueError("the two roots must be distinct")
    for r in (a, b):
        if not 0 <= r < h.vertex_count:
            raise ValueError(f"root {r} is not a vertex of H")
    a_int, da, m_int, dm = w.integer_form
    weights = _integer_weights(w, h.vertex_count)
    ones = np.ones(w.n, dtype=object)
    weights[a] = weights[b] = ones
    out = _evaluate(_plan(h, (a, b)), a_int, weights)
    if not isinstance(out, np.ndarray):
        out = np.full((w.n, w.n), out, dtype=object)
    denom = da**h.edge_count * dm ** (h.vertex_count - 2)
    rows = tuple(tuple(Fraction(int(x), denom) for x in row) for row in out.tolist())
    if any(rows[i][j] != rows[j][i] for i in range(w.n) for j in range(i)):
        raise ValueError("rooted density kernel is not symmetric; H lacks the (a, b) swap symmetry")
    return StepKernel(w.measures, rows)


def cycle_density_spectral_exact(k: int, w: StepKernel) -> Fraction:
    """``trace((D A)^k)`` with ``D = diag(mu)``, i.e. the sum of k-th powers of the eigenvalues.

    For ``k >= 3`` this is ``t(C_k, W)``; ``k = 2`` gives ``iint W^2``.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    da = w.measure_array()[:, None] * w.array()
    power = da
    for _ in range(k - 1):
        power = power.dot(da)
    return Fraction(sum(power[i, i] for i in range(w.n)))


@dataclass(frozen=True)
class ExpansionTerm:
    subgraph: Graph
    coefficient: Fraction
    density: Fraction

    @property
    def value(self) -> Fraction:
        return self.coefficient * self.density


def psd_expansion(h: Graph, p, w0: StepKernel) -> list[ExpansionTerm]:
    """Terms ``p^(e(H)-e(H')) t(H', W0)`` over spanning subgraphs ``H'``; they sum to ``t(H, W0 + p)``."""
    p = to_fraction(p)
    return [
        ExpansionTerm(sub, p ** (h.edge_count - sub.edge_count), density_dp(sub, w0))
        for sub in spanning_subgraphs(h)
    ]


def density_float(h: Graph, matrix: np.ndarray, measures: np.ndarray) -> float:
    """Float ``t(H, W)`` along the same elimination plan; used by the search objective."""
    return float(_evaluate(_plan(h), matrix, [measures] * h.vertex_count))
