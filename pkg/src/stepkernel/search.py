"""Random kernel generators, graph sweeps and the negative-density search.

The search looks for PSD 0-regular kernels ``W = P L diag(d) L^T P^T`` (with
``P = I - 1 mu^T``) on which a graph has negative homomorphism density. Floats
drive the search; a hit only counts once :func:`certify_counterexample` has
rebuilt the kernel from rounded rationals and recomputed the density exactly.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cones import is_locally_dense, is_psd, psd_factor
from .errors import CapExceededError
from .graphs import Graph, canonical_form, connected_two_cores, graph_to_json, parse_graph
from .homdensity import density_dp, density_float
from .kernels import StepKernel, fraction_str, is_regular, to_fraction

SWEEP_VERTEX_CAP = 7
SEARCH_VERTEX_CAP = 7
SEARCH_BLOCK_CAP = 8
ROUNDING_DENOMINATOR = 10**4
STEP_SCALES = 10


# -- exact generators ----------------------------------------------------------------


def _measures(n: int, measures) -> tuple[Fraction, ...]:
    if measures is None:
        return (Fraction(1, n),) * n
    mu = tuple(to_fraction(m) for m in measures)
    if len(mu) != n:
        raise ValueError(f"expected {n} measures, got {len(mu)}")
    return mu


def _rational_matrix(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Entries ``k/10`` with ``k`` uniform in ``-10..10``."""
    ints = rng.integers(-10, 11, size=(rows, cols))
    out = np.empty((rows, cols), dtype=object)
    for idx, k in np.ndenumerate(ints):
        out[idx] = Fraction(int(k), 10)
    return out


def _centering(mu: Sequence[Fraction]) -> np.ndarray:
    """``P = I - 1 mu^T``; then ``P^T mu = 0``, so ``P M P^T`` has zero degrees."""
    n = len(mu)
    p = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            p[i, j] = Fraction(int(i == j)) - mu[j]
    return p


def _rows(arr: np.ndarray) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(tuple(Fraction(x) for x in row) for row in arr.tolist())


def gen_psd_zero_regular(n: int, measures=None, seed: int = 0) -> StepKernel:
    """Random exactly-PSD, exactly 0-regular kernel ``P B B^T P^T``."""
    if n < 2:
        raise ValueError("need at least two blocks")
    mu = _measures(n, measures)
    rng = np.random.default_rng(seed)
    b = _rational_matrix(rng, n, n)
    p = _centering(mu)
    pb = p.dot(b)
    w = StepKernel(mu, _rows(pb.dot(pb.T)))
    assert is_regular(w, 0) and is_psd(w).holds
    return w


def _coefficient_limit(base: np.ndarray, direction: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> Fraction:
    """Largest ``c >= 0`` with ``lo <= base + c * direction <= hi`` entrywise."""
    best: Fraction | None = None
    for idx, d in np.ndenumerate(direction):
        if d > 0:
            c = (hi[idx] - base[idx]) / d
        elif d < 0:
            c = (lo[idx] - base[idx]) / d
        else:
            continue
        best = c if best is None else min(best, c)
    return Fraction(0) if best is None else best


def _round_down(x: Fraction, denominator: int = 1000) -> Fraction:
    return Fraction(math.floor(x * denominator), denominator)


_FRACTIONS = (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1))


def gen_locally_dense(
    p,
    n: int,
    seed: int = 0,
    *,
    regular: bool = False,
    measures=None,
    alpha_scale=None,
    beta_scale=None,
) -> StepKernel:
    """Random p-locally dense graphon ``p + alpha N + beta E``.

    ``N`` is PSD and ``E`` entrywise nonnegative, so ``W - p`` is copositive.
    ``alpha_scale`` / ``beta_scale`` in ``[0, 1]`` pick the coefficients as a
    fraction of the largest value keeping entries in ``[0, 1]``; by default
    they are drawn at random. With ``regular=True``, ``N`` is also 0-regular
    and ``E = 0``, giving a p-regular graphon.
    """
    p = to_fraction(p)
    if not 0 < p < 1:
        raise ValueError("p must lie strictly between 0 and 1")
    mu = _measures(n, measures)
    rng = np.random.default_rng([seed, n])
    if regular:
        nn = gen_psd_zero_regular(n, mu, seed).array()
        e = np.full((n, n), Fraction(0), dtype=object)
    else:
        b = _rational_matrix(rng, n, n)
        nn = b.dot(b.T)
        raw = rng.integers(0, 11, size=(n, n))
        e = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                e[i, j] = Fraction(int(raw[min(i, j), max(i, j)]), 10)
    a_s = _FRACTIONS[rng.integers(len(_FRACTIONS))] if alpha_scale is None else to_fraction(alpha_scale)
    b_s = _FRACTIONS[rng.integers(len(_FRACTIONS))] if beta_scale is None else to_fraction(beta_scale)
    lo = np.full((n, n), Fraction(0), dtype=object)
    hi = np.full((n, n), Fraction(1), dtype=object)
    base = np.full((n, n), p, dtype=object)
    alpha = _round_down(_coefficient_limit(base, nn, lo, hi) * a_s)
    base = base + alpha * nn
    beta = _round_down(_coefficient_limit(base, e, lo, hi) * b_s)
    w = StepKernel(mu, _rows(base + beta * e))
    assert w.is_graphon and is_locally_dense(w, p).holds
    return w


def gen_regular_graphon(p, n: int, seed: int = 0, *, measures=None) -> StepKernel:
    """Random p-regular graphon ``p + alpha P S P^T`` with ``S`` symmetric and indefinite in general.

    Unlike :func:`gen_locally_dense` nothing forces local density here.
    """
    p = to_fraction(p)
    if not 0 < p < 1:
        raise ValueError("p must lie strictly between 0 and 1")
    mu = _measures(n, measures)
    rng = np.random.default_rng([seed, n, 1])
    s = _rational_matrix(rng, n, n)
    s = s + s.T
    c = _centering(mu)
    m = c.dot(s).dot(c.T)
    lo = np.full((n, n), Fraction(0), dtype=object)
    hi = np.full((n, n), Fraction(1), dtype=object)
    base = np.full((n, n), p, dtype=object)
    a_s = Fraction(int(rng.integers(1, 5)), 4)
    alpha = _round_down(_coefficient_limit(base, m, lo, hi) * a_s)
    return StepKernel(mu, _rows(base + alpha * m))


# -- sweeps --------------------------------------------------------------------------


def sweep_graphs(
    w: StepKernel, max_vertices: int = 6, min_vertices: int = 3
) -> list[tuple[Graph, Fraction]]:
    """Exact ``t(H, W)`` for one graph per isomorphism class of connected graphs with min degree >= 2.

    Sorted by density, ties broken by canonical form.
    """
    if max_vertices > SWEEP_VERTEX_CAP:
        raise CapExceededError(f"sweeps are capped at {SWEEP_VERTEX_CAP} vertices")
    rows = [(h, density_dp(h, w)) for h in connected_two_cores(max_vertices, min_vertices)]
    rows.sort(key=lambda r: (r[1], canonical_form(r[0])))
    return rows


# -- reports -------------------------------------------------------------------------


def _num_to_json(x):
    return fraction_str(x) if isinstance(x, Fraction) else float(x)


def _num_from_json(x):
    return to_fraction(x) if isinstance(x, str) else float(x)


@dataclass(frozen=True)
class SearchReport:
    """Outcome of a negative-density hunt.

    The kernel is ``P L diag(weights) L^T P^T`` on ``measures``; ``weights``
    of ``None`` means all ones. Entries of ``factor`` are floats straight from
    the search, or Fractions once certified (or when built exactly).
    """

    best_objective: float
    factor: tuple[tuple, ...]
    measures: tuple[Fraction, ...]
    graph: Graph
    seed: int
    restarts_used: int
    steps: int
    best_restart: int = 0
    weights: tuple | None = None
    certified: bool = False
    certified_value: Fraction | None = None

    def __post_init__(self) -> None:
        if self.certified and (self.certified_value is None or self.certified_value >= 0):
            raise ValueError("a certified report needs a negative exact value")

    def to_json(self) -> dict:
        out = {
            "graph": graph_to_json(self.graph),
            "seed": self.seed,
            "restarts_used": self.restarts_used,
            "best_restart": self.best_restart,
            "steps": self.steps,
            "best_objective": self.best_objective,
            "measures": [fraction_str(m) for m in self.measures],
            "factor": [[_num_to_json(x) for x in row] for row in self.factor],
            "weights": None if self.weights is None else [_num_to_json(x) for x in self.weights],
            "certified": self.certified,
            "certified_value": None if self.certified_value is None else fraction_str(self.certified_value),
        }
        if self.certified_value is not None:
            out["kernel"] = rebuild_kernel(self).to_json()
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, data: dict | str) -> SearchReport:
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls(
                best_objective=float(data["best_objective"]),
                factor=tuple(tuple(_num_from_json(x) for x in row) for row in data["factor"]),
                measures=tuple(to_fraction(m) for m in data["measures"]),
                graph=parse_graph(json.dumps(data["graph"])),
                seed=int(data["seed"]),
                restarts_used=int(data["restarts_used"]),
                steps=int(data["steps"]),
                best_restart=int(data.get("best_restart", 0)),
                weights=None if data.get("weights") is None else tuple(_num_from_json(x) for x in data["weights"]),
                certified=bool(data.get("certified", False)),
                certified_value=None if data.get("certified_value") is None else to_fraction(data["certified_value"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed search report: {exc}") from exc


def rebuild_kernel(report: SearchReport) -> StepKernel:
    """Exact kernel from a report whose parameters are all rational."""
    mu = report.measures
    factor = np.array([[to_fraction(x) for x in row] for row in report.factor], dtype=object)
    r = factor.shape[1]
    weights = [Fraction(1)] * r if report.weights is None else [to_fraction(x) for x in report.weights]
    pl = _centering(mu).dot(factor)
    scaled = pl * np.array(weights, dtype=object)[None, :]
    return StepKernel(mu, _rows(scaled.dot(pl.T)))


def kernel_report(h: Graph, w: StepKernel, seed: int = 0) -> SearchReport:
    """Wrap a given PSD 0-regular kernel as an exact report (no search)."""
    if not is_regular(w, 0):
        raise ValueError("kernel is not 0-regular")
    factor, diag = psd_factor(w.matrix)
    report = SearchReport(
        best_objective=0.0,
        factor=tuple(tuple(row) for row in factor),
        measures=w.measures,
        graph=h,
        seed=seed,
        restarts_used=0,
        steps=0,
        weights=tuple(diag),
    )
    if rebuild_kernel(report) != w:
        raise AssertionError("factorisation does not reproduce the kernel")
    f = np.array(w.float_matrix())
    return replace(report, best_objective=_objective_value(h, f, w.float_measures()))


# -- float search --------------------------------------------------------------------


def _objective_value(h: Graph, a: np.ndarray, mu: np.ndarray) -> float:
    """Scale-free objective ``t(H, A) / ||A||_2^e(H)``."""
    norm = math.sqrt(float(mu @ (a * a) @ mu))
    if norm < 1e-300:
        return 0.0
    return density_float(h, a / norm, mu)


def _run_restart(args) -> tuple[float, np.ndarray]:
    h, n, steps, seed, restart, mu = args
    rng = np.random.default_rng([seed, restart])
    p = np.eye(n) - np.outer(np.ones(n), mu)

    def objective(factor: np.ndarray) -> float:
        pl = p @ factor
        return _objective_value(h, pl @ pl.T, mu)

    factor = rng.standard_normal((n, n))
    value = objective(factor)
    step, scales, failures = 0.5, 0, 0
    for _ in range(steps):
        idx = int(rng.integers(n * n))
        for sign in (1.0, -1.0):
            trial = factor.copy()
            trial.flat[idx] += sign * step
            v = objective(trial)
            if v < value:
                factor, value, failures = trial, v, 0
                break
        else:
            failures += 1
            if failures >= n * n:
                step, failures = step / 2, 0
                scales += 1
                if scales >= STEP_SCALES:
                    break
    return value, factor


def minimize_density(
    h: Graph,
    n: int,
    restarts: int = 10,
    steps: int = 400,
    seed: int = 0,
    *,
    measures=None,
    target: float | None = None,
    workers: int = 1,
) -> SearchReport:
    """Random-restart coordinate search for a PSD 0-regular kernel minimising ``t(H, W)``.

    Restart ``r`` draws from ``default_rng([seed, r])``. With ``target`` set,
    restarts stop after the first one whose objective is below it. The result
    does not depend on ``workers``.
    """
    if h.vertex_count > SEARCH_VERTEX_CAP:
        raise CapExceededError(f"search is capped at {SEARCH_VERTEX_CAP} vertices")
    if not 2 <= n <= SEARCH_BLOCK_CAP:
        raise CapExceededError(f"search needs 2 <= n <= {SEARCH_BLOCK_CAP} blocks")
    if restarts < 1:
        raise ValueError("need at least one restart")
    mu_exact = _measures(n, measures)
    mu = np.array([float(m) for m in mu_exact])
    batch = max(1, workers)
    results: list[tuple[float, np.ndarray]] = []
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        done = False
        for start in range(0, restarts, batch):
            jobs = [(h, n, steps, seed, r, mu) for r in range(start, min(start + batch, restarts))]
            outs = list(pool.map(_run_restart, jobs)) if pool else [_run_restart(j) for j in jobs]
            for out in outs:
                results.append(out)
                if target is not None and out[0] < target:
                    done = True
                    break
            if done:
                break
    finally:
        if pool:
            pool.shutdown()
    best = min(range(len(results)), key=lambda r: (results[r][0], r))
    value, factor = results[best]
    return SearchReport(
        best_objective=float(value),
        factor=tuple(tuple(float(x) for x in row) for row in factor),
        measures=mu_exact,
        graph=h,
        seed=seed,
        restarts_used=len(results),
        steps=steps,
        best_restart=best,
    )


def _round(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(float(x)).limit_denominator(ROUNDING_DENOMINATOR)


def certify_counterexample(report: SearchReport) -> SearchReport:
    """Round float parameters to rationals, rebuild the kernel exactly and decide ``t(H, W) < 0``.

    Rational parameters are kept as they are. The rebuilt kernel is PSD and
    0-regular by construction; both facts are re-checked exactly.
    """
    factor = tuple(tuple(_round(x) for x in row) for row in report.factor)
    weights = None if report.weights is None else tuple(max(_round(x), Fraction(0)) for x in report.weights)
    rounded = replace(report, factor=factor, weights=weights, certified=False, certified_value=None)
    w = rebuild_kernel(rounded)
    if not (is_regular(w, 0) and is_psd(w).holds):
        raise AssertionError("rebuilt kernel left the PSD 0-regular cone")
    value = density_dp(report.graph, w)
    return replace(rounded, certified=value < 0, certified_value=value)
