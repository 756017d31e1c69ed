"""The reproduction suite: seven exact checks with timings.

Each ``check_*`` function returns a :class:`SuiteResult`; the CLI and the
acceptance tests both call them. Every pass/fail decision is made with exact
rational arithmetic.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import graphs as g
from .cones import is_locally_dense, is_psd, cut_norm
from .homdensity import (
    conditioned_density,
    cycle_density_spectral_exact,
    density_dp,
    psd_expansion,
    rooted_density_kernel,
)
from .kernels import (
    BlockFunction,
    StepKernel,
    five_block_psd_kernel,
    four_block_dense_kernel,
    fraction_str,
    hadamard_product,
    internal_density,
    internal_mass,
    is_regular,
    mean,
    operator_power,
    operator_product,
    reweight,
    shift,
    tensor_index,
    tensor_power,
    tensor_product,
)
from .search import (
    certify_counterexample,
    gen_locally_dense,
    gen_psd_zero_regular,
    gen_regular_graphon,
    kernel_report,
    minimize_density,
    sweep_graphs,
)

DEFAULT_PS = (Fraction(1, 10), Fraction(1, 5), Fraction(3, 10))


@dataclass
class SuiteResult:
    name: str
    passed: bool
    values: dict[str, str] = field(default_factory=dict)
    seconds: float = 0.0
    failures: list[str] = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name} ({self.seconds:.2f} s)"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "status": "pass" if self.passed else "fail",
            "values": self.values,
            "seconds": round(self.seconds, 3),
            "failures": self.failures,
        }


class _Recorder:
    def __init__(self, name: str):
        self.result = SuiteResult(name, True)
        self._start = time.perf_counter()

    def expect(self, ok: bool, what: str) -> bool:
        if not ok:
            self.result.passed = False
            if len(self.result.failures) < 20:
                self.result.failures.append(what)
        return ok

    def value(self, key: str, v) -> None:
        self.result.values[key] = fraction_str(v) if isinstance(v, Fraction) else str(v)

    def done(self) -> SuiteResult:
        self.result.seconds = time.perf_counter() - self._start
        return self.result


def _random_measures(rng: np.random.Generator, n: int) -> tuple[Fraction, ...]:
    raw = [int(x) for x in rng.integers(1, 6, size=n)]
    total = sum(raw)
    return tuple(Fraction(x, total) for x in raw)


def random_kernel(seed: int, n: int | None = None, *, max_blocks: int = 5) -> StepKernel:
    """Symmetric kernel with entries ``k/10`` in ``[-1, 1]`` on random measures."""
    rng = np.random.default_rng([seed, 7])
    n = int(rng.integers(1, max_blocks + 1)) if n is None else n
    mu = _random_measures(rng, n)
    raw = rng.integers(-10, 11, size=(n, n))
    rows = tuple(tuple(Fraction(int(raw[min(i, j), max(i, j)]), 10) for j in range(n)) for i in range(n))
    return StepKernel(mu, rows)


def random_psd_kernel(seed: int, n: int | None = None, *, max_blocks: int = 5) -> StepKernel:
    """``B B^T`` with a random ``n x r`` rational ``B``, on random measures."""
    rng = np.random.default_rng([seed, 11])
    n = int(rng.integers(1, max_blocks + 1)) if n is None else n
    r = int(rng.integers(1, n + 1))
    b = rng.integers(-5, 6, size=(n, r))
    a = b @ b.T
    return StepKernel(_random_measures(rng, n), tuple(tuple(Fraction(int(x), 5) for x in row) for row in a))


# -- criterion 1 ---------------------------------------------------------------------

TENSOR_WITNESS = ((0, 1), (1, 0), (1, 1), (1, 2))


def check_four_block(ps: Sequence = DEFAULT_PS) -> SuiteResult:
    """Local density, edge density, complement densities, tensor witness, operator-power mass."""
    rec = _Recorder("four-block kernel properties")
    for p in ps:
        p = Fraction(p)
        w = four_block_dense_kernel(p)
        tag = fraction_str(p)
        ld = is_locally_dense(w, p)
        if rec.expect(ld.holds, f"p={tag}: not p-locally dense"):
            rec.value(f"p={tag} locally dense", True)
        else:
            rec.value(f"p={tag} locally dense", f"violated, f={ld.witness.to_json()} value={fraction_str(ld.value)}")
        t2 = density_dp(g.clique(2), w)
        rec.value(f"p={tag} t(K2)", t2)
        rec.expect(t2 == Fraction(9, 8) * p, f"p={tag}: t(K2) != 9p/8")
        for j in (1, 2, 3):
            rest = [b for b in range(4) if b != j]
            d = internal_density(w, rest)
            rec.expect(d == p, f"p={tag}: complement of block {j} has density {d}")
        sq = tensor_product(w, w)
        sq_ld = is_locally_dense(sq, p * p)
        rec.expect(not sq_ld.holds, f"p={tag}: tensor square is p^2-locally dense")
        blocks = [tensor_index(i, j, 4) for i, j in TENSOR_WITNESS]
        d = internal_density(sq, blocks)
        rec.value(f"p={tag} tensor witness density", d)
        rec.expect(d == Fraction(3, 4) * p * p, f"p={tag}: tensor witness density {d}")
        rec.expect(d < p * p, f"p={tag}: tensor witness is not a violation")
        for ell, below in ((5, True), (4, False)):
            power = operator_power(w, ell)
            mass = internal_mass(power, [0])
            floor = p**ell * w.measures[0] ** 2
            rec.value(f"p={tag} block-0 mass of power {ell}", mass)
            rec.expect(mass == Fraction(3**ell, 4 ** (ell + 1)) * p**ell, f"p={tag}, l={ell}: mass {mass}")
            rec.expect((mass < floor) == below, f"p={tag}, l={ell}: comparison with p^l |I|^2 is wrong")
    rec.expect(Fraction(3**5, 4**6) < Fraction(1, 16) < Fraction(3**4, 4**5), "3^5/4^6 < 1/16 < 3^4/4^5")
    return rec.done()


# -- criterion 2 ---------------------------------------------------------------------


def check_five_block(kernel: StepKernel | None = None, max_vertices: int = 6) -> SuiteResult:
    """PSD, 0-regular, and a sweep graph with negative exact density."""
    rec = _Recorder("five-block PSD kernel with negative density")
    w = five_block_psd_kernel() if kernel is None else kernel
    rec.expect(is_psd(w).holds, "kernel is not PSD")
    rec.expect(is_regular(w, 0), "kernel is not 0-regular")
    rows = sweep_graphs(w, max_vertices)
    negative = [(h, t) for h, t in rows if t < 0]
    rec.value("graphs swept", len(rows))
    rec.value("negative graphs", len(negative))
    if rec.expect(bool(negative), "no graph with negative density"):
        h, t = negative[0]
        rec.value("min density", t)
        rec.value("min density (decimal)", f"{float(t):.12g}")
        rec.value("min graph", g.format_graph(h).strip().replace("\n", "; "))
    return rec.done()


# -- criterion 3 ---------------------------------------------------------------------


def _graphs_up_to(v: int) -> list[g.Graph]:
    return [h for k in range(1, v + 1) for h in g.graph_classes(k)]


def check_identities(count: int = 100, seed: int = 0) -> SuiteResult:
    """Exact identities between densities, traces, tensor/operator products and conditionings."""
    rec = _Recorder("density identities")
    small = _graphs_up_to(4)
    medium = _graphs_up_to(5)
    for k in range(count):
        w = random_kernel(seed * 100003 + k)
        for c in range(3, 9):
            t = density_dp(g.cycle(c), w)
            rec.expect(t == cycle_density_spectral_exact(c, w), f"kernel {k}: cycle C{c} trace identity")
        # partner kept small so the product stays at most 10 blocks
        other = random_kernel(seed * 100003 + k + 50_000, max_blocks=max(1, 10 // w.n))
        prod = tensor_product(w, other)
        for h in medium:
            lhs = density_dp(h, prod)
            rec.expect(lhs == density_dp(h, w) * density_dp(h, other), f"kernel {k}: tensor product on {h}")
        powers = {m: operator_power(w, m) for m in range(1, 5)}
        for h in small:
            base = density_dp(h, w)
            for ell in range(1, 4):
                lhs = density_dp(g.subdivide(h, ell), w)
                rec.expect(lhs == density_dp(h, powers[ell + 1]), f"kernel {k}: subdivision {ell} of {h}")
            total = sum((term.value for term in psd_expansion(h, Fraction(1, 5), w)), Fraction(0))
            rec.expect(total == density_dp(h, shift(w, Fraction(1, 5))), f"kernel {k}: expansion of {h}")
            for v in range(h.vertex_count):
                cond = sum(
                    (w.measures[b] * conditioned_density(h, w, {v: b}) for b in range(w.n)),
                    Fraction(0),
                )
                rec.expect(cond == base, f"kernel {k}: conditioning vertex {v} of {h}")
        for ell in range(1, 5):
            rec.expect(density_dp(g.path(ell), w) == mean(powers[ell]), f"kernel {k}: path P{ell}")
    rec.value("kernels", count)
    return rec.done()


# -- criterion 4 ---------------------------------------------------------------------


def check_cone_closure(count: int = 100, seed: int = 0) -> SuiteResult:
    """PSD closure under products; copositive plus regular gives PSD; reweighting; tensor squares."""
    rec = _Recorder("cone closure")
    for k in range(count):
        s = seed * 100003 + k
        w = random_psd_kernel(s)
        for m in (2, 3):
            rec.expect(is_psd(operator_power(w, m)).holds, f"instance {k}: operator power {m}")
        rec.expect(is_psd(tensor_power(w, 2)).holds, f"instance {k}: tensor square")
        if w.n <= 2:
            rec.expect(is_psd(tensor_power(w, 3)).holds, f"instance {k}: tensor cube")
        w2 = random_psd_kernel(s + 50_000, w.n)
        w2 = StepKernel(w.measures, w2.matrix)
        rec.expect(is_psd(hadamard_product(w, w2)).holds, f"instance {k}: Hadamard product")
        side = random_kernel(s + 70_000, w.n)
        side = StepKernel(w.measures, side.matrix)
        sandwich = operator_product(operator_product(side, w), side)
        rec.expect(sandwich.is_symmetric and is_psd(sandwich).holds, f"instance {k}: sandwich")
    regular_ld = 0
    regular_not_ld = 0
    for k in range(count):
        s = seed * 100003 + k
        n = 2 + k % 4
        p = (Fraction(1, 5), Fraction(1, 2))[k % 2]
        mu = _random_measures(np.random.default_rng([s, 3]), n)
        for w in (gen_locally_dense(p, n, s, regular=True, measures=mu), gen_regular_graphon(p, n, s, measures=mu)):
            rec.expect(is_regular(w, p), f"instance {k}: generator is not p-regular")
            ld = is_locally_dense(w, p).holds
            psd = is_psd(shift(w, -p)).holds
            rec.expect(ld == psd, f"instance {k}: regular kernel with local density {ld} but PSD {psd}")
            regular_ld += ld
            regular_not_ld += not ld
            weight = BlockFunction(tuple(Fraction(int(x), 3) for x in np.random.default_rng([s, 5]).integers(1, 10, n)))
            rec.expect(is_locally_dense(reweight(w, weight), p).holds == ld, f"instance {k}: reweighting changed the verdict")
            if ld and n <= 4:
                sq = tensor_product(w, w)
                rec.expect(is_regular(sq, p * p), f"instance {k}: tensor square not p^2-regular")
                rec.expect(is_locally_dense(sq, p * p).holds, f"instance {k}: tensor square not p^2-locally dense")
        gen = gen_locally_dense(p, n, s + 1, measures=mu)
        weight = BlockFunction(tuple(Fraction(int(x), 4) for x in np.random.default_rng([s, 6]).integers(1, 9, n)))
        rec.expect(is_locally_dense(reweight(gen, weight), p).holds, f"instance {k}: reweighting broke local density")
    rec.value("regular locally dense", regular_ld)
    rec.value("regular not locally dense", regular_not_ld)
    return rec.done()


# -- criterion 5 ---------------------------------------------------------------------


def theta_parameters(max_paths: int = 3, max_internal: int = 3) -> list[tuple[int, ...]]:
    out = []
    for t in range(1, max_paths + 1):
        for combo in itertools.combinations_with_replacement(range(max_internal + 1), t):
            if combo.count(0) <= 1:
                out.append(combo)
    return out


def check_psd_nonnegativity(count: int = 50, seed: int = 0) -> SuiteResult:
    """Theta graphs, spanning subgraphs of H0 and degree-one graphs on PSD 0-regular kernels."""
    rec = _Recorder("PSD-nonnegativity")
    thetas = [(s, g.theta(s)) for s in theta_parameters()]
    h0_subs = list(g.spanning_subgraphs(g.h0()))
    leafy = [h for v in range(2, 7) for h in g.graph_classes(v) if g.has_degree_one_vertex(h)]
    min_h0 = None
    for k in range(count):
        s = seed * 100003 + k
        n = 2 + k % 4
        mu = _random_measures(np.random.default_rng([s, 9]), n)
        w = gen_psd_zero_regular(n, mu, s)
        for params, h in thetas:
            rec.expect(density_dp(h, w) >= 0, f"kernel {k}: theta{params} negative")
            rooted = rooted_density_kernel(h, 0, 1, w)
            rec.expect(is_psd(rooted).holds, f"kernel {k}: theta{params} rooted kernel not PSD")
        for i, h in enumerate(h0_subs):
            t = density_dp(h, w)
            min_h0 = t if min_h0 is None else min(min_h0, t)
            rec.expect(t >= 0, f"kernel {k}: H0 subgraph {i} negative")
        for h in leafy:
            rec.expect(density_dp(h, w) == 0, f"kernel {k}: degree-one graph {h} nonzero")
    rec.value("theta graphs", len(thetas))
    rec.value("H0 subgraphs", len(h0_subs))
    rec.value("degree-one graphs", len(leafy))
    if min_h0 is not None:
        rec.value("min H0 subgraph density", min_h0)
    return rec.done()


# -- criterion 6 ---------------------------------------------------------------------


def glue_cases() -> list[tuple[str, g.Graph, g.GlueSpec]]:
    """First factors for the glue-product inequality (the second is K2 or K3)."""
    return [
        ("diamond, I={}", g.diamond(), g.GlueSpec((), 0)),
        ("diamond, I={2}", g.diamond(), g.GlueSpec((2,), 0)),
        ("diamond, I={1,3}", g.diamond(), g.GlueSpec((1, 3), 0)),
        ("star2, I=leaves", g.star(2), g.GlueSpec((1, 2), 0)),
        ("star3, I=leaves", g.star(3), g.GlueSpec((1, 2, 3), 0)),
        ("path1, I={1}", g.path(1), g.GlueSpec((1,), 0)),
        ("path2, I={2}", g.path(2), g.GlueSpec((2,), 0)),
        ("path3, I={3}", g.path(3), g.GlueSpec((3,), 0)),
    ]


def check_knrs(count: int = 100, seed: int = 0) -> SuiteResult:
    """Density lower bounds on generated locally dense graphons."""
    rec = _Recorder("KNRS inequalities")
    fixed = [(f"K{k}", g.clique(k), k * (k - 1) // 2) for k in range(2, 6)]
    fixed += [(f"C{2 * l + 1}", g.cycle(2 * l + 1), 2 * l + 1) for l in range(1, 4)]
    fixed += [(f"wheel{k}", g.wheel(k), 2 * k) for k in range(3, 6)]
    for name, h1, spec in glue_cases():
        for h2name, h2 in (("K2", g.clique(2)), ("K3", g.clique(3))):
            glued = g.glue(h1, spec, h2)
            expo = h2.vertex_count * h1.edge_count + h2.edge_count
            assert glued.edge_count == expo
            fixed.append((f"glue({name}; {h2name})", glued, expo))
    strict = 0
    for p in (Fraction(1, 5), Fraction(1, 2)):
        for k in range(count):
            s = seed * 100003 + k
            n = 1 + k % 4
            mu = _random_measures(np.random.default_rng([s, 13]), n)
            w = gen_locally_dense(p, n, s, measures=mu)
            for name, h, e in fixed:
                rec.expect(density_dp(h, w) >= p**e, f"p={p}, kernel {k}: {name} below p^{e}")
            if cut_norm(shift(w, -p)) > 0:
                strict += 1
                rec.expect(density_dp(g.cycle(3), w) > p**3, f"p={p}, kernel {k}: non-constant W with t(C3) = p^3")
    rec.value("graphs", len(fixed))
    rec.value("non-constant kernels (strict C3 check)", strict)
    return rec.done()


# -- criterion 7 ---------------------------------------------------------------------


def check_search(seed: int = 0, restarts: int = 200, steps: int = 300) -> SuiteResult:
    """No certified negatives on H0 subgraphs; a certified negative on some 6-vertex graph; determinism."""
    rec = _Recorder("search and certification")
    seen: set[bytes] = set()
    h0_classes = []
    for h in g.spanning_subgraphs(g.h0()):
        key = g.canonical_form(h)
        if key not in seen:
            seen.add(key)
            h0_classes.append(h)
    for h in h0_classes:
        rep = certify_counterexample(minimize_density(h, 5, restarts=2, steps=steps, seed=seed))
        rec.expect(not rep.certified, f"H0 subgraph {h} certified negative")
    rec.value("H0 subgraph classes searched", len(h0_classes))
    candidates = [
        h for h in g.connected_two_cores(6, min_vertices=6) if not g.is_theta_graph(h)
    ]
    candidates.sort(key=lambda h: (-h.edge_count, g.canonical_form(h)))
    found = None
    for h in candidates:
        rep = minimize_density(h, 5, restarts=restarts, steps=steps, seed=seed, target=-1e-6)
        if rep.best_objective < -1e-6:
            cert = certify_counterexample(rep)
            if cert.certified:
                found = cert
                break
    if rec.expect(found is not None, "no certified negative within the restart budget"):
        rec.value("graph", g.format_graph(found.graph).strip().replace("\n", "; "))
        rec.value("restarts used", found.restarts_used)
        rec.value("certified density", found.certified_value)
        again = certify_counterexample(
            minimize_density(found.graph, 5, restarts=found.restarts_used, steps=steps, seed=seed, target=-1e-6)
        )
        rec.expect(again.dumps() == found.dumps(), "rerun with the same seed differs")
    direct = certify_counterexample(kernel_report(sweep_graphs(five_block_psd_kernel(), 6)[0][0], five_block_psd_kernel()))
    rec.expect(direct.certified, "five-block kernel does not certify directly")
    return rec.done()


CHECKS: dict[str, Callable[..., SuiteResult]] = {
    "four-block": check_four_block,
    "five-block": check_five_block,
    "identities": check_identities,
    "cone-closure": check_cone_closure,
    "psd-nonnegativity": check_psd_nonnegativity,
    "knrs": check_knrs,
    "search": check_search,
}


def run_suite(
    ps: Sequence = DEFAULT_PS, seed: int = 0, five_block: StepKernel | None = None
) -> list[SuiteResult]:
    return [
        check_four_block(ps),
        check_five_block(five_block),
        check_identities(seed=seed),
        check_cone_closure(seed=seed),
        check_psd_nonnegativity(seed=seed),
        check_knrs(seed=seed),
        check_search(seed=seed),
    ]
