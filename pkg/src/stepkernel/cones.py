"""Cone membership for step kernels: PSD, copositive, locally dense; cut norm and spectra.

With strictly positive block measures a kernel lies in the PSD (copositive)
cone exactly when its block matrix does, so every decision here is made on the
matrix ``A``. Kernel-level witnesses are obtained by dividing a matrix-level
vector by the block measures, which leaves the quadratic-form value unchanged.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import CapExceededError, ConvergenceError
from .kernels import BlockFunction, StepKernel, fraction_str, shift, to_fraction

Matrix = Sequence[Sequence[Fraction]]

SIMPLEX_CAP = 16
CUT_NORM_CAP = 14
SPECTRUM_CAP = 64
RESIDUAL_TOL = 1e-9

# Float screening of KKT supports. A support is discarded only when its
# well-conditioned float solution is clearly infeasible; everything else is
# re-solved exactly.
_COND_LIMIT = 1e8
_SCREEN_TOL = 1e-6


@dataclass(frozen=True)
class ConeVerdict:
    holds: bool
    witness: BlockFunction | None = None
    value: Fraction | None = None

    def __post_init__(self) -> None:
        if not self.holds and (self.witness is None or self.value is None or self.value >= 0):
            raise ValueError("a violated verdict needs a witness with negative value")

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "witness": None if self.witness is None else self.witness.to_json(),
            "value": None if self.value is None else fraction_str(self.value),
        }


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: list[float]
    residual: float  # max |S v - lambda v| over the computed pairs
    tolerance: float  # residual bound the solver guarantees, relative to ||S||_F

    @property
    def converged(self) -> bool:
        return self.residual <= self.tolerance


def _as_fraction_matrix(m) -> list[list[Fraction]]:
    rows = [[to_fraction(x) for x in row] for row in m]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix must be square")
    if any(rows[i][j] != rows[j][i] for i in range(n) for j in range(i)):
        raise ValueError("matrix must be symmetric")
    return rows


def quadratic_value(m: Matrix, x: Sequence[Fraction]) -> Fraction:
    n = len(x)
    return sum((x[i] * m[i][j] * x[j] for i in range(n) if x[i] for j in range(n) if x[j]), Fraction(0))


def _solve_exact(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Gaussian elimination over the rationals; ``None`` if ``a`` is singular."""
    n = len(a)
    aug = [list(row) + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        pr = aug[col]
        inv = 1 / pr[col]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col] * inv
                row = aug[r]
                for c in range(col, n + 1):
                    row[c] -= f * pr[c]
    return [aug[i][n] / aug[i][i] for i in range(n)]


# -- positive semidefiniteness --------------------------------------------------------


def _pair_witness(m: list[list[Fraction]], n: int):
    """Most negative ``e_i - sign(m_ij) e_j`` form, if any is negative."""
    best = None
    for i in range(n):
        for j in range(i + 1, n):
            val = m[i][i] + m[j][j] - 2 * abs(m[i][j])
            if val < 0 and (best is None or val < best[0]):
                best = (val, i, j)
    if best is None:
        return None
    _, i, j = best
    x = [Fraction(0)] * n
    x[i] = Fraction(1)
    x[j] = Fraction(-1 if m[i][j] > 0 else 1)
    return x


def psd_matrix(m) -> ConeVerdict:
    """Exact PSD test of a symmetric rational matrix by pivoted symmetric elimination.

    The witness (if any) is a matrix-level vector ``x`` with ``x^T M x < 0``.
    """
    m = _as_fraction_matrix(m)
    n = len(m)
    for i in range(n):
        if m[i][i] < 0:
            x = [Fraction(int(k == i)) for k in range(n)]
            return ConeVerdict(False, BlockFunction(tuple(x)), m[i][i])
    x = _pair_witness(m, n)
    if x is None:
        x = _schur_witness(m, n)
    if x is None:
        return ConeVerdict(True)
    return ConeVerdict(False, BlockFunction(tuple(x)), quadratic_value(m, x))


def _schur_witness(m: list[list[Fraction]], n: int) -> list[Fraction] | None:
    s = [list(row) for row in m]
    rest = list(range(n))
    pivots: list[int] = []
    u: dict[int, Fraction] | None = None
    while rest:
        j = max(rest, key=lambda k: (s[k][k], -k))
        d = s[j][j]
        if d > 0:
            rest.remove(j)
            pivots.append(j)
            for r in rest:
                if s[r][j] == 0:
                    continue
                f = s[r][j] / d
                for c in rest:
                    s[r][c] -= f * s[j][c]
            continue
        if d < 0:
            u = {j: Fraction(1)}
            break
        off = next(((r, c) for r in rest for c in rest if r < c and s[r][c] != 0), None)
        if off is None:
            return None
        r, c = off
        u = {r: Fraction(1), c: Fraction(-1 if s[r][c] > 0 else 1)}
        break
    if u is None:
        return None
    # lift the Schur-complement vector: x_P = -A_PP^{-1} A_{P,R} u
    x = [Fraction(0)] * n
    for k, val in u.items():
        x[k] = val
    if pivots:
        app = [[m[p][q] for q in pivots] for p in pivots]
        rhs = [sum((m[p][k] * val for k, val in u.items()), Fraction(0)) for p in pivots]
        z = _solve_exact(app, rhs)
        for p, zp in zip(pivots, z):
            x[p] = -zp
    return x


def is_psd(w: StepKernel) -> ConeVerdict:
    """Kernel PSD test; the witness is a block function ``f`` with ``<f, T_W f> < 0``."""
    return _to_kernel_verdict(psd_matrix(_symmetric_matrix(w)), w)


def psd_factor(m) -> tuple[list[list[Fraction]], list[Fraction]]:
    """Exact ``M = L diag(d) L^T`` with ``d > 0`` for a PSD rational matrix.

    ``L`` is ``n x r`` (``r`` = rank). Raises ``ValueError`` if ``M`` is not PSD.
    """
    m = _as_fraction_matrix(m)
    if not psd_matrix(m).holds:
        raise ValueError("matrix is not positive semidefinite")
    n = len(m)
    s = [list(row) for row in m]
    rest = list(range(n))
    cols: list[list[Fraction]] = []
    diag: list[Fraction] = []
    while rest:
        j = max(rest, key=lambda k: (s[k][k], -k))
        d = s[j][j]
        if d == 0:  # PSD with zero diagonal: the remaining block vanishes
            break
        rest.remove(j)
        col = [Fraction(0)] * n
        col[j] = Fraction(1)
        for r in rest:
            col[r] = s[r][j] / d
        for r in rest:
            for c in rest:
                s[r][c] -= col[r] * d * col[c]
        cols.append(col)
        diag.append(d)
    factor = [[cols[k][i] for k in range(len(cols))] for i in range(n)]
    return factor, diag


def _symmetric_matrix(w: StepKernel):
    if not w.is_symmetric:
        raise ValueError("cone tests need a symmetric kernel")
    return w.matrix


def _to_kernel_verdict(v: ConeVerdict, w: StepKernel) -> ConeVerdict:
    if v.holds:
        return v
    f = tuple(x / m for x, m in zip(v.witness, w.measures))
    return ConeVerdict(False, BlockFunction(f), v.value)


# -- copositivity --------------------------------------------------------------------


def _kkt_solution(m: list[list[Fraction]], support: Sequence[int]) -> tuple[Fraction, list[Fraction]] | None:
    """Solve ``M_S x = lam 1, 1^T x = 1`` exactly; ``None`` if singular or infeasible."""
    k = len(support)
    a = [[m[i][j] for j in support] + [Fraction(-1)] for i in support]
    a.append([Fraction(1)] * k + [Fraction(0)])
    sol = _solve_exact(a, [Fraction(0)] * k + [Fraction(1)])
    if sol is None or any(v < 0 for v in sol[:k]):
        return None
    return sol[k], sol[:k]


def _float_candidates(m: list[list[Fraction]]):
    """Yield ``(lambda, error bound, support)`` for supports that survive float screening.

    ``None`` marks ill-conditioned systems, which must be decided exactly.
    """
    n = len(m)
    mf = np.array([[float(x) for x in row] for row in m])
    scale = float(np.abs(mf).max()) or 1.0
    mf /= scale
    for k in range(2, n + 1):
        idx = np.array(list(itertools.combinations(range(n), k)))
        kkt = np.zeros((len(idx), k + 1, k + 1))
        kkt[:, :k, :k] = mf[idx[:, :, None], idx[:, None, :]]
        kkt[:, :k, k] = -1.0
        kkt[:, k, :k] = 1.0
        cond = np.linalg.cond(kkt)
        good = np.isfinite(cond) & (cond < _COND_LIMIT)
        rhs = np.zeros((int(good.sum()), k + 1, 1))
        rhs[:, k, 0] = 1.0
        sol = np.linalg.solve(kkt[good], rhs)[:, :, 0] if good.any() else np.zeros((0, k + 1))
        x = sol[:, :k]
        bound = _SCREEN_TOL * np.maximum(1.0, np.abs(sol).max(axis=1))
        feasible = x.min(axis=1) >= -bound
        errs = bound[feasible] * scale
        for row, lam, err in zip(idx[good][feasible], sol[feasible, k], errs):
            yield lam * scale, err, tuple(int(i) for i in row)
        for row in idx[~good]:
            yield None, None, tuple(int(i) for i in row)


def _simplex_search(m: list[list[Fraction]], stop_below_zero: bool):
    """Exact minimum of ``x^T M x`` over the simplex via KKT points of every support.

    Only supports with a nonsingular KKT system are needed: along the null
    direction of a singular system the value is constant, so the minimum is also
    attained on a smaller support.
    """
    n = len(m)
    best_val: Fraction | None = None
    best_x: list[Fraction] | None = None

    def consider(val: Fraction, support, xs) -> bool:
        nonlocal best_val, best_x
        if best_val is None or val < best_val:
            best_val = val
            best_x = [Fraction(0)] * n
            for i, v in zip(support, xs):
                best_x[i] = v
        return stop_below_zero and best_val < 0

    for i in range(n):
        if consider(m[i][i], (i,), [Fraction(1)]):
            return best_val, best_x
    well, ill = [], []
    for lam, err, support in _float_candidates(m):
        (ill if lam is None else well).append((lam, err, support))
    for _, _, support in ill:
        res = _kkt_solution(m, support)
        if res is not None and consider(res[0], support, res[1]):
            return best_val, best_x
    well.sort(key=lambda t: t[0])
    for lam, err, support in well:
        if lam - err > best_val:
            continue
        res = _kkt_solution(m, support)
        if res is not None and consider(res[0], support, res[1]):
            return best_val, best_x
    return best_val, best_x


def min_simplex_quadratic(m) -> tuple[Fraction, list[Fraction]]:
    """Exact ``min x^T M x`` over ``{x >= 0, sum x = 1}`` and a minimiser."""
    m = _as_fraction_matrix(m)
    if len(m) > SIMPLEX_CAP:
        raise CapExceededError(f"simplex minimisation is capped at {SIMPLEX_CAP} dimensions")
    return _simplex_search(m, stop_below_zero=False)


def _replicator_witness(m: list[list[Fraction]], seed: int = 0) -> list[Fraction] | None:
    """Float replicator dynamics looking for a cheap exact copositivity violation."""
    n = len(m)
    mf = np.array([[float(x) for x in row] for row in m])
    q = mf.max() + 1.0 - mf  # positive entries; maximising x^T Q x minimises x^T M x
    rng = np.random.default_rng(seed)
    starts = [np.full(n, 1.0 / n)] + [rng.dirichlet(np.ones(n)) for _ in range(7)]
    for x in starts:
        for _ in range(500):
            qx = q @ x
            x = x * qx / (x @ qx)
        if x @ mf @ x < 0:
            cand = [Fraction(float(v)).limit_denominator(10**6) for v in x]
            if quadratic_value(m, cand) < 0:
                return cand
    return None


def copositive_matrix(m) -> ConeVerdict:
    """Exact copositivity of a symmetric rational matrix.

    Cheap certificates are tried first (nonnegative entries, 1x1 and 2x2
    violations, exact PSD, a float-guided witness); the KKT support enumeration
    decides the rest. ``value`` is the simplex minimum when it was computed.
    """
    m = _as_fraction_matrix(m)
    n = len(m)
    if all(x >= 0 for row in m for x in row):
        return ConeVerdict(True)
    for i in range(n):
        if m[i][i] < 0:
            return ConeVerdict(False, BlockFunction(tuple(Fraction(int(k == i)) for k in range(n))), m[i][i])
    for i in range(n):
        for j in range(i + 1, n):
            a, b, c = m[i][i], m[j][j], m[i][j]
            if c < 0 and c * c > a * b:
                x = [Fraction(0)] * n
                x[i], x[j] = b - c, a - c
                return ConeVerdict(False, BlockFunction(tuple(x)), quadratic_value(m, x))
    if psd_matrix(m).holds:
        return ConeVerdict(True)
    x = _replicator_witness(m)
    if x is not None:
        return ConeVerdict(False, BlockFunction(tuple(x)), quadratic_value(m, x))
    if n > SIMPLEX_CAP:
        raise CapExceededError(f"copositivity enumeration is capped at {SIMPLEX_CAP} dimensions")
    val, x = _simplex_search(m, stop_below_zero=True)
    if val < 0:
        return ConeVerdict(False, BlockFunction(tuple(x)), val)
    return ConeVerdict(True, None, val)


def is_copositive(w: StepKernel) -> ConeVerdict:
    """Kernel copositivity; a witness is a nonnegative block function with negative form."""
    return _to_kernel_verdict(copositive_matrix(_symmetric_matrix(w)), w)


def is_locally_dense(w: StepKernel, p) -> ConeVerdict:
    """p-local density, decided as copositivity of ``W - p``."""
    if not w.is_graphon:
        raise ValueError("local density is defined for graphons (entries in [0, 1])")
    return is_copositive(shift(w, -to_fraction(p)))


# -- cut norm ------------------------------------------------------------------------


def cut_norm(w: StepKernel) -> Fraction:
    """``max_{S,T} |iint_{S x T} W|`` over block subsets, exact.

    For each ``S`` the best ``T`` takes every column of one sign, so only the
    ``2^n`` choices of ``S`` are enumerated (in Gray-code order).
    """
    if not w.is_symmetric:
        raise ValueError("cut norm needs a symmetric kernel")
    n = w.n
    if n > CUT_NORM_CAP:
        raise CapExceededError(f"cut norm enumeration is capped at {CUT_NORM_CAP} blocks")
    a_int, da, m_int, dm = w.integer_form
    mu = m_int.tolist()
    mass = [[mu[i] * mu[j] * x for j, x in enumerate(row)] for i, row in enumerate(a_int.tolist())]
    cols = [0] * n
    inside = [False] * n
    best = 0
    for step in range(1, 1 << n):
        i = (step & -step).bit_length() - 1  # Gray code: flip bit i
        sign = -1 if inside[i] else 1
        inside[i] = not inside[i]
        row = mass[i]
        for j in range(n):
            cols[j] += sign * row[j]
        pos = sum(c for c in cols if c > 0)
        neg = -sum(c for c in cols if c < 0)
        best = max(best, pos, neg)
    return Fraction(best, da * dm * dm)


# -- spectrum ------------------------------------------------------------------------


def _jacobi_eigen(s: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    a = s.copy()
    n = len(a)
    v = np.eye(n)
    norm = math.sqrt(float((a * a).sum())) or 1.0
    for _ in range(max_sweeps):
        off = math.sqrt(float((np.triu(a, 1) ** 2).sum()) * 2.0)
        if off <= tol * norm:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300 or abs(apq) <= 1e-18 * norm:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - sn * aq
                a[:, q] = sn * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - sn * aq
                a[q, :] = sn * ap + c * aq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
    raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def spectrum(w: StepKernel) -> SpectrumReport:
    """Eigenvalues of ``T_W``, i.e. of ``D^(1/2) A D^(1/2)``, by cyclic Jacobi rotations."""
    if not w.is_symmetric:
        raise ValueError("spectrum needs a symmetric kernel")
    if w.n > SPECTRUM_CAP:
        raise CapExceededError(f"spectrum is capped at {SPECTRUM_CAP} blocks")
    root = np.sqrt(w.float_measures())
    s = root[:, None] * w.float_matrix() * root[None, :]
    vals, vecs = _jacobi_eigen(s)
    residual = float(np.abs(s @ vecs - vecs * vals[None, :]).max()) if len(vals) else 0.0
    order = sorted(range(len(vals)), key=lambda i: (-abs(vals[i]), -vals[i]))
    tolerance = RESIDUAL_TOL * max(1.0, float(np.linalg.norm(s)))
    report = SpectrumReport([float(vals[i]) for i in order], residual, tolerance)
    if not report.converged:
        raise ConvergenceError(f"eigenpair residual {residual:.3g} exceeds {tolerance:.3g}")
    return report
