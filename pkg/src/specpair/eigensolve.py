"""Dirichlet eigensolver for -h^2 u'' + V u on a symmetric truncated grid.

The operator is discretized with the standard 3-point stencil into a
symmetric tridiagonal matrix.  Eigenvalues come from Sturm-sequence
bisection (which also provides counting, used by cross-checks), and each
one is then polished by inverse iteration plus a compensated Rayleigh
quotient.  The polish matters: bisection alone cannot locate an eigenvalue
more tightly than a few ulps of ||T||, and the matrix norm grows like
2 h^2/dx^2, which would drown the tiny spectral differences this package
exists to measure.

Grids are built exactly symmetric about 0 (nodes are signed multiples of
dx), so reflecting a potential reverses the diagonal bitwise and exact
mirror pairs stay exactly isospectral in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from . import _dd
from .errors import ConvergenceError, GridMarginError, PreconditionError, WindowCapError
from .potential import PotentialSpec, potential_eval

__all__ = [
    "Grid",
    "TridiagonalOperator",
    "Spectrum",
    "grid_pair",
    "discretize",
    "count_below",
    "eigenvalues_below",
    "eigenvalues_below_multi",
    "refine",
    "refine_multi",
    "eigenvector",
]

_EPS = np.finfo(float).eps
_SAFMIN = np.finfo(float).tiny


@dataclass(frozen=True)
class Grid:
    """Symmetric grid of ``n`` interior points on (-L, L), Dirichlet ends.

    Node i (1-based) sits at (i - (n+1)/2) * dx with dx = 2L/(n+1); the node
    set is exactly closed under negation.
    """

    L: float
    n: int

    def __post_init__(self):
        if not self.L > 0.0:
            raise PreconditionError(f"L must be > 0, got {self.L}")
        if self.n < 3:
            raise PreconditionError(f"need at least 3 interior points, got {self.n}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / (self.n + 1)

    def nodes(self) -> np.ndarray:
        k = np.arange(1, self.n + 1, dtype=float) - 0.5 * (self.n + 1)
        return k * self.dx


def grid_pair(L: float, intervals: int) -> tuple[Grid, Grid]:
    """A (fine, coarse) grid pair with dx ratio exactly 2.

    ``intervals`` is the fine subinterval count and must be even; the fine
    grid has intervals-1 interior points.
    """
    if intervals % 2 != 0 or intervals < 8:
        raise PreconditionError(f"intervals must be even and >= 8, got {intervals}")
    return Grid(L, intervals - 1), Grid(L, intervals // 2 - 1)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal Dirichlet discretization of -h^2 d^2/dx^2 + V."""

    diag: np.ndarray          # 2 h^2/dx^2 + V(x_i)
    offdiag: np.ndarray       # constant -h^2/dx^2, length n-1
    h: float
    grid: Grid
    off_value: float          # the shared off-diagonal entry
    v_boundary: float         # V at the truncation points

    @property
    def n(self) -> int:
        return self.diag.size

    def norm1(self) -> float:
        return float(np.max(np.abs(self.diag))) + 2.0 * abs(self.off_value)


def discretize(p: PotentialSpec, h: float, grid: Grid,
               e_max: float | None = None) -> TridiagonalOperator:
    """Build the tridiagonal operator for potential ``p`` at parameter ``h``.

    When ``e_max`` is given, requires V(L) >= e_max + 10 so that every
    eigenfunction in the window is negligible at the artificial boundary.
    """
    if not h > 0.0:
        raise PreconditionError(f"h must be > 0, got {h}")
    x = grid.nodes()
    v = potential_eval(p, x)
    vb = min(potential_eval(p, grid.L), potential_eval(p, -grid.L))
    if e_max is not None and vb < e_max + 10.0:
        raise GridMarginError(
            f"V at the boundary is {vb:.3f} < E_max + 10 = {e_max + 10.0:.3f}; "
            f"increase L")
    s = (h * h) / (grid.dx * grid.dx)
    diag = 2.0 * s + v
    off = -s
    return TridiagonalOperator(diag=diag, offdiag=np.full(grid.n - 1, off),
                               h=h, grid=grid, off_value=off, v_boundary=vb)


# ---------------------------------------------------------------------------
# Sturm counts and bisection
# ---------------------------------------------------------------------------

def _sturm_counts(diag_tasks: np.ndarray, offsq: np.ndarray, lams: np.ndarray):
    """Negative-pivot counts of the shifted LDL^T factorizations.

    ``diag_tasks`` has shape (n, K): one column per query, so independent
    shifts, operators and grids of equal n share one pass.  Returns the
    counts and a mask of queries that hit a near-zero pivot.
    """
    n = diag_tasks.shape[0]
    pivmin = np.maximum(offsq, 1.0) * _SAFMIN
    d = diag_tasks[0] - lams
    coll = np.abs(d) <= pivmin
    d = np.where(coll, -pivmin, d)
    counts = (d < 0.0).astype(np.int64)
    collided = coll.copy()
    for i in range(1, n):
        d = diag_tasks[i] - lams - offsq / d
        coll = np.abs(d) <= pivmin
        d = np.where(coll, -pivmin, d)
        collided |= coll
        counts += d < 0.0
    return counts, collided


def _counts_with_nudge(diag_tasks, offsq, lams):
    """Counts, re-evaluating any query that collided with a pivot one ulp up."""
    counts, collided = _sturm_counts(diag_tasks, offsq, lams)
    if collided.any():
        idx = np.nonzero(collided)[0]
        lam2 = np.nextafter(lams[idx], np.inf)
        c2, _ = _sturm_counts(diag_tasks[:, idx], offsq[idx], lam2)
        counts[idx] = c2
    return counts


def count_below(T: TridiagonalOperator, lam: float) -> int:
    """Number of eigenvalues of T strictly below ``lam``."""
    diag_tasks = T.diag[:, None]
    offsq = np.array([T.off_value * T.off_value])
    counts = _counts_with_nudge(diag_tasks, offsq, np.array([float(lam)]))
    return int(counts[0])


def _bisect_tasks(diag_tasks, offsq, ks, lo, hi, tol):
    """Batched bisection: shrink [lo_k, hi_k] around the ks[k]-th eigenvalue.

    Maintains counts(lo) < k <= counts(hi) for every task.
    """
    lo = lo.copy()
    hi = hi.copy()
    while True:
        width = hi - lo
        if np.all(width <= tol):
            break
        mid = 0.5 * (lo + hi)
        counts = _counts_with_nudge(diag_tasks, offsq, mid)
        up = counts >= ks
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    return lo, hi


# ---------------------------------------------------------------------------
# Inverse iteration and the compensated polish
# ---------------------------------------------------------------------------

_START_CACHE: dict[int, np.ndarray] = {}


def _start_vector(n: int) -> np.ndarray:
    v = _START_CACHE.get(n)
    if v is None:
        rng = np.random.default_rng(0x5eed)
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        _START_CACHE[n] = v
    return v


def _inverse_iteration(T: TridiagonalOperator, lam: float,
                       shift_offset: float = 1e-12, max_iter: int = 8) -> np.ndarray:
    """Unit-norm eigenvector for the eigenvalue nearest ``lam``."""
    n = T.n
    ab = np.empty((3, n))
    ab[0, 0] = 0.0
    ab[0, 1:] = T.off_value
    ab[1, :] = T.diag - (lam + shift_offset)
    ab[2, :-1] = T.off_value
    ab[2, -1] = 0.0
    v = _start_vector(n)
    prev = None
    for _ in range(max_iter):
        w = solve_banded((1, 1), ab, v, check_finite=False)
        w = w / np.linalg.norm(w)
        if prev is not None and min(np.linalg.norm(w - prev), np.linalg.norm(w + prev)) < 1e-13:
            return w
        prev = w
        v = w
    return v


def _polish_one(T: TridiagonalOperator, lam: float):
    """Inverse iteration + compensated Rayleigh quotient.

    Returns (hi, lo, vec): the eigenvalue as an unevaluated double-double
    sum hi + lo, and the unit eigenvector used.
    """
    v = _inverse_iteration(T, lam)
    corr = _dd.rayleigh_correction(T.diag, T.off_value, v, lam)
    hi, lo = _dd.two_sum(lam, corr)
    return hi, lo, v


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------

@dataclass
class Spectrum:
    """Ordered simple eigenvalues below a window, with error information.

    ``eigenvalues_lo`` holds compensated low-order parts; ``value(j)`` and
    ``gaps_to`` use them so that differences between correlated spectra stay
    meaningful down to ~1e-13.
    """

    h: float
    eigenvalues: np.ndarray
    eigenvalues_lo: np.ndarray
    error_estimate: np.ndarray
    grid: Grid
    E_window: float
    polished: bool = True
    refined: bool = False

    def __len__(self) -> int:
        return self.eigenvalues.size

    def value(self, j: int) -> float:
        """The j-th eigenvalue (1-based), including the low-order part."""
        return float(self.eigenvalues[j - 1] + self.eigenvalues_lo[j - 1])

    def gaps_to(self, other: "Spectrum") -> np.ndarray:
        """Signed per-index differences self - other over the common count."""
        m = min(len(self), len(other))
        hi = self.eigenvalues[:m] - other.eigenvalues[:m]
        lo = self.eigenvalues_lo[:m] - other.eigenvalues_lo[:m]
        return hi + lo

    def to_csv_rows(self):
        for j in range(len(self)):
            yield {
                "h": self.h,
                "j": j + 1,
                "lambda": float(self.eigenvalues[j] + self.eigenvalues_lo[j]),
                "error_estimate": float(self.error_estimate[j]),
            }

    def to_json_dict(self) -> dict:
        return {
            "h": self.h,
            "E_window": self.E_window,
            "grid": {"L": self.grid.L, "n": self.grid.n},
            "refined": self.refined,
            "eigenvalues": [float(v + w) for v, w in
                            zip(self.eigenvalues, self.eigenvalues_lo)],
            "error_estimate": [float(e) for e in self.error_estimate],
        }


def _empty_spectrum(h, grid, E) -> Spectrum:
    z = np.zeros(0)
    return Spectrum(h=h, eigenvalues=z, eigenvalues_lo=z.copy(),
                    error_estimate=z.copy(), grid=grid, E_window=E)


def eigenvalues_below_multi(ops: list[TridiagonalOperator], E_list,
                            tol: float | None = None, polish: bool = True,
                            cap: int = 512, check_margin: bool = True) -> list[Spectrum]:
    """All eigenvalues below E for several same-size operators in one sweep.

    Batching the bisections of every (operator, index) pair into shared
    passes keeps the Python-level loop over matrix rows from dominating.
    ``check_margin=False`` skips the turning-point margin guard (useful when
    the matrix itself, not the continuum problem, is the object of study).
    """
    if not ops:
        return []
    n = ops[0].n
    if any(op.n != n for op in ops):
        raise PreconditionError("batched operators must share the grid size")
    E_arr = np.asarray([float(e) for e in E_list])
    if E_arr.size != len(ops):
        raise PreconditionError("need one window per operator")
    if check_margin:
        for op, e in zip(ops, E_arr):
            if op.v_boundary < e + 10.0:
                raise GridMarginError(
                    f"V at the boundary is {op.v_boundary:.3f} < E + 10 = {e + 10.0:.3f}; "
                    f"increase L")

    offsq_ops = np.array([op.off_value ** 2 for op in ops])
    diag_ops = np.stack([op.diag for op in ops], axis=1)

    m_per_op = _counts_with_nudge(diag_ops, offsq_ops, E_arr)
    for op, m, e in zip(ops, m_per_op, E_arr):
        if m > cap:
            raise WindowCapError(f"{m} eigenvalues below E = {e}; cap is {cap}")

    # flatten (operator, k) tasks
    col_idx = np.concatenate([np.full(m, i, dtype=np.intp)
                              for i, m in enumerate(m_per_op)]) \
        if m_per_op.sum() else np.zeros(0, dtype=np.intp)
    ks = np.concatenate([np.arange(1, m + 1) for m in m_per_op]) \
        if m_per_op.sum() else np.zeros(0, dtype=np.int64)

    results: list[Spectrum] = []
    if col_idx.size == 0:
        return [_empty_spectrum(op.h, op.grid, e) for op, e in zip(ops, E_arr)]

    diag_tasks = np.ascontiguousarray(diag_ops[:, col_idx])
    offsq_tasks = offsq_ops[col_idx]
    hi0 = E_arr[col_idx]
    lo0 = np.zeros_like(hi0)

    if tol is None:
        tol_tasks = 1e-13 * np.maximum(1.0, hi0)
    else:
        tol_tasks = np.full(hi0.shape, float(tol))

    lo, hi = _bisect_tasks(diag_tasks, offsq_tasks, ks, lo0, hi0, tol_tasks)
    mids = 0.5 * (lo + hi)
    widths = hi - lo

    pos = 0
    for i, (op, m, e) in enumerate(zip(ops, m_per_op, E_arr)):
        m = int(m)
        lam = mids[pos:pos + m].copy()
        wid = widths[pos:pos + m].copy()
        pos += m
        lam_lo = np.zeros(m)
        est = 0.5 * wid + 6.0 * _EPS * op.norm1()
        if polish:
            for k in range(m):
                hi_k, lo_k, _ = _polish_one(op, lam[k])
                lam[k] = hi_k
                lam_lo[k] = lo_k
            # polished values are exact eigenvalues of the stored matrix to
            # a few ulps; the width still bounds the bracket
            est = np.minimum(est, 0.5 * wid + 8.0 * _EPS * np.maximum(1.0, np.abs(lam)))
        full = lam + lam_lo
        if np.any(np.diff(full) <= 0.0):
            raise ConvergenceError("bisection produced a non-increasing eigenvalue list")
        results.append(Spectrum(h=op.h, eigenvalues=lam, eigenvalues_lo=lam_lo,
                                error_estimate=est, grid=op.grid, E_window=float(e),
                                polished=polish))
    return results


def eigenvalues_below(T: TridiagonalOperator, E: float, tol: float | None = None,
                      polish: bool = True, cap: int = 512,
                      check_margin: bool = True) -> Spectrum:
    """All eigenvalues of T strictly below E, bisected to width <= tol.

    Default tol is 1e-13 * max(1, E); each eigenvalue is then polished to a
    few ulps of the matrix eigenvalue unless ``polish`` is disabled.
    """
    return eigenvalues_below_multi([T], [E], tol=tol, polish=polish, cap=cap,
                                   check_margin=check_margin)[0]


# ---------------------------------------------------------------------------
# Richardson refinement
# ---------------------------------------------------------------------------

def _check_grid_pair(grid_fine: Grid, grid_coarse: Grid):
    if grid_fine.L != grid_coarse.L:
        raise PreconditionError("refinement grids must share L")
    if grid_fine.n == grid_coarse.n:
        raise PreconditionError("refinement grids must differ")
    if grid_fine.n + 1 != 2 * (grid_coarse.n + 1):
        raise PreconditionError(
            f"dx ratio must be exactly 2: got n = {grid_fine.n}, {grid_coarse.n}")


def _richardson_combine(fine: Spectrum, coarse: Spectrum) -> Spectrum:
    m = min(len(fine), len(coarse))
    f_hi, f_lo = fine.eigenvalues[:m], fine.eigenvalues_lo[:m]
    c_hi, c_lo = coarse.eigenvalues[:m], coarse.eigenvalues_lo[:m]
    # (4*fine - coarse)/3 carried as value + compensation
    t, e = _dd.two_sum(4.0 * f_hi, -c_hi)
    r_hi = t / 3.0
    r_lo = ((t - 3.0 * r_hi) + (e + 4.0 * f_lo - c_lo)) / 3.0
    diff = (f_hi - c_hi) + (f_lo - c_lo)
    est = np.abs(diff) / 3.0
    return Spectrum(h=fine.h, eigenvalues=r_hi, eigenvalues_lo=r_lo,
                    error_estimate=est, grid=fine.grid, E_window=fine.E_window,
                    polished=fine.polished, refined=True)


def refine_multi(entries: list[tuple[PotentialSpec, float, float]],
                 grid_fine: Grid, grid_coarse: Grid,
                 tol: float | None = None, polish: bool = True,
                 cap: int = 512) -> list[Spectrum]:
    """Richardson-refined spectra for several (potential, h, E) requests.

    All requests share the two grids, so both bisection sweeps are batched.
    """
    _check_grid_pair(grid_fine, grid_coarse)
    ops_f = [discretize(p, h, grid_fine, e_max=E) for (p, h, E) in entries]
    ops_c = [discretize(p, h, grid_coarse, e_max=E) for (p, h, E) in entries]
    Es = [E for (_, _, E) in entries]
    spec_f = eigenvalues_below_multi(ops_f, Es, tol=tol, polish=polish, cap=cap)
    spec_c = eigenvalues_below_multi(ops_c, Es, tol=tol, polish=polish, cap=cap)
    return [_richardson_combine(f, c) for f, c in zip(spec_f, spec_c)]


def refine(p: PotentialSpec, h: float, E: float, grid_fine: Grid,
           grid_coarse: Grid, tol: float | None = None,
           polish: bool = True, cap: int = 512) -> Spectrum:
    """Richardson-extrapolated eigenvalues (4 fine - coarse)/3 below E.

    The returned error_estimate per eigenvalue is |fine - coarse| / 3.
    """
    return refine_multi([(p, h, E)], grid_fine, grid_coarse,
                        tol=tol, polish=polish, cap=cap)[0]


# ---------------------------------------------------------------------------
# Eigenvectors
# ---------------------------------------------------------------------------

def eigenvector(T: TridiagonalOperator, lam: float,
                residual_tol: float | None = None) -> np.ndarray:
    """Discrete-L2-normalized eigenvector for the eigenvalue nearest ``lam``.

    Normalization is dx * sum(u_i^2) = 1 and the sign makes the largest
    component positive (so a ground state is positive everywhere).  The
    eigenpair residual ||T u - lam u|| is measured against the polished
    eigenvalue with compensated arithmetic; binary64 storage of u alone
    already costs ~eps * ||T||, so that is the enforceable floor.
    """
    hi, lo, v = _polish_one(T, lam)
    res = _dd.residual_norm(T.diag, T.off_value, v, hi, lo)
    floor = residual_tol if residual_tol is not None \
        else max(1e-10, 8.0 * _EPS * T.norm1())
    if res > floor:
        raise ConvergenceError(
            f"inverse iteration residual {res:.3e} above tolerance {floor:.3e}")
    u = v / np.sqrt(T.grid.dx * np.dot(v, v))
    i = int(np.argmax(np.abs(u)))
    if u[i] < 0.0:
        u = -u
    return u
