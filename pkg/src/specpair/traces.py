"""Spectral density sums, the phase-space (Weyl) term, and gap-decay fits.

The density nu_h(f) = sum_j f(lambda_j) is the quantity whose small-h
expansion both members of a potential pair share: the leading coefficient
is the phase-space integral of f(xi^2 + V), computed here by quadrature,
and the h^2 coefficient is estimated by fitting.  The per-h distance
between paired spectra, with its exponential-decay fit, quantifies how
fast the pair becomes indistinguishable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .eigensolve import Grid, eigenvalues_below_multi, discretize, grid_pair, refine_multi
from .errors import PreconditionError, WindowCapError
from .potential import PotentialSpec, potential_eval

__all__ = [
    "TestFunction",
    "DensityResult",
    "GapEntry",
    "GapFit",
    "GapCurve",
    "WeylFit",
    "spectral_density",
    "spectral_density_detail",
    "weyl_term",
    "weyl_consistency",
    "isospectral_distance",
    "isospectral_distance_detail",
    "gap_sweep",
    "fit_gap_decay",
    "superpoly_decay_table",
]


@dataclass(frozen=True)
class TestFunction:
    """Nonnegative test function of energy: decaying exponential or bump.

    kind='exponential': f(E) = amplitude * exp(-scale * E), scale > 0.
    kind='bump': the smooth mollifier in E on (center - half_width,
    center + half_width).
    """

    __test__ = False   # not a test case, despite the name

    kind: str = "exponential"
    scale: float = 1.0
    center: float = 5.0
    half_width: float = 2.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in ("exponential", "bump"):
            raise PreconditionError(f"unknown test function kind {self.kind!r}")
        if self.kind == "exponential" and not self.scale > 0.0:
            raise PreconditionError("exponential scale must be > 0")
        if self.amplitude < 0.0:
            raise PreconditionError("amplitude must be >= 0")

    def __call__(self, E):
        E = np.asarray(E, dtype=float)
        if self.kind == "exponential":
            out = self.amplitude * np.exp(-self.scale * E)
        else:
            u = (E - self.center) / self.half_width
            out = np.zeros_like(E)
            inside = np.abs(u) < 1.0
            w = 1.0 - u[inside] ** 2
            out[inside] = self.amplitude * np.exp(1.0 - 1.0 / w)
        return float(out) if out.ndim == 0 else out

    def window_for_tail(self, h: float, tail_tol: float = 1e-14) -> float:
        """Energy cutoff above which the remaining sum is below tail_tol.

        Uses the oscillator lower bound lambda_j >= (2j-1) h, valid for any
        potential above x^2.
        """
        if self.amplitude == 0.0:
            return 2.0 * h   # nothing to sum; keep a token window
        if self.kind == "bump":
            return self.center + self.half_width + 1e-9
        s = self.scale
        geom = 1.0 - math.exp(-2.0 * s * h)
        return (math.log(self.amplitude / tail_tol) + math.log(1.0 / geom)) / s

    def tail_bound(self, E: float, h: float) -> float:
        """Certified bound on the sum of f over eigenvalues >= E."""
        if self.amplitude == 0.0:
            return 0.0
        if self.kind == "bump":
            return 0.0 if E >= self.center + self.half_width else math.inf
        s = self.scale
        return self.amplitude * math.exp(-s * E) / (1.0 - math.exp(-2.0 * s * h))


@dataclass
class DensityResult:
    value: float
    tail_bound: float
    E_window: float
    n_eigenvalues: int
    h: float


def _auto_grid_pair(E: float) -> tuple[Grid, Grid]:
    L = max(8.0, math.sqrt(E) + 4.0)
    intervals = 8192 if L <= 9.0 else 16384
    return grid_pair(L, intervals)


def spectral_density_detail(p: PotentialSpec, h: float, f: TestFunction,
                            tail_tol: float = 1e-14, window_cap: float = 60.0,
                            grids: tuple[Grid, Grid] | None = None) -> DensityResult:
    """Tr f over the spectrum: windowed sum plus certified tail bound."""
    E = f.window_for_tail(h, tail_tol)
    if E > window_cap:
        raise WindowCapError(
            f"tail below {tail_tol} needs window E = {E:.1f} > cap {window_cap}")
    if f.amplitude == 0.0:
        return DensityResult(value=0.0, tail_bound=0.0, E_window=E,
                             n_eigenvalues=0, h=h)
    gf, gc = grids if grids is not None else _auto_grid_pair(E)
    spec = refine_multi([(p, h, E)], gf, gc, tol=1e-9 * max(1.0, E))[0]
    lam = spec.eigenvalues + spec.eigenvalues_lo
    value = float(np.sum(f(lam)))
    return DensityResult(value=value, tail_bound=f.tail_bound(E, h), E_window=E,
                         n_eigenvalues=len(spec), h=h)


def spectral_density(p: PotentialSpec, h: float, f: TestFunction,
                     tail_tol: float = 1e-14, window_cap: float = 60.0,
                     grids: tuple[Grid, Grid] | None = None) -> float:
    return spectral_density_detail(p, h, f, tail_tol, window_cap, grids).value


def weyl_term(p: PotentialSpec, f: TestFunction, abs_tol: float = 1e-10) -> float:
    """Phase-space integral of f(xi^2 + V(x)) dx dxi by adaptive quadrature."""
    if f.amplitude == 0.0:
        return 0.0
    breaks = [-4.0, -3.0, -2.0, 2.0, 3.0, 4.0]
    if f.kind == "exponential":
        s = f.scale
        # the xi integral of e^{-s xi^2} separates off exactly
        xi_factor = math.sqrt(math.pi / s)
        x_max = math.sqrt(45.0 / s) + 1.0

        def g(x):
            return math.exp(-s * potential_eval(p, x))

        val, err = quad(g, -x_max, x_max, epsabs=abs_tol * 1e-3, epsrel=1e-13,
                        limit=400, points=breaks)
        if err > abs_tol:
            raise PreconditionError(f"outer quadrature error {err:.2e} above {abs_tol:.1e}")
        return f.amplitude * xi_factor * val
    # bump: energies below center + half_width only
    top = f.center + f.half_width
    x_max = math.sqrt(max(top, 0.0)) + 1e-9

    def g(x):
        v = potential_eval(p, x)
        w_max = math.sqrt(max(top - v, 0.0))
        if w_max == 0.0:
            return 0.0
        # xi = w substitution keeps the integrand smooth at the edge
        inner, ierr = quad(lambda w: float(f(w * w + v)), -w_max, w_max,
                           epsabs=abs_tol * 1e-4, epsrel=1e-12, limit=200)
        return inner

    pts = [b for b in breaks if -x_max < b < x_max]
    val, err = quad(g, -x_max, x_max, epsabs=abs_tol * 1e-2, epsrel=1e-12,
                    limit=400, points=pts or None)
    if err > abs_tol:
        raise PreconditionError(f"outer quadrature error {err:.2e} above {abs_tol:.1e}")
    return val


@dataclass
class WeylFit:
    a0_fit: float
    a1_fit: float
    a2_fit: float
    a0_quadrature: float
    max_fit_residual: float
    contaminated: bool
    h_list: list[float]
    nu_values: list[float]

    def to_csv_rows(self):
        for h, nu in zip(self.h_list, self.nu_values):
            yield {"h": h, "nu": nu, "two_pi_h_nu": 2.0 * math.pi * h * nu}


def weyl_consistency(p: PotentialSpec, f: TestFunction, h_list,
                     nu_values=None, residual_tol: float = 1e-4,
                     grids: tuple[Grid, Grid] | None = None) -> WeylFit:
    """Fit (2 pi h) nu_h(f) = a0 + a1 h^2 + a2 h^4 over the h sample.

    ``nu_values`` may supply precomputed densities (e.g. closed forms in
    tests); otherwise they are computed.  The h sample must contain at
    least 6 points inside [0.02, 0.5].
    """
    hs = [float(h) for h in h_list]
    if len(hs) < 6:
        raise PreconditionError("need at least 6 h values")
    if min(hs) < 0.02 or max(hs) > 0.5:
        raise PreconditionError("h sample must lie inside [0.02, 0.5]")
    if nu_values is None:
        nu_values = [spectral_density(p, h, f, grids=grids) for h in hs]
    nus = [float(v) for v in nu_values]
    y = np.array([2.0 * math.pi * h * nu for h, nu in zip(hs, nus)])
    H = np.array(hs)
    A = np.stack([np.ones_like(H), H ** 2, H ** 4], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.max(np.abs(A @ coef - y)))
    a0q = weyl_term(p, f)
    return WeylFit(a0_fit=float(coef[0]), a1_fit=float(coef[1]),
                   a2_fit=float(coef[2]), a0_quadrature=a0q,
                   max_fit_residual=resid,
                   contaminated=bool(resid > residual_tol),
                   h_list=hs, nu_values=nus)


# ---------------------------------------------------------------------------
# Pairwise spectral distance and its decay
# ---------------------------------------------------------------------------

@dataclass
class GapEntry:
    h: float
    E: float
    D: float                  # max over paired levels below E of |gap|
    error_estimate: float
    n_levels: int
    usable: bool = True

    def to_csv_row(self):
        return {"h": self.h, "E": self.E, "D": self.D,
                "error_estimate": self.error_estimate,
                "n_levels": self.n_levels, "usable": int(self.usable)}


def _distance_from_spectra(sf_p, sf_m, sc_p, sc_m) -> tuple[float, float, int]:
    """Refined max-gap and its error estimate from fine/coarse spectra."""
    g_f = sf_p.gaps_to(sf_m)
    g_c = sc_p.gaps_to(sc_m)
    m = min(g_f.size, g_c.size)
    if m == 0:
        return 0.0, 0.0, 0
    g_f, g_c = g_f[:m], g_c[:m]
    refined = (4.0 * g_f - g_c) / 3.0
    j = int(np.argmax(np.abs(refined)))
    est = abs(g_f[j] - g_c[j]) / 3.0 + 1e-15 * max(1.0, float(sf_p.eigenvalues[j]))
    return float(abs(refined[j])), est, m


def isospectral_distance_detail(h: float, E: float, p_plus: PotentialSpec,
                                p_minus: PotentialSpec,
                                grids: tuple[Grid, Grid],
                                tol: float | None = None) -> GapEntry:
    """Max per-index eigenvalue distance below E on a shared grid pair.

    Index pairing is positional (both spectra are simple and ordered); a
    count mismatch at the window edge is resolved by the common count.
    """
    gf, gc = grids
    entries = [(p_plus, h, E), (p_minus, h, E)]
    sf = eigenvalues_below_multi([discretize(p, hh, gf, e_max=E) for p, hh, E in entries],
                                 [E, E], tol=tol)
    sc = eigenvalues_below_multi([discretize(p, hh, gc, e_max=E) for p, hh, E in entries],
                                 [E, E], tol=tol)
    D, est, m = _distance_from_spectra(sf[0], sf[1], sc[0], sc[1])
    return GapEntry(h=h, E=E, D=D, error_estimate=est, n_levels=m)


def isospectral_distance(h: float, E: float, p_plus: PotentialSpec,
                         p_minus: PotentialSpec, grids: tuple[Grid, Grid],
                         tol: float | None = None) -> float:
    return isospectral_distance_detail(h, E, p_plus, p_minus, grids, tol).D


@dataclass
class GapFit:
    C: float
    c: float
    r_squared: float
    power_r_squared: float     # competing pure-power-law model
    curvature: float           # max |residual| / spread of log D
    n_points: int

    @property
    def flagged(self) -> bool:
        """Poor exponential fit: low r^2 or a power law explains the data better."""
        return self.r_squared < 0.98 or self.power_r_squared > self.r_squared


def fit_gap_decay(entries) -> GapFit:
    """Least squares of log D against 1/h: D ~ C exp(-c/h).

    ``entries`` is an iterable of GapEntry or (h, D) pairs, all above the
    noise floor; at least 5 are required.
    """
    hs, Ds = [], []
    for e in entries:
        if isinstance(e, GapEntry):
            hs.append(e.h)
            Ds.append(e.D)
        else:
            hs.append(float(e[0]))
            Ds.append(float(e[1]))
    if len(hs) < 5:
        raise PreconditionError(f"need at least 5 usable entries, got {len(hs)}")
    if any(d <= 0.0 for d in Ds):
        raise PreconditionError("distances must be positive to fit")
    x = 1.0 / np.array(hs)
    y = np.log(np.array(Ds))

    A = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    xp = np.log(np.array(hs))
    Ap = np.stack([np.ones_like(xp), xp], axis=1)
    coefp, *_ = np.linalg.lstsq(Ap, y, rcond=None)
    ss_res_p = float(np.sum((y - Ap @ coefp) ** 2))
    r2p = 1.0 - ss_res_p / ss_tot if ss_tot > 0 else 1.0

    spread = float(np.max(y) - np.min(y))
    curvature = float(np.max(np.abs(y - pred))) / spread if spread > 0 else 0.0

    return GapFit(C=float(math.exp(coef[0])), c=float(-coef[1]),
                  r_squared=float(r2), power_r_squared=float(r2p),
                  curvature=curvature, n_points=len(hs))


@dataclass
class GapCurve:
    entries: list[GapEntry]
    noise_floor: float
    fit: GapFit | None = None
    window_mode: str = "ground"

    def usable_entries(self) -> list[GapEntry]:
        return [e for e in self.entries if e.usable]

    def to_csv_rows(self):
        for e in self.entries:
            yield e.to_csv_row()


def gap_sweep(p_plus: PotentialSpec, p_minus: PotentialSpec, h_list,
              window: str | float = "ground",
              grids: tuple[Grid, Grid] | None = None,
              tol: float | None = 1e-10) -> GapCurve:
    """Spectral distance per h, noise floor, and the exponential-decay fit.

    window='ground' tracks exactly the ground level per h (E = 2h), which
    keeps one fixed eigenvalue branch under the sup and avoids spurious
    jumps when a new level enters a fixed window; a numeric window is used
    verbatim for every h.
    """
    hs = [float(h) for h in h_list]
    if grids is None:
        Emax = max(2.0 * h if window == "ground" else float(window) for h in hs)
        L = max(8.0, math.sqrt(Emax) + 4.0)
        grids = grid_pair(L, 4096)
    gf, gc = grids

    tasks = []
    Es = []
    for h in hs:
        E = 2.0 * h if window == "ground" else float(window)
        Es.append(E)
        tasks.append((p_plus, h, E))
        tasks.append((p_minus, h, E))
    ops_f = [discretize(p, h, gf, e_max=E) for (p, h, E) in tasks]
    ops_c = [discretize(p, h, gc, e_max=E) for (p, h, E) in tasks]
    flat_E = [E for E in Es for _ in range(2)]
    sf = eigenvalues_below_multi(ops_f, flat_E, tol=tol)
    sc = eigenvalues_below_multi(ops_c, flat_E, tol=tol)

    entries = []
    for i, (h, E) in enumerate(zip(hs, Es)):
        D, est, m = _distance_from_spectra(sf[2 * i], sf[2 * i + 1],
                                           sc[2 * i], sc[2 * i + 1])
        entries.append(GapEntry(h=h, E=E, D=D, error_estimate=est, n_levels=m))

    floor = max(1e-12, 10.0 * max((e.error_estimate for e in entries), default=0.0))
    for e in entries:
        e.usable = e.D > floor

    usable = [e for e in entries if e.usable]
    fit = fit_gap_decay(usable) if len(usable) >= 5 else None
    mode = "ground" if window == "ground" else f"fixed E = {window}"
    return GapCurve(entries=entries, noise_floor=floor, fit=fit, window_mode=mode)


def superpoly_decay_table(curve: GapCurve, powers=(2, 4, 6, 8)) -> dict[int, dict]:
    """Check D(h)/h^N decreases as h decreases, over the usable entries."""
    use = sorted(curve.usable_entries(), key=lambda e: -e.h)
    out = {}
    for N in powers:
        vals = [e.D / e.h ** N for e in use]
        drops = [vals[i + 1] < vals[i] for i in range(len(vals) - 1)]
        worst = min((vals[i] / vals[i + 1] for i in range(len(vals) - 1)),
                    default=math.inf)
        out[N] = {"monotone": all(drops), "n": len(vals), "worst_ratio": worst}
    return out
