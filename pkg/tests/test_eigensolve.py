import math

import numpy as np
import pytest

from specpair.errors import GridMarginError, PreconditionError, WindowCapError
from specpair.potential import PotentialSpec, default_pair, harmonic
from specpair.eigensolve import (
    Grid,
    count_below,
    discretize,
    eigenvalues_below,
    eigenvector,
    grid_pair,
    refine,
)


def charpoly_roots(diag, offsq):
    """Oracle: characteristic-polynomial roots, Newton-refined."""
    poly = np.poly1d([1.0])
    prev = np.poly1d([0.0])
    for d in diag:
        poly, prev = np.poly1d([-1.0, d]) * poly - offsq * prev, poly
    roots = np.sort(np.roots(poly.coefficients).real)

    def p_dp(lam):
        p_prev, p = 1.0, diag[0] - lam
        dp_prev, dp = 0.0, -1.0
        for d in diag[1:]:
            p_prev, p, dp_prev, dp = (p, (d - lam) * p - offsq * p_prev,
                                      dp, -p + (d - lam) * dp - offsq * dp_prev)
        return p, dp

    out = []
    for r in roots:
        x = float(r)
        for _ in range(4):
            p, dp = p_dp(x)
            if dp == 0.0:
                break
            x -= p / dp
        out.append(x)
    return np.sort(out)


def test_grid_nodes_exactly_symmetric():
    g = Grid(8.0, 4095)
    x = g.nodes()
    assert np.array_equal(x, -x[::-1])
    assert x[2047] == 0.0
    assert g.dx == pytest.approx(16.0 / 4096, rel=1e-16)


def test_grid_pair_ratio():
    gf, gc = grid_pair(8.0, 4096)
    assert gf.n == 4095 and gc.n == 2047
    assert gf.n + 1 == 2 * (gc.n + 1)
    with pytest.raises(PreconditionError):
        grid_pair(8.0, 4097)


def test_discretize_entries():
    g = Grid(8.0, 999)
    T = discretize(harmonic(), 1.0, g)
    x = g.nodes()
    s = 1.0 / (g.dx * g.dx)
    assert np.array_equal(T.diag, 2.0 * s + x * x)
    assert np.all(T.offdiag == -s)
    assert np.all(T.diag >= 2.0 * s)


def test_discretize_reflected_reverses_diagonal():
    g = Grid(8.0, 1023)
    p = PotentialSpec(t=0.0, eps=0.05)
    Tp = discretize(p, 1.0, g)
    Tm = discretize(p.reflected(), 1.0, g)
    assert np.array_equal(Tp.diag, Tm.diag[::-1])


def test_discretize_margin_guard():
    g = Grid(4.0, 511)
    with pytest.raises(GridMarginError):
        discretize(harmonic(), 1.0, g, e_max=10.0)


def test_count_below_harmonic():
    g = Grid(8.0, 2047)
    T = discretize(harmonic(), 1.0, g)
    assert count_below(T, 0.0) == 0
    assert count_below(T, 6.0) == 3
    T5 = discretize(harmonic(), 0.5, g)
    assert count_below(T5, 2.0) == 2


def test_count_below_at_near_eigenvalue():
    g = Grid(8.0, 511)
    T = discretize(harmonic(), 1.0, g)
    lam1 = float(eigenvalues_below(T, 2.0).eigenvalues[0])
    # probing exactly at a computed eigenvalue must not crash or mislead
    assert count_below(T, lam1) in (0, 1)
    assert count_below(T, np.nextafter(lam1, 2.0) + 1e-12) == 1


def test_tiny_instance_charpoly_oracle():
    g = Grid(3.0, 7)
    T = discretize(harmonic(), 1.0, g)
    spec = eigenvalues_below(T, 1e6, tol=1e-13, cap=64, check_margin=False)
    roots = charpoly_roots(T.diag, T.off_value ** 2)
    assert len(spec) == 7
    np.testing.assert_allclose(spec.eigenvalues + spec.eigenvalues_lo, roots,
                               atol=1e-12, rtol=0)


def test_harmonic_window_h1():
    g = Grid(8.0, 4095)
    T = discretize(harmonic(), 1.0, g, e_max=10.0)
    spec = eigenvalues_below(T, 10.0)
    lam = spec.eigenvalues + spec.eigenvalues_lo
    np.testing.assert_allclose(lam, [1, 3, 5, 7, 9], atol=1e-4, rtol=0)
    gaps = np.diff(lam)
    assert np.all(gaps > 0)
    assert np.min(gaps) > 10 * 1e-13 * 10.0   # simplicity with margin over tol


def test_harmonic_window_small_h():
    g = Grid(8.0, 4095)
    T = discretize(harmonic(), 0.1, g, e_max=1.0)
    spec = eigenvalues_below(T, 1.0)
    np.testing.assert_allclose(spec.eigenvalues + spec.eigenvalues_lo,
                               np.arange(0.1, 1.0, 0.2), atol=1e-3, rtol=0)


def test_window_cap():
    g = Grid(8.0, 2047)
    T = discretize(harmonic(), 0.1, g)
    with pytest.raises(WindowCapError):
        eigenvalues_below(T, 5.0, cap=3)


def test_refine_harmonic_accuracy():
    gf, gc = grid_pair(8.0, 4096)
    spec = refine(harmonic(), 1.0, 10.0, gf, gc)
    lam = spec.eigenvalues + spec.eigenvalues_lo
    np.testing.assert_allclose(lam, [1, 3, 5, 7, 9], atol=2e-9, rtol=0)
    assert np.all(spec.error_estimate >= 0.0)
    assert spec.refined


def test_refine_grid_preconditions():
    g = Grid(8.0, 4095)
    with pytest.raises(PreconditionError):
        refine(harmonic(), 1.0, 10.0, g, g)
    with pytest.raises(PreconditionError):
        refine(harmonic(), 1.0, 10.0, g, Grid(8.0, 2046))
    with pytest.raises(PreconditionError):
        refine(harmonic(), 1.0, 10.0, g, Grid(6.0, 2047))


def test_eigenvector_ground_state_gaussian():
    g = Grid(8.0, 4095)
    T = discretize(harmonic(), 1.0, g, e_max=4.0)
    lam1 = float(eigenvalues_below(T, 2.0).eigenvalues[0])
    u = eigenvector(T, lam1)
    # u(0)^2 = 1/sqrt(pi) for the normalized Gaussian ground state
    i0 = 2047
    assert g.nodes()[i0] == 0.0
    assert u[i0] ** 2 == pytest.approx(1.0 / math.sqrt(math.pi), abs=1e-6)
    assert np.all(u > 0.0)
    assert g.dx * np.dot(u, u) == pytest.approx(1.0, abs=1e-13)


def test_eigenvector_first_excited_odd():
    g = Grid(8.0, 4095)
    T = discretize(harmonic(), 1.0, g, e_max=6.0)
    spec = eigenvalues_below(T, 4.0)
    u = eigenvector(T, float(spec.eigenvalues[1]))
    assert abs(u[2047]) <= 1e-8


def test_eigenvector_perturbed_ground_positive():
    g = Grid(8.0, 4095)
    p, _ = default_pair()
    T = discretize(p, 1.0, g, e_max=4.0)
    lam1 = float(eigenvalues_below(T, 2.0).eigenvalues[0])
    u = eigenvector(T, lam1)
    assert np.all(u > 0.0)


def test_reflection_isospectrality_t_zero():
    g = Grid(8.0, 4095)
    p = PotentialSpec(t=0.0, eps=0.05)
    sp = eigenvalues_below(discretize(p, 1.0, g), 20.0)
    sm = eigenvalues_below(discretize(p.reflected(), 1.0, g), 20.0)
    assert len(sp) == len(sm) == 10
    assert float(np.max(np.abs(sp.gaps_to(sm)))) <= 1e-12


def test_ground_state_monotone_in_t():
    g = Grid(8.0, 2047)
    lams = []
    for t in (0.0, 0.05, 0.1, 0.2):
        p = PotentialSpec(t=t, eps=0.0)
        lams.append(float(eigenvalues_below(discretize(p, 1.0, g), 2.0).eigenvalues[0]))
    assert all(b >= a for a, b in zip(lams, lams[1:]))


def test_ground_state_above_h_with_bumps():
    gf, gc = grid_pair(8.0, 8192)
    p, _ = default_pair()
    spec = refine(p, 0.85, 2.0, gf, gc)
    assert spec.value(1) > 0.85 + 10.0 * float(spec.error_estimate[0])


def test_ground_state_at_h_bare():
    gf, gc = grid_pair(8.0, 4096)
    spec = refine(harmonic(), 0.85, 2.0, gf, gc)
    assert abs(spec.value(1) - 0.85) <= max(float(spec.error_estimate[0]), 1e-11)


def test_spectrum_csv_rows():
    g = Grid(8.0, 1023)
    spec = eigenvalues_below(discretize(harmonic(), 1.0, g), 4.0)
    rows = list(spec.to_csv_rows())
    assert [r["j"] for r in rows] == [1, 2]
    assert set(rows[0]) == {"h", "j", "lambda", "error_estimate"}
