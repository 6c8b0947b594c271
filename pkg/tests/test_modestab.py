import mpmath as mp
import numpy as np
import pytest

from ymblowup import modestab as ms

MU0 = -0.5889


def test_seed_normalization_and_residual():
    for lam in (1.0, 0.3 + 2j, -0.6):
        for end in (0, 1):
            s = ms.frobenius_seed(lam, end)
            assert s.coeffs[0] == 1
            assert s.residual() < 1e-12


def test_seed_at_lambda_one_matches_symmetry_mode_taylor_series():
    # u = rho W0'(rho) / (-80/25) = rho^2 (1 + 3x/5)^(-2), coefficients (k + 1)(-3/5)^k
    s = ms.frobenius_seed(1.0, 0)
    k = np.arange(20)
    assert np.max(np.abs(s.coeffs[:20] - (k + 1) * (-0.6) ** k)) < 1e-12


def test_seed_at_lambda_zero_endpoint_one_satisfies_the_mode_equation():
    # substitute the series into the rho-form of the mode equation in extended precision
    # lam = 0 = 1 - k with k = 1: the analytic solution starts at index 1
    s = ms.frobenius_seed(0.0, 1, M=40, adaptive=False)
    assert s.index == 1
    c = [mp.mpc(complex(v)) for v in s.coeffs]
    with mp.workdps(30):
        for rho in (0.96, 0.98):
            def u(r):
                y = 1 - r * r
                return r * r * sum(ck * y ** (k + 1) for k, ck in enumerate(c))
            r = mp.mpf(rho)
            w0 = (1 - r * r) / (1 + mp.mpf(3) / 5 * r * r)
            res = (-(1 - r * r) * (mp.diff(u, r, 2) + 2 * mp.diff(u, r) / r)
                   + 3 * (3 * w0 ** 2 - 1) / r ** 2 * u(r))
            assert abs(res) < 1e-15 * abs(u(r))


def test_seed_preconditions():
    with pytest.raises(ValueError):
        ms.frobenius_seed(1.0, 0, M=5)
    with pytest.raises(ValueError):
        ms.frobenius_seed(1.0, 0, delta=0.2)
    with pytest.raises(ms.DegenerateLambdaError):
        ms.frobenius_seed(-1.0, 1, on_degenerate="raise")


def test_shoot_lambda_one_reproduces_symmetry_mode():
    s = ms.frobenius_seed(1.0, 0)
    u, du = ms.shoot(1.0, s, 0.5)
    # seed scale: u = -(25/80) rho W0'(rho), and rho W0'(1/2) = -320/529
    assert abs(u - (-25 / 80) * (-320 / 529)) < 1e-12
    assert abs(u.imag) <= 1e-13 and abs(du.imag) <= 1e-13


def test_shoot_insensitive_to_step_off():
    a = ms.shoot(0.4 + 1j, ms.frobenius_seed(0.4 + 1j, 1, delta=0.05), 0.5)[0]
    b = ms.shoot(0.4 + 1j, ms.frobenius_seed(0.4 + 1j, 1, delta=0.025), 0.5)[0]
    assert abs(a - b) < 1e-9 * abs(a)


def test_connection_zero_at_symmetry_eigenvalue_only():
    assert abs(ms.connection(1.0).value) <= 1e-9
    assert abs(ms.connection(2.0).value) > 1e-2
    assert abs(ms.connection(0.0).value) > 1e-2


def test_connection_conjugate_symmetry_and_continuity():
    lam = 0.3 + 4.2j
    a, b = ms.connection(lam).value, ms.connection(np.conj(lam)).value
    assert abs(a - np.conj(b)) < 1e-10
    seg = 0.5 + 1j * np.linspace(1, 10, 200)
    v, _, raw = ms.connection_values(seg)
    jumps = np.abs(np.angle(raw[1:] / raw[:-1]))
    assert np.max(jumps) < np.pi / 2


def test_count_examples():
    assert ms.count_eigenvalues((0.5, 1.5, -0.5, 0.5)) == 1
    # the whole [-0.4, 2] x [-5, 5] rectangle holds exactly the symmetry eigenvalue
    assert ms.count_eigenvalues((-0.4, 2.0, -5.0, 5.0)) == 1
    assert ms.count_eigenvalues((1.2, 2.0, -5.0, 5.0)) == 0
    assert ms.count_eigenvalues((-0.4, 0.8, -5.0, 5.0)) == 0


def test_refine_eigenvalues_and_eigenfunction():
    rec = ms.refine_eigenvalue(0.9)
    assert abs(rec.lam - 1) <= 1e-8
    r = rec.eigenfunction.grid
    ref = -80 * r ** 2 / (5 + 3 * r ** 2) ** 2
    ref = ref / ref[np.argmax(np.abs(ref))]
    assert np.max(np.abs(rec.eigenfunction.values - ref)) <= 1e-7
    assert np.max(np.abs(rec.eigenfunction.values)) == 1
    rec = ms.refine_eigenvalue(-0.6)
    assert abs(rec.lam - MU0) < 0.01
    assert rec.residual <= 1e-6


def test_eigenfunction_residual_decreases_under_refinement():
    lam = ms.refine_eigenvalue(-0.6).lam
    r1 = ms.eigenfunction(lam, n_grid=201)[1]
    r2 = ms.eigenfunction(lam, n_grid=401)[1]
    assert r1 <= 1e-6 and r2 < r1


def test_matching_point_independence():
    a = ms.refine_eigenvalue(-0.6, rho_m=0.4).lam
    b = ms.refine_eigenvalue(-0.6, rho_m=0.6).lam
    assert abs(a - b) < 1e-8


def test_scan_small_rectangle_and_conjugate_pairs():
    res = ms.spectrum_scan((-0.8, 1.6), (-6.0, 6.0), resolution=(2, 3))
    lams = [r.lam for r in res.eigenvalues]
    assert any(abs(l - 1) < 1e-8 for l in lams)
    assert any(abs(l - MU0) < 0.01 for l in lams)
    for l in lams:
        if abs(l.imag) > 1e-9:
            assert any(abs(m - np.conj(l)) < 1e-6 for m in lams)
    assert res.inconclusive == []


def test_scan_rejects_rectangle_below_minus_three_halves():
    with pytest.raises(ValueError):
        ms.spectrum_scan((-1.6, 0.0), (-1.0, 1.0))


def test_no_eigenvalues_at_high_frequency():
    assert ms.count_eigenvalues((0.0, 2.0, 5.0, 50.0)) == 0


def test_algmult_integral_positive_and_quadratures_agree():
    a, b = ms.algmult_integral()
    assert a > 0 and abs(a - b) < 1e-10


def test_wronskian_identity():
    assert ms.wronskian_check() <= 1e-8
