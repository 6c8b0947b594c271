import mpmath as mp
import numpy as np
import pytest

from ymblowup import profiles as pr
from ymblowup.grid import FieldState, ResolutionError, SimGrid, check_N


def test_symmetry_mode_fields_reproduce_closed_form():
    g = SimGrid(48)
    rho = np.linspace(0, 1, 41)
    phi1, phi2 = g.fields(g.symmetry_mode(), rho)
    g1, g2 = pr.eval_symmetry_mode(rho)
    assert np.max(np.abs(phi1 - g1)) < 1e-14
    assert np.max(np.abs(phi2 - g2)) < 1e-9  # second derivative: rounding ~ N^4 eps


def test_norm_of_symmetry_mode_against_extended_precision_quadrature():
    # ||g||_1 = ||D^2 g1||, ||g||_2 = ||g2'|| with the closed forms differentiated in mpmath
    with mp.workdps(30):
        g1 = lambda r: r ** 5 * (5 - r * r) / (5 + 3 * r * r) ** 3
        g2 = lambda r: r * (125 - 50 * r * r - 3 * r ** 4) / (5 + 3 * r * r) ** 4
        D2 = lambda r: (r * mp.diff(g1, r, 2) - mp.diff(g1, r)) / r ** 3
        n1 = mp.sqrt(mp.quad(lambda r: D2(r) ** 2, [0, 1]))
        n2 = mp.sqrt(mp.quad(lambda r: mp.diff(g2, r) ** 2, [0, 1]))
    rep = SimGrid(64).norm(SimGrid(64).symmetry_mode())
    assert abs(rep.norm1 - float(n1)) < 1e-11
    assert abs(rep.norm2 - float(n2)) < 1e-11


def test_hnorms_batch_matches_single():
    g = SimGrid(32)
    U = np.random.default_rng(0).standard_normal((64, 3))
    assert np.allclose(g.hnorms(U), [g.hnorm(U[:, k]) for k in range(3)], rtol=1e-13)


def test_field_state_helpers():
    s = FieldState.zero(32, tau=0.5)
    assert s.norm().total == 0 and s.tau == 0.5
    with pytest.raises(ValueError):
        FieldState.from_pw(np.zeros(3), np.zeros(4))
    bad = FieldState.from_pw(np.r_[np.nan, 0.0], np.zeros(2))
    with pytest.raises(FloatingPointError):
        bad.check()
    with pytest.raises(ResolutionError):
        check_N(8)


def test_interp_is_exact_for_polynomials():
    g = SimGrid(32)
    x = g.x
    u = np.concatenate([x ** 3 - x, 2 + x])
    p, w = g.interp(u, np.array([0.123, 0.77]))
    assert np.allclose(p, [0.123 ** 3 - 0.123, 0.77 ** 3 - 0.77], atol=1e-13)
    assert np.allclose(w, [2.123, 2.77], atol=1e-13)
