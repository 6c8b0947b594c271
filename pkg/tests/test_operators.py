import numpy as np
import pytest

from ymblowup import operators as op
from ymblowup import profiles as pr

G = op.GridFunction
N = 40


def sample(f, n=N, R=1.0, parity=0):
    return G.sample(f, n, R, parity)


def test_K_monomials():
    r = sample(lambda r: r).grid
    assert np.max(np.abs(op.apply_K(sample(lambda r: 1 + 0 * r)).values - r ** 2 / 2)) < 1e-15
    assert np.max(np.abs(op.apply_K(sample(lambda r: r)).values - r ** 3 / 3)) < 1e-15
    f = sample(lambda r: r ** 2)
    assert np.max(np.abs(op.apply_K(f).values - r ** 4 / 4)) < 1e-15
    assert np.max(np.abs(op.apply_K2(f).values - r ** 6 / 24)) < 1e-15


def test_K_positive_and_monotone(rng):
    f = sample(lambda r: np.exp(-3 * r) * (1 + r))
    Kf = op.apply_K(f).values
    assert np.all(Kf >= 0) and np.all(np.diff(Kf) >= 0)


def test_K_converges_on_non_polynomial_input():
    errs = []
    for n in (6, 8, 10):
        f = sample(lambda r: np.exp(r), n)
        exact = (f.grid - 1) * np.exp(f.grid) + 1
        errs.append(np.max(np.abs(op.apply_K(f).values - exact)))
    # spectral: each two extra nodes gain more than two digits
    assert errs[0] > 100 * errs[1] and errs[1] > 100 * errs[2]


def test_A_examples():
    u = sample(lambda r: r, parity=1)
    assert np.max(np.abs(op.apply_A(u).values - u.grid ** 2 / 15)) < 1e-14
    z = sample(lambda r: 0 * r)
    assert np.all(op.apply_A(z).values == 0)


def test_A_of_symmetry_mode_second_component_reconstructs_profile():
    # rho^3 A g2 = K^2 g2 = rho^5 / (3 (5 + 3 rho^2)^2)
    g2 = sample(lambda r: pr.eval_symmetry_mode(r)[1], 60, parity=1)
    r = g2.grid
    assert np.max(np.abs(op.apply_A(g2).values - r ** 2 / (3 * (5 + 3 * r ** 2) ** 2))) < 1e-15


def test_A_requires_vanishing_at_origin():
    with pytest.raises(op.ParityError):
        op.apply_A(sample(lambda r: 1 + r))


@pytest.mark.parametrize("p, expected", [(1, lambda r: 8 + 0 * r), (2, lambda r: 15 * r),
                                         (3, lambda r: 24 * r ** 2)])
def test_D2_weighted_monomials(p, expected):
    f = sample(lambda r: r ** p)
    assert np.max(np.abs(op.apply_D2_weighted(f).values - expected(f.grid))) < 1e-8


def test_hat_transform_examples(rng):
    f = sample(lambda r: r ** 2)
    assert np.max(np.abs(op.hat_transform(f).values - 15 * f.grid)) < 1e-5
    assert np.all(op.hat_transform(sample(lambda r: 0 * r)).values == 0)
    phi = op.random_smooth(rng, N, vanish=2)
    a = op.hat_transform(phi).values
    b = op.apply_D2_weighted(phi).values
    assert np.max(np.abs(a - b)) < 1e-5 * max(1.0, np.max(np.abs(b)))


def test_pair_norm_examples():
    rep = op.pair_norm(sample(lambda r: r ** 4), sample(lambda r: 0 * r))
    assert abs(rep.norm1 - 8) < 1e-4 and rep.norm2 == 0
    rep = op.pair_norm(sample(lambda r: 0 * r), sample(lambda r: r))
    assert abs(rep.norm2 - 1) < 1e-13
    assert abs(rep.total - np.hypot(rep.norm1, rep.norm2)) < 1e-15


def _energy_of_psiT(t, T=1.0):
    s = T - t
    f = sample(lambda r: pr.eval_psiT(t, r, T)[0], 60, R=s)
    g = sample(lambda r: pr.eval_psiT(t, r, T)[1], 60, R=s)
    return op.energy_norm(f, g)


def test_energy_norm_of_self_similar_solution_scales_like_minus_three_halves():
    ratio = _energy_of_psiT(0.5) / _energy_of_psiT(0.9)
    assert abs(ratio - (0.5 / 0.1) ** -1.5) < 1e-9


def test_energy_norm_even_matches_spectral_version():
    s = 0.5
    r = np.linspace(0, 1.5, 3001)
    y, yt = (-8 / (s * s * (5 + 3 * (r / s) ** 2)), -80 / (s ** 3 * (5 + 3 * (r / s) ** 2) ** 2))
    a = op.energy_norm_even(r, y, yt, s)
    b = _energy_of_psiT(0.5)
    assert abs(a / b - 1) < 1e-6


def test_hardy_examples():
    lhs, rhs = op.hardy_check(sample(lambda r: r ** 2), 2)
    assert abs(lhs - 1 / 3) < 1e-13 and abs(rhs - 16 / 3) < 1e-12
    assert op.hardy_check(sample(lambda r: 0 * r), 2) == (0.0, 0.0)


def test_hardy_is_sharp():
    ratios = []
    for eps in (0.1, 0.01):
        e = 0.5 + eps  # (alpha - 1) / 2 + eps with alpha = 2
        lhs, rhs = op.hardy_check(lambda r: r ** e, 2.0, lambda r: e * r ** (e - 1))
        assert lhs <= rhs
        ratios.append(lhs / rhs)
    assert ratios[1] > ratios[0] and ratios[1] > 0.95


def test_hardy_holds_on_random_samples(rng):
    for _ in range(20):
        u = op.random_smooth(rng, N, vanish=2)
        lhs, rhs = op.hardy_check(u, 3.0)
        assert lhs <= rhs * (1 + 1e-12)


def test_moser_constants_recorded_and_stable_under_refinement():
    worst = {}
    for n in (32, 64):
        rng = np.random.default_rng(7)
        m = {}
        for _ in range(100):
            for k, v in op.moser_ratios(op.random_smooth(rng, n, vanish=1)).items():
                m[k] = max(m.get(k, 0.0), v)
        worst[n] = m
    for k in worst[32]:
        assert np.isfinite(worst[32][k]) and worst[32][k] < 1.0
        assert abs(worst[64][k] / worst[32][k] - 1) < 1e-3


def test_nonlinearity_lipschitz_on_unit_ball(rng):
    ratios = []
    for _ in range(30):
        u, v = (op.random_smooth(rng, N, vanish=1) for _ in range(2))
        u = u.with_values(u.values / op.norm2(u) * rng.uniform(0.1, 1))
        v = v.with_values(v.values / op.norm2(v) * rng.uniform(0.1, 1))
        d = op.nonlinear_term(u).values - op.nonlinear_term(v).values
        diff = op.norm1(u.with_values(d))
        ratios.append(diff / ((op.norm2(u) + op.norm2(v)) * op.norm2(u.with_values(u.values - v.values))))
    assert max(ratios) < 1.0
