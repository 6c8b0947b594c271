import numpy as np
import pytest

from ymblowup import linear as L
from ymblowup import operators as op
from ymblowup.grid import ResolutionError, SimGrid

MU0 = -0.5889


def test_assemble_requires_resolution():
    with pytest.raises(ResolutionError):
        L.assemble_generator(16)


def test_generator_structure():
    G = L.assemble_generator(32)
    N = 32
    assert G.dimension == 64 and G.matrix.shape == (64, 64)
    # the potential acts on the second component into the first only
    assert not np.any(G.Lprime_part[N:, :]) and not np.any(G.Lprime_part[:, :N])


@pytest.mark.parametrize("N", [64, 128])
def test_symmetry_mode_is_eigenvector(N):
    G = L.assemble_generator(N)
    g = SimGrid(N).symmetry_mode()
    assert np.max(np.abs(G.matrix @ g - g)) <= 1e-6


def test_free_generator_matrix_agrees_with_rho_grid_reference():
    N = 64
    g = SimGrid(N)
    x = g.x
    u = np.concatenate([np.cos(2 * x) * x, np.exp(-x)])
    rg = op.GridFunction.sample(lambda r: r, 48).grid
    f1, f2 = g.fields(u, rg)
    a1, a2 = L.apply_free_generator_rho(op.GridFunction(rg, f1, 5), op.GridFunction(rg, f2, 1))
    b1, b2 = g.fields(L.assemble_generator(N).L0_part @ u, rg)
    assert np.max(np.abs(a1.values - b1)) < 1e-7 * np.max(np.abs(b1))
    assert np.max(np.abs(a2.values - b2)) < 1e-4 * np.max(np.abs(b2))


def test_constant_second_component_probe():
    c = 0.7
    rg = op.GridFunction.sample(lambda r: r, 24).grid
    first, _ = L.apply_free_generator_rho(op.GridFunction(rg, 0 * rg), op.GridFunction(rg, c + 0 * rg))
    assert np.max(np.abs(first.values + c * rg ** 2 / 2)) < 1e-14


def test_discrete_spectrum_converges_to_shooting_values():
    kept, spurious = L.converged_spectrum(64)
    kept = np.sort_complex(kept)
    assert len(kept) == 2
    assert abs(kept[1] - 1) < 1e-8
    assert abs(kept[0] - MU0) < 1e-3
    assert len(spurious) == 0


def test_free_resolvent_zero_and_recovery():
    N = 64
    z = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    u, _ = L.free_resolvent_at_2(z, z, N)
    assert not np.any(u.u)
    g = SimGrid(N)
    x = g.x
    U = np.concatenate([L.bump(0.1, 0.6)(x), L.bump(0.15, 0.55)(x)])
    F = 2 * U - L.assemble_generator(N).L0_part @ U

    def comp(k):
        def f(r):
            r = np.asarray(r, dtype=float)
            return np.where(r * r < 0.08, 0.0, g.fields(F, r)[k])
        return f
    sol, _ = L.free_resolvent_at_2(comp(0), comp(1), N)
    assert np.max(np.abs(sol.u - U)) < 1e-5 * np.max(np.abs(U))


def test_free_resolvent_rejects_data_near_origin():
    with pytest.raises(ValueError):
        L.free_resolvent_at_2(lambda r: np.ones_like(r), lambda r: np.ones_like(r), 64)


def test_free_resolvent_residual_on_bump():
    assert L.resolvent_residual(L.bump(0.3, 0.7), L.bump(0.35, 0.65, 2.0), 256) <= 1e-6


def test_projection_properties():
    N = 64
    Pd = L.build_projection(N)
    P = Pd.matrix
    g = SimGrid(N).symmetry_mode()
    assert np.max(np.abs(P @ g - g)) < 1e-12
    assert np.max(np.abs(P @ P - P)) < 1e-12
    assert np.linalg.matrix_rank(P, tol=1e-10 * np.linalg.norm(P)) == 1
    A = L.assemble_generator(N).matrix
    u = L.random_state(N, 3, project=False)
    lhs, rhs = P @ (A @ u), A @ (P @ u)
    assert np.max(np.abs(lhs - rhs)) < 1e-7 * np.max(np.abs(rhs))
    # kernel: a second-component vector orthogonal to the left vector
    v = np.concatenate([np.zeros(N), np.random.default_rng(0).standard_normal(N)])
    v -= Pd.left_vector * (Pd.left_vector @ v) / (Pd.left_vector @ Pd.left_vector)
    assert np.max(np.abs(Pd.apply(v))) < 1e-12


def test_projection_matches_contour_integral():
    N = 64
    P = L.build_projection(N).matrix
    Pc = L.riesz_projection_contour(N)
    assert np.max(np.abs(P - Pc)) < 1e-6 * np.max(np.abs(P))


def test_symmetry_mode_grows_like_e_tau():
    N = 64
    g = SimGrid(N).symmetry_mode()
    tr = L.linear_evolve(g, 3.0)
    dev = SimGrid(N).hnorm(tr.final * np.exp(-3.0) - g) / SimGrid(N).hnorm(g)
    assert dev <= 1e-4
    assert abs(L.fit_rate(tr.tau, tr.norm_total).slope - 1) < 1e-3


def test_free_semigroup_bound_on_random_states():
    N = 64
    U = L.random_state(N, 11, project=False, batch=10)
    tr = L.linear_evolve(U, 3.0, with_potential=False)
    bound = tr.norm_total[0] * np.exp(-1.5 * tr.tau)[:, None]
    assert np.all(tr.norm_total <= bound * (1 + 1e-8))


def test_projected_decay_rate_and_monotonicity():
    N = 64
    U = L.random_state(N, 5, batch=8)
    tr = L.linear_evolve(U, 8.0)
    stab = tr.norm_stable / tr.norm_stable[0]
    sup = stab.max(axis=1)
    assert abs(L.fit_rate(tr.tau, sup, (2, 8)).slope - MU0) < 0.05
    late = tr.tau >= 2
    assert np.all(np.diff(tr.norm_stable[late], axis=0) <= 1e-12)


def test_step_size_guard():
    N = 64
    with pytest.raises(L.StepSizeError):
        L.linear_evolve(SimGrid(N).symmetry_mode(), 1.0, dtau=10 * L.stable_dtau(N))
    with pytest.raises(ValueError):
        L.linear_evolve(SimGrid(N).symmetry_mode(), 1.0, dtau=-1.0)


def test_fit_rate_exact_exponentials():
    t = np.linspace(0, 10, 41)
    assert abs(L.fit_rate(t, np.exp(-0.6 * t)).slope + 0.6) < 1e-12
    assert abs(L.fit_rate(t, 3 * np.exp(t), (2, 8)).slope - 1) < 1e-12


def test_fit_rate_errors():
    t = np.linspace(0, 10, 41)
    with pytest.raises(L.FitError):
        L.fit_rate(t, np.exp(t), (2, 3))
    with pytest.raises(L.FitError):
        L.fit_rate(t, -np.exp(t))
    with pytest.raises(L.FitError):
        L.fit_rate(t[:2], np.exp(t[:2]), (0, 5))
