import numpy as np
import pytest

from ymblowup import lightcone as lc
from ymblowup import profiles as pr


def closed(T0):
    return (lambda r: pr.eval_psiT(0.0, r, T0)[0]), (lambda r: pr.eval_psiT(0.0, r, T0)[1])


def test_config_validation():
    with pytest.raises(lc.ConfigError):
        lc.PhysConfig(n=20)
    with pytest.raises(lc.ConfigError):
        lc.PhysConfig(cfl=1.5)
    with pytest.raises(lc.ConfigError):
        lc.PhysConfig(t_max=0.0)


def test_data_outside_sector_rejected():
    with pytest.raises(ValueError):
        lc.evolve_physical(lambda r: 1 + 0 * r, lambda r: 0 * r, lc.PhysConfig(n=100, t_max=0.1))


def test_zero_data_stay_zero():
    z = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    run = lc.evolve_physical(z, z, lc.PhysConfig(n=100, t_max=0.5, record_every=0.1))
    assert all(not np.any(s.psi) and not np.any(s.psi_t) for s in run.states)
    assert not run.breakdown


def _tracking_error(n, T0=0.8, t_end=0.5):
    run = lc.evolve_physical(*closed(T0), lc.PhysConfig(n=n, t_max=t_end, record_every=t_end))
    st = run.states[-1]
    # psi^T is not outgoing at r = 3/2; keep to the region the boundary cannot reach by t_end
    m = st.r <= lc.R_MAX - t_end - 0.05
    return np.max(np.abs(st.psi[m] - pr.eval_psiT(st.t, st.r[m], T0)[0]))


def test_tracks_closed_form_at_fourth_order():
    e1, e2 = _tracking_error(600), _tracking_error(1200)
    assert e2 < 1e-9
    assert np.log2(e1 / e2) > 3.5


def test_small_data_stay_small():
    run = lc.evolve_physical(*lc.bump_data(1e-3), lc.PhysConfig(n=300, t_max=1.5, record_every=0.05))
    assert not run.breakdown
    assert run.sup_psi().max() <= 1e-2


def test_energy_conserved_while_contained():
    run = lc.evolve_physical(*lc.bump_data(0.5), lc.PhysConfig(n=1200, t_max=0.5, record_every=0.1))
    E = np.array([lc.energy(s) for s in run.states])
    assert np.max(np.abs(E / E[0] - 1)) < 1e-4


def test_higher_energy_conserved_by_free_flow():
    cfg = lc.PhysConfig(n=1200, t_max=0.4, record_every=0.1, nonlinear=False)
    run = lc.evolve_physical(*lc.bump_data(1.0, center=0.5, width=0.08), cfg)
    H = np.array([lc.higher_energy(s, 1.4) for s in run.states])
    assert np.max(np.abs(H / H[0] - 1)) < 1e-6


def _exact_states(T0, ts, n=1200):
    r = np.linspace(0, lc.R_MAX, n + 1)
    out = []
    for t in ts:
        s = T0 - t
        q = (r / s) ** 2
        out.append(lc.PhysState(t, r, -8 / (s * s * (5 + 3 * q)), -80 / (s ** 3 * (5 + 3 * q) ** 2)))
    return out


def test_detect_blowup_on_exact_series():
    T0 = 0.8
    states = _exact_states(T0, np.linspace(0, 0.78, 80))
    fit = lc.detect_blowup(states)
    assert abs(fit.T_fit - T0) < 1e-3


def test_detect_blowup_rejects_bounded_solution():
    run = lc.evolve_physical(*lc.bump_data(1e-3), lc.PhysConfig(n=200, t_max=1.0, record_every=0.05))
    with pytest.raises(lc.DetectionError):
        lc.detect_blowup(run.states)


def test_convergence_report_on_exact_solution_is_zero():
    T0 = 0.8
    states = _exact_states(T0, np.linspace(0.5, 0.78, 60), n=2400)
    rep = lc.convergence_report(states, T0, refine_T=False)
    assert rep.profile_error < 1e-14
    assert max(d for _, _, d in rep.slices) < 1e-12


def test_perturbed_self_similar_blowup():
    run = lc.evolve_physical(*lc.self_similar_data(0.9, 0.016), lc.PhysConfig(n=1200, record_every=0.002))
    assert run.breakdown and run.reason == "profile under-resolved"
    fit = lc.detect_blowup(run.states)
    assert 0.5 < fit.T_fit < 1.5
    rep = lc.convergence_report(run.states, fit.T_fit, T_stderr=fit.T_stderr)
    assert rep.profile_error <= 1e-2
