"""Closed-form profiles of the self-similar Yang-Mills blowup and an identity suite.

Every evaluator is a rational expression in rho written over a power of
(5 + 3 rho^2), so nothing is truncated and cancellation near rho = 1 is avoided.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import mpmath as mp
import numpy as np

RHO_MAX = 1.5  # data live on [0, 3/2]


class DomainError(ValueError):
    """Argument outside the domain of a closed-form evaluator."""


def _rho(rho, rmax: float = RHO_MAX):
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0) or np.any(r > rmax + 1e-14):
        raise DomainError(f"rho must lie in [0, {rmax}]")
    return r


def _out(val, like):
    return float(val) if np.ndim(like) == 0 else val


def eval_W0(rho):
    """Ground state W0(rho) = (1 - rho^2) / (1 + 3 rho^2 / 5)."""
    r = _rho(rho)
    q = r * r
    return _out(5 * (1 - q) / (5 + 3 * q), rho)


def eval_W0_prime(rho):
    r = _rho(rho)
    q = r * r
    return _out(-80 * r / (5 + 3 * q) ** 2, rho)


def eval_F(psi):
    p = np.asarray(psi, dtype=float)
    return _out(p * (p + 1) * (p + 2), psi)


def eval_Fprime(psi):
    p = np.asarray(psi, dtype=float)
    return _out(3 * p * p + 6 * p + 2, psi)


def eval_V(rho):
    """Potential V(rho) = -144 (5 - rho^2) / (5 + 3 rho^2)^2."""
    r = _rho(rho)
    q = r * r
    return _out(-144 * (5 - q) / (5 + 3 * q) ** 2, rho)


def eval_symmetry_mode(rho):
    """Both components (g1, g2) of the normalized symmetry mode."""
    r = _rho(rho)
    q = r * r
    s = 5 + 3 * q
    g1 = r ** 5 * (5 - q) / s ** 3
    g2 = r * (125 - 50 * q - 3 * q * q) / s ** 4
    return _out(g1, rho), _out(g2, rho)


def eval_h0(rho):
    r = _rho(rho)
    q = r * r
    return _out(q / (5 + 3 * q) ** 2, rho)


def eval_gtilde(rho):
    r = _rho(rho)
    q = r * r
    return _out(q * (35 - 3 * q) / (3 * (5 + 3 * q) ** 3), rho)


def eval_Ntilde(x, rho):
    """Nonlinear remainder 9 W0(rho) x^2 + 3 x^3."""
    xx = np.asarray(x, dtype=float)
    val = 9 * np.asarray(eval_W0(rho)) * xx ** 2 + 3 * xx ** 3
    return float(val) if np.ndim(val) == 0 else val


def eval_psiT(t, r, T: float = 1.0):
    """Self-similar solution psi^T(t, r) = W0(r/(T-t)) - 1 and its time derivative.

    W0 is evaluated for any rho >= 0 here (outside the lightcone as well),
    which is what the physical-space solver needs.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t >= T):
        raise DomainError("psi^T requires t < T")
    rr = np.asarray(r, dtype=float)
    if np.any(rr < 0):
        raise DomainError("r must be nonnegative")
    s = T - t
    q = (rr / s) ** 2
    psi = -8 * q / (5 + 3 * q)
    # psi_t = (r/s^2) W0'(r/s) = rho W0'(rho) / s
    psit = -80 * q / (5 + 3 * q) ** 2 / s
    shape = np.broadcast(t, rr).shape
    if shape == ():
        return float(psi), float(psit)
    return np.broadcast_to(psi, shape).copy(), np.broadcast_to(psit, shape).copy()


@dataclass(frozen=True)
class ClosedForm:
    name: str
    domain: tuple[float, float]
    eval: Callable
    endpoints: dict


CLOSED_FORMS = {
    "W0": ClosedForm("W0", (0.0, RHO_MAX), eval_W0, {0.0: 1.0, 1.0: 0.0}),
    "W0_prime": ClosedForm("W0_prime", (0.0, RHO_MAX), eval_W0_prime, {0.0: 0.0, 1.0: -1.25}),
    "F": ClosedForm("F", (-np.inf, np.inf), eval_F, {0.0: 0.0, -1.0: 0.0}),
    "Fprime": ClosedForm("Fprime", (-np.inf, np.inf), eval_Fprime, {0.0: 2.0, -1.0: -1.0}),
    "V": ClosedForm("V", (0.0, 1.0), eval_V, {0.0: -28.8, 1.0: -9.0}),
    "g1": ClosedForm("g1", (0.0, 1.0), lambda r: eval_symmetry_mode(r)[0], {0.0: 0.0, 1.0: 1 / 128}),
    "g2": ClosedForm("g2", (0.0, 1.0), lambda r: eval_symmetry_mode(r)[1], {0.0: 0.0, 1.0: 9 / 512}),
    "h0": ClosedForm("h0", (0.0, 1.0), eval_h0, {0.0: 0.0, 1.0: 1 / 64}),
    "gtilde": ClosedForm("gtilde", (0.0, 1.0), eval_gtilde, {0.0: 0.0, 1.0: 1 / 48}),
    "Ntilde": ClosedForm("Ntilde", (0.0, 1.0), eval_Ntilde, {}),
    "psiT": ClosedForm("psiT", (0.0, RHO_MAX), eval_psiT, {}),
}


# ---------------------------------------------------------------------------
# independent high-precision oracle (mpmath), used only by the identity suite

def _mp_W0(r):
    return (1 - r * r) / (1 + mp.mpf(3) / 5 * r * r)


def _mp_g(r):
    # g(rho) = rho W0'(rho), differentiated numerically in extended precision
    return r * mp.diff(_mp_W0, r)


def _oracle_g_pair(r):
    r = mp.mpf(r)
    g1 = -(r ** 3) * (r * mp.diff(_mp_g, r) + _mp_g(r)) / 240
    # (rho^{-1} d/drho)^2 (rho^3 g)
    inner = lambda s: mp.diff(lambda z: z ** 3 * _mp_g(z), s) / s
    g2 = -(mp.diff(inner, r) / r) / 240
    return g1, g2


def _oracle_pde_residual(t, r, T):
    """Residual of psi_tt - psi_rr - 2 psi_r / r + 3 F(psi)/r^2 for psi^T, in mpmath."""
    t, r, T = mp.mpf(t), mp.mpf(r), mp.mpf(T)
    psi = lambda tt, rr: _mp_W0(rr / (T - tt)) - 1
    F = lambda p: p * (p + 1) * (p + 2)
    ptt = mp.diff(lambda tt: psi(tt, r), t, 2)
    prr = mp.diff(lambda rr: psi(t, rr), r, 2)
    pr = mp.diff(lambda rr: psi(t, rr), r)
    return ptt - prr - 2 * pr / r + 3 * F(psi(t, r)) / r ** 2


def psiT_fd_residual(h: float, T: float = 1.0, t: float = 0.2, rs=None) -> float:
    """Max residual of the wave equation for psi^T with centered differences of width h."""
    rs = np.linspace(0.1, 0.7, 13) if rs is None else np.asarray(rs)
    p = lambda tt, rr: eval_psiT(tt, rr, T)[0]
    ptt = (p(t + h, rs) - 2 * p(t, rs) + p(t - h, rs)) / h ** 2
    prr = (p(t, rs + h) - 2 * p(t, rs) + p(t, rs - h)) / h ** 2
    pr = (p(t, rs + h) - p(t, rs - h)) / (2 * h)
    res = ptt - prr - 2 * pr / rs + 3 * eval_F(p(t, rs)) / rs ** 2
    return float(np.max(np.abs(res)))


def identity_suite(n: int = 201, n_oracle: int = 21):
    """Run the closed-form identity checks.

    Returns a list of rows (identity_name, grid_size, max_abs_error).
    """
    rows = []
    rho = np.linspace(0.0, 1.0, n)
    rp = rho[1:]
    w0 = eval_W0(rp)
    lhs = rp ** 2 * eval_V(rp)
    rhs = 3 * eval_Fprime(w0 - 1) - 6
    rel = np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))
    rows.append(("V_vs_Fprime", n, float(rel.max())))

    err = np.abs(rho * eval_W0_prime(rho) + 80 * eval_h0(rho))
    rows.append(("rhoW0prime_plus_80h0", n, float(err.max())))

    with mp.workdps(40):
        rows.extend(_oracle_rows(n_oracle))
    return rows


def _oracle_rows(n_oracle: int):
    rows = []
    ro = np.linspace(0.05, 1.0, n_oracle)
    e1 = e2 = 0.0
    for r in ro:
        o1, o2 = _oracle_g_pair(r)
        g1, g2 = eval_symmetry_mode(r)
        e1 = max(e1, abs(float(o1) - g1))
        e2 = max(e2, abs(float(o2) - g2))
    rows.append(("g1_normalization", n_oracle, e1))
    rows.append(("g2_normalization", n_oracle, e2))

    e = 0.0
    for r in ro:
        e = max(e, abs(float(_oracle_pde_residual(0.3, r, 1.0))))
    rows.append(("psiT_pde_residual", n_oracle, e))

    e = 0.0
    for r in ro:
        tt = mp.mpf("0.3")
        d = mp.diff(lambda s: _mp_W0(mp.mpf(r) / (1 - s)) - 1, tt)
        e = max(e, abs(float(d) - eval_psiT(0.3, r, 1.0)[1]))
    rows.append(("psiT_time_derivative", n_oracle, e))
    return rows


def psiT_fd_order(h: float = 1e-2) -> float:
    """Observed convergence order of the centered-difference residual of psi^T."""
    r1 = psiT_fd_residual(h)
    r2 = psiT_fd_residual(h / 2)
    return float(np.log2(r1 / r2))
