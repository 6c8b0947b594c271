"""Physical-space solver for psi_tt - psi_rr - (2/r) psi_r + (3/r^2) F(psi) = 0,
blowup-time detection and the self-similar convergence report.

In the sector psi(t, 0) = 0 we write psi = r^2 y. Then y is even in r, smooth
at the origin, and solves the seven-dimensional radial wave equation with a
regular nonlinearity,

    y_tt = y_rr + (6/r) y_r - 9 y^2 - 3 r^2 y^3,

which is how the 3/r^2 singularity is handled (the linear part 6 psi / r^2
cancels against the Laplacian lift; the remainder is polynomial in y). The
solver evolves u = r^3 y, which is odd in r and obeys u_tt = u_rr - 6u/r^2
plus the nonlinearity, with fourth-order centered differences and odd
reflection at r = 0. At r = R_max the outgoing condition u_t = -u_r is imposed
with a second-order upwind difference (the penultimate node uses the
second-order centered stencil).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize, stats
from scipy.interpolate import CubicSpline

from . import profiles
from .linear import RateFit, fit_rate
from .operators import energy_norm_even

R_MAX = 1.5


class ConfigError(ValueError):
    pass


class DetectionError(RuntimeError):
    pass


@dataclass
class PhysState:
    t: float
    r: np.ndarray
    y: np.ndarray
    yt: np.ndarray

    @property
    def psi(self) -> np.ndarray:
        return self.r ** 2 * self.y

    @property
    def psi_t(self) -> np.ndarray:
        return self.r ** 2 * self.yt

    def check(self, tol: float = 1e-12) -> None:
        """The sector invariants psi(t,0) = psi_t(t,0) = psi_r(t,0) = 0 hold by construction;
        only finiteness can fail."""
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.yt))):
            raise FloatingPointError(f"non-finite state at t = {self.t}")


@dataclass
class PhysConfig:
    n: int = 2400           # grid intervals on [0, R_max]
    cfl: float = 0.5
    t_max: float = 1.5
    record_every: float = 0.01
    nonlinear: bool = True
    resolve_cells: float = 24.0  # stop once the profile scale T - t drops below this many cells

    def __post_init__(self):
        if self.n < 50:
            raise ConfigError("need at least 50 grid intervals")
        if not 0 < self.cfl <= 1.0:
            raise ConfigError(f"CFL number {self.cfl} outside (0, 1] (RK4 with 4th-order stencils)")
        if self.t_max <= 0 or self.record_every <= 0:
            raise ConfigError("t_max and record_every must be positive")

    @property
    def h(self) -> float:
        return R_MAX / self.n


@dataclass
class PhysRun:
    states: list
    config: PhysConfig
    breakdown: bool = False
    breakdown_t: Optional[float] = None
    reason: str = ""

    @property
    def t(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def sup_psi_t(self) -> np.ndarray:
        return np.array([np.max(np.abs(s.psi_t)) for s in self.states])

    def sup_psi(self) -> np.ndarray:
        return np.array([np.max(np.abs(s.psi)) for s in self.states])


# ---------------------------------------------------------------------------
# spatial operator

class _Operator:
    """u = r^3 y:  u_tt = u_rr - 6u/r^2 - 9u^2/r^3 - 3u^3/r^4, u odd in r.

    With odd reflection the fourth-order stencil for u_rr is a symmetric
    matrix, so the semi-discrete linear operator has real negative spectrum.
    (Differencing y_rr + (6/r) y_r directly is non-normal near the origin and
    produces complex eigenvalues with growing modes.)
    """

    def __init__(self, n: int, nonlinear: bool):
        self.n = n
        self.h = R_MAX / n
        self.r = np.linspace(0.0, R_MAX, n + 1)
        self.nonlinear = nonlinear
        r = self.r
        self.inv_r = np.zeros_like(r)
        self.inv_r[1:] = 1 / r[1:]

    def d2(self, u):
        e = np.concatenate([-u[2:0:-1], u, [0.0, 0.0]])
        h, n = self.h, self.n
        d2 = (-e[:-4] + 16 * e[1:-3] - 30 * e[2:-2] + 16 * e[3:-1] - e[4:]) / (12 * h * h)
        d2[n - 1] = (u[n] - 2 * u[n - 1] + u[n - 2]) / (h * h)
        return d2

    def __call__(self, u, v):
        ir = self.inv_r
        acc = self.d2(u) - 6 * u * ir ** 2
        if self.nonlinear:
            y = u * ir ** 3
            acc = acc - self.r ** 3 * (9 * y * y + 3 * self.r ** 2 * y ** 3)
        acc[0] = 0.0
        dy = v.copy()
        # outgoing radiation condition u_t + u_r = 0 at the outer node, upwinded
        dy[self.n] = _outer_vt(self, u)
        acc[self.n] = 0.0
        return dy, acc

    def to_y(self, u):
        y = u * self.inv_r ** 3
        y[0] = 1.5 * y[1] - 0.6 * y[2] + 0.1 * y[3]  # even extrapolation in r^2
        return y


def evolve_physical(f, g, cfg: PhysConfig = PhysConfig(), t0: float = 0.0) -> PhysRun:
    """RK4 evolution of data psi(t0) = f, psi_t(t0) = g on [0, 3/2].

    ``f`` and ``g`` are callables of r in the psi(t,0) = 0 sector (they must
    be O(r^2)). Integration stops at ``t_max``, on NaN (breakdown flag with
    time stamp) or once the blowup profile is no longer resolved on the grid.
    """
    if cfg.cfl > 1.0:
        raise ConfigError("CFL violated")
    op = _Operator(cfg.n, cfg.nonlinear)
    r = op.r
    f0 = np.asarray(f(r), dtype=float)
    if abs(f0[0]) > 1e-12 or abs(float(np.asarray(g(r))[0])) > 1e-12:
        raise ValueError("data must vanish at r = 0 (psi(t,0) = 0 sector)")
    u = r * f0
    v = r * np.asarray(g(r), dtype=float)
    dt0 = cfg.cfl * cfg.h
    nrec = max(1, int(round(cfg.record_every / dt0)))
    dt = cfg.record_every / nrec

    def snap(tt, u, v):
        return PhysState(tt, r, op.to_y(u), op.to_y(np.r_[v[:-1], _outer_vt(op, u)]))

    run = PhysRun([snap(t0, u, v)], cfg)
    nmax = int(np.ceil((cfg.t_max - t0) / cfg.record_every - 1e-9))
    vmax_resolved = (4.0 / 3.0) / (cfg.resolve_cells * cfg.h)
    t = t0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(nmax):
            for _ in range(nrec):
                a1, b1 = op(u, v)
                a2, b2 = op(u + 0.5 * dt * a1, v + 0.5 * dt * b1)
                a3, b3 = op(u + 0.5 * dt * a2, v + 0.5 * dt * b2)
                a4, b4 = op(u + dt * a3, v + dt * b3)
                u = u + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
                v = v + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
                t += dt
                if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                    run.breakdown, run.breakdown_t, run.reason = True, t, "non-finite values"
                    return run
            st = snap(t0 + (k + 1) * cfg.record_every, u, v)
            run.states.append(st)
            if np.max(np.abs(st.psi_t)) > vmax_resolved:
                run.breakdown, run.breakdown_t, run.reason = True, st.t, "profile under-resolved"
                return run
    return run


def _outer_vt(op, u):
    n, h = op.n, op.h
    return -(3 * u[n] - 4 * u[n - 1] + u[n - 2]) / (2 * h)


# ---------------------------------------------------------------------------
# data families

def self_similar_data(T0: float, amplitude: float = 0.0, center: float = 0.4, width: float = 0.15):
    """(f, g) = psi^{T0}(0, .) + amplitude * r^2 exp(-((r - center)/width)^2), psi_t unperturbed."""
    bump = lambda r: amplitude * np.asarray(r) ** 2 * np.exp(-((np.asarray(r) - center) / width) ** 2)
    f = lambda r: profiles.eval_psiT(0.0, r, T0)[0] + bump(r)
    g = lambda r: profiles.eval_psiT(0.0, r, T0)[1]
    return f, g


def bump_data(amplitude: float, center: float = 0.4, width: float = 0.1):
    f = lambda r: amplitude * np.asarray(r) ** 2 * np.exp(-((np.asarray(r) - center) / width) ** 2)
    g = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    return f, g


# ---------------------------------------------------------------------------
# diagnostics

def energy(state: PhysState) -> float:
    """Conserved energy int (psi_t^2 + psi_r^2 + 6 G(psi)/r^2) r^2 dr, G = psi^2 (psi+2)^2 / 4."""
    r, y, v = state.r, state.y, state.yt
    h = r[1] - r[0]
    yr = np.gradient(y, h, edge_order=2)
    psi_r = 2 * r * y + r ** 2 * yr
    pot = 1.5 * r ** 2 * y ** 2 * (r ** 2 * y + 2) ** 2  # 6 G(psi) / r^2
    dens = ((r ** 2 * v) ** 2 + psi_r ** 2 + pot) * r ** 2
    return float(CubicSpline(r, dens).integrate(0.0, r[-1]))


def higher_energy(state: PhysState, R: float) -> float:
    """The E(R) norm of (psi, psi_t), conserved by the free flow while data stay inside [0, R]."""
    return energy_norm_even(state.r, state.y, state.yt, R)


@dataclass
class BlowupFit:
    T_fit: float
    T_stderr: float
    slope: float
    window: tuple


def detect_blowup(states, window_decade: bool = True, min_points: int = 6) -> BlowupFit:
    """Fit 1/sup|psi_t| = a (T - t) on the final decade of growth and extrapolate to zero."""
    t = np.array([s.t for s in states])
    m = np.array([np.max(np.abs(s.psi_t)) for s in states])
    if len(t) < min_points or not np.all(np.isfinite(m)):
        raise DetectionError("too few finite slices")
    q = 1.0 / np.maximum(m, 1e-300)
    # last monotone run of growth
    j = len(q) - 1
    while j > 0 and q[j - 1] > q[j]:
        j -= 1
    if window_decade:
        lo = max(j, int(np.searchsorted(-q, -10 * q[-1])))
    else:
        lo = j
    idx = np.arange(lo, len(q))
    if len(idx) < min_points or q[idx[0]] < 5 * q[-1]:
        raise DetectionError("no monotone blowup window (sup|psi_t| does not grow like 1/(T - t))")
    fit = stats.linregress(t[idx], q[idx])
    if fit.slope >= 0:
        raise DetectionError("1/sup|psi_t| not decreasing")
    T = -fit.intercept / fit.slope
    # delta-method error of the root
    cov_ts = -np.mean(t[idx]) * fit.stderr ** 2
    dTdb, dTda = -1 / fit.slope, fit.intercept / fit.slope ** 2
    var = dTdb ** 2 * fit.intercept_stderr ** 2 + dTda ** 2 * fit.stderr ** 2 + 2 * dTdb * dTda * cov_ts
    return BlowupFit(float(T), float(np.sqrt(max(var, 0.0))), float(fit.slope), (float(t[idx[0]]), float(t[idx[-1]])))


@dataclass
class BlowupReport:
    T_fit: float
    T_used: float
    profile_error: float
    rate_fit: Optional[RateFit]
    slices: list = field(default_factory=list)  # (t, T - t, rescaled difference norm)
    low_confidence: bool = False
    T_stderr: float = 0.0

    def summary(self) -> dict:
        return {
            "T_fit": self.T_fit, "T_stderr": self.T_stderr, "T_used": self.T_used,
            "profile_error": self.profile_error,
            "exponent": None if self.rate_fit is None else self.rate_fit.slope,
            "rate_fit": None if self.rate_fit is None else {
                "slope": self.rate_fit.slope, "intercept": self.rate_fit.intercept,
                "residual": self.rate_fit.residual, "slope_stderr": self.rate_fit.slope_stderr,
                "window": list(self.rate_fit.window)},
            "low_confidence": self.low_confidence,
            "slices": [{"t": a, "T_minus_t": b, "difference_norm": c} for a, b, c in self.slices],
        }


def rescaled_difference(state: PhysState, T: float, rho_max: float = 1.0):
    """(T-t)^{3/2} ||(psi, psi_t) - (psi^T, psi^T_t)||_{E(T-t)}, computed as the E(1) norm of
    F(rho) = (psi - psi^T)(t, s rho), G(rho) = s (psi_t - psi^T_t)(t, s rho), s = T - t,
    sampled at the grid nodes (no interpolation: rho_j = r_j / s)."""
    s = T - state.t
    r = state.r
    q = (r / s) ** 2
    yT = -8 / (s * s * (5 + 3 * q))
    vT = -80 / (s ** 3 * (5 + 3 * q) ** 2)
    eta = s * s * (state.y - yT)
    zeta = s ** 3 * (state.yt - vT)
    return energy_norm_even(r / s, eta, zeta, rho_max)


def profile_error(state: PhysState, T: float, rho_max: float = 0.9) -> float:
    s = T - state.t
    m = state.r <= rho_max * s
    rho = state.r[m] / s
    return float(np.max(np.abs(state.psi[m] + 1 - profiles.eval_W0(rho))))


def convergence_report(states, T_fit: float, refine_T: bool = True, T_stderr: float = 0.0,
                       n_slices: int = 16, min_cells: float = 16.0) -> BlowupReport:
    """Rescaled-norm convergence towards psi^T along the last decade of T - t.

    The slices are spaced geometrically in T - t from the last resolved slice
    back one decade. With ``refine_T`` the blowup time is re-estimated as the
    minimizer of the profile error at the last slice (within the fit
    uncertainty window); both values are reported.
    """
    h = states[-1].r[1] - states[-1].r[0]
    usable = [st for st in states if T_fit - st.t > min_cells * h]
    if not usable:
        raise DetectionError("no slice resolves the blowup profile")
    last = usable[-1]
    T_used = T_fit
    if refine_T:
        width = max(20 * T_stderr, 1e-3 * (T_fit - last.t))
        res = optimize.minimize_scalar(lambda T: profile_error(last, T), method="bounded",
                                       bounds=(T_fit - width, T_fit + width),
                                       options={"xatol": 1e-10})
        T_used = float(res.x)
    t = np.array([st.t for st in usable])
    s_all = T_used - t
    s_end = s_all.min()
    targets = s_end * np.logspace(1, 0, n_slices)
    picks = sorted({int(np.argmin(np.abs(s_all - tg))) for tg in targets})
    states = usable
    slices = []
    for i in picks:
        st = states[i]
        slices.append((float(st.t), float(T_used - st.t), rescaled_difference(st, T_used)))
    S = np.array([b for _, b, _ in slices])
    D = np.array([c for _, _, c in slices])
    low = bool(len(slices) < 10 or S.max() / S.min() < 9.0)
    fit = None
    if len(slices) >= 3 and np.all(D > 0):
        lS = np.log(S)
        fit = fit_rate(lS, D, (lS.min(), lS.max())) if lS.max() - lS.min() >= 2 else _loglog(lS, D)
    pe = profile_error(states[picks[-1]], T_used)
    return BlowupReport(T_fit, T_used, pe, fit, slices, low, T_stderr)


def _loglog(lS, D) -> RateFit:
    f = stats.linregress(lS, np.log(D))
    res = float(np.sqrt(np.mean((np.log(D) - f.intercept - f.slope * lS) ** 2)))
    return RateFit(float(f.slope), float(f.intercept), res, float(f.stderr), (float(lS.min()), float(lS.max())))
