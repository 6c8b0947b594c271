"""Nonlinear evolution in similarity variables, the initial-data map U(v, T) and
tuning of the blowup time so that the symmetry-mode instability is removed.

Data perturbations are given at the level of the physical data: with
psi(0, r) = psi^1(0, r) + df(r) and psi_t(0, r) = psi^1_t(0, r) + dg(r), both
written as df = r^2 a(r^2), dg = r^2 b(r^2) (the regularity class of the
topological sector). In the (p, w) variables of :mod:`ymblowup.grid`

    w = T^2 a(T^2 x) - 40 (T^2 - 1) / ((5 + 3 T^2 x)(5 + 3 x))
    p = T^3 b(T^2 x) - 80 T^3 / (5 + 3 T^2 x)^2 + 80 / (5 + 3 x)^2
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize
from scipy.interpolate import CubicSpline

from . import chebyshev as cheb
from .grid import FieldState, SimGrid, check_N
from .linear import RateFit, assemble_generator, build_projection, fit_rate, spectral_radius

__all__ = [
    "FieldState", "EvolutionConfig", "Perturbation", "EvolutionTrace", "TuningResult",
    "rhs", "initial_data_U", "closed_form_difference", "evolve", "tune_blowup_time",
    "DivergenceError", "OutOfRegimeError",
]

T_RANGE = (0.5, 1.5)
BLOWUP_NORM = 1e6


class DivergenceError(FloatingPointError):
    def __init__(self, msg: str, last_tau: float):
        super().__init__(f"{msg} (last good tau = {last_tau:.6g})")
        self.last_tau = last_tau


class OutOfRegimeError(RuntimeError):
    pass


@dataclass
class EvolutionConfig:
    N: int = 64
    dtau: Optional[float] = None  # None: 0.9 / spectral radius of the generator
    tau_max: float = 8.0
    filter: float = 0.0
    record_every: float = 0.25

    def __post_init__(self):
        check_N(self.N, 32)
        if self.dtau is not None and self.dtau <= 0:
            raise ValueError("dtau must be positive")
        if self.tau_max <= 0:
            raise ValueError("tau_max must be positive")
        if self.filter < 0:
            raise ValueError("filter strength must be nonnegative")
        if self.record_every <= 0:
            raise ValueError("record_every must be positive")

    def step(self) -> float:
        return self.dtau if self.dtau is not None else 0.9 / spectral_radius(self.N)


# ---------------------------------------------------------------------------
# right-hand side

class _System:
    _cache: dict = {}

    def __init__(self, N: int):
        g = SimGrid(N)
        self.N = N
        self.A = assemble_generator(N).matrix
        self.W0 = g.W0
        self.x = g.x

    @classmethod
    def get(cls, N: int) -> "_System":
        if N not in cls._cache:
            cls._cache[N] = cls(N)
        return cls._cache[N]

    def nonlinear(self, u):
        w = u[self.N:]
        out = np.zeros_like(u)
        out[: self.N] = -(9 * self.W0 * w * w + 3 * self.x * w ** 3)
        return out

    def __call__(self, u, linear_only: bool = False):
        du = self.A @ u
        if not linear_only:
            du += self.nonlinear(u)
        return du


def rhs(state, linear_only: bool = False) -> np.ndarray:
    """Stacked (p_tau, w_tau). The nonlinearity enters the first component only.

    The boundary behavior at rho = 0 is built into the variables, so there is
    no parity to violate; non-finite input is rejected instead.
    """
    u = state.u if isinstance(state, FieldState) else np.asarray(state, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("state contains non-finite values")
    return _System.get(len(u) // 2)(u, linear_only)


# ---------------------------------------------------------------------------
# data

@dataclass
class Perturbation:
    """df = r^2 a(r^2), dg = r^2 b(r^2) as callables a(s), b(s) on s in [0, 9/4]."""
    a: Callable
    b: Callable
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def df(self, r):
        r = np.asarray(r, dtype=float)
        return r * r * self.a(r * r)

    def dg(self, r):
        r = np.asarray(r, dtype=float)
        return r * r * self.b(r * r)

    @classmethod
    def zero(cls):
        z = lambda s: np.zeros_like(np.asarray(s, dtype=float))
        return cls(z, z, "zero", {})

    @classmethod
    def psiT0(cls, T0: float):
        """Data of psi^{T0} relative to psi^1."""
        if not T_RANGE[0] < T0 < T_RANGE[1]:
            raise ValueError("T0 must lie in (1/2, 3/2)")
        a = lambda s: -8 / (5 * T0 ** 2 + 3 * np.asarray(s)) + 8 / (5 + 3 * np.asarray(s))
        b = lambda s: -80 * T0 / (5 * T0 ** 2 + 3 * np.asarray(s)) ** 2 + 80 / (5 + 3 * np.asarray(s)) ** 2
        return cls(a, b, "psiT0", {"T0": T0})

    @classmethod
    def bump(cls, amplitude: float, center: float = 0.5, width: float = 0.2):
        """Gaussian bump in r^2 for psi, nothing for psi_t; sup|a| = amplitude."""
        s0, sw = center ** 2, width
        a = lambda s: amplitude * np.exp(-((np.asarray(s) - s0) / sw) ** 2)
        z = lambda s: np.zeros_like(np.asarray(s, dtype=float))
        return cls(a, z, "bump", {"amplitude": amplitude, "center": center, "width": width})

    @classmethod
    def random(cls, amplitude: float, seed: int = 0, terms: int = 6):
        """Random Chebyshev series in s on [0, 9/4], each scaled to sup-norm ``amplitude``."""
        rng = np.random.default_rng(seed)
        c = rng.standard_normal((2, terms)) * 0.6 ** np.arange(terms)
        ss = np.linspace(0, 2.25, 401)
        funcs = []
        for k in range(2):
            ck = c[k] * amplitude / np.max(np.abs(np.polynomial.chebyshev.chebval(ss / 1.125 - 1, c[k])))
            funcs.append(lambda s, ck=ck: np.polynomial.chebyshev.chebval(np.asarray(s) / 1.125 - 1, ck))
        return cls(funcs[0], funcs[1], "random", {"amplitude": amplitude, "seed": seed, "terms": terms})

    @classmethod
    def from_csv(cls, path):
        """Columns r, df, dg (header row required), sampled on [0, 3/2] including r = 0."""
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        try:
            r = np.array([float(q["r"]) for q in rows])
            df = np.array([float(q["df"]) for q in rows])
            dg = np.array([float(q["dg"]) for q in rows])
        except KeyError as e:
            raise ValueError(f"data CSV lacks column {e}") from None
        if r.min() > 1e-12 or r.max() < 1.5 - 1e-12 or np.any(np.diff(r) <= 0):
            raise ValueError("data CSV must cover [0, 3/2] with increasing r")
        m = r > 0
        s = r[m] ** 2
        # a = df / r^2 as a smooth function of s; the r = 0 value is extrapolated
        sa = CubicSpline(s, df[m] / s, extrapolate=True)
        sb = CubicSpline(s, dg[m] / s, extrapolate=True)
        return cls(lambda q: sa(q), lambda q: sb(q), "csv", {"path": str(path)})

    def sup_norm(self) -> float:
        s = np.linspace(0, 2.25, 401)
        return float(max(np.max(np.abs(self.df(np.sqrt(s)))), np.max(np.abs(self.dg(np.sqrt(s))))))


def initial_data_U(pert: Perturbation, T: float, N: int) -> FieldState:
    """Similarity-variable data at tau = -log T for psi^1 + (df, dg) measured against psi^T."""
    if not T_RANGE[0] < T < T_RANGE[1]:
        raise ValueError(f"T = {T} outside (1/2, 3/2)")
    x = SimGrid(N).x
    s = T * T * x
    d = 5 + 3 * s
    w = T ** 2 * pert.a(s) - 40 * (T * T - 1) / (d * (5 + 3 * x))
    p = T ** 3 * pert.b(s) - 80 * T ** 3 / d ** 2 + 80 / (5 + 3 * x) ** 2
    return FieldState.from_pw(p, w, tau=0.0 - float(np.log(T)))


def closed_form_difference(T: float, tau: float, N: int, T_ref: float = 1.0) -> FieldState:
    """psi^{T_ref} - psi^T in the similarity coordinates of psi^T at slow time tau."""
    x = SimGrid(N).x
    sl = np.exp(-tau)
    k = sl / (T_ref - T + sl)
    if not k > 0:
        raise ValueError("psi^{T_ref} has already blown up at this tau")
    w = -8 * k * k / (5 + 3 * k * k * x) + 8 / (5 + 3 * x)
    p = -80 * k ** 3 / (5 + 3 * k * k * x) ** 2 + 80 / (5 + 3 * x) ** 2
    return FieldState.from_pw(p, w, tau=tau)


# ---------------------------------------------------------------------------
# time stepping

@dataclass
class EvolutionTrace:
    tau: np.ndarray
    norm: np.ndarray
    amplitude: np.ndarray
    final: FieldState
    blowup: bool = False
    blowup_tau: Optional[float] = None
    dtau: float = 0.0
    filter: float = 0.0
    states: Optional[list] = None

    def rows(self):
        for t, n, a in zip(self.tau, self.norm, self.amplitude):
            yield float(t), float(n), float(a)


def _filter_matrix(N: int, strength: float):
    if strength <= 0:
        return None
    return cheb.exp_filter(N, strength)


def evolve(u0: FieldState, cfg: EvolutionConfig, linear_only: bool = False,
           keep_states: bool = False, tau_end: Optional[float] = None,
           stop_norm: Optional[float] = None) -> EvolutionTrace:
    """RK4 method of lines for Phi_tau = L Phi + N(Phi) from u0.tau to u0.tau + cfg.tau_max
    (or to the absolute time ``tau_end``).

    Records the total norm and the symmetry-mode amplitude l.u / l.g every
    ``record_every``; stops with the blowup flag once the norm exceeds 1e6,
    and without it at the first record where the norm exceeds ``stop_norm``.
    """
    if u0.N != cfg.N:
        raise ValueError("state and config have different N")
    N = cfg.N
    sys_ = _System.get(N)
    grid = SimGrid(N)
    Pd = build_projection(N)
    Fm = _filter_matrix(N, cfg.filter)
    t0 = u0.tau
    t1 = t0 + cfg.tau_max if tau_end is None else tau_end
    span = t1 - t0
    if span <= 0:
        raise ValueError("nothing to integrate")
    nrec = max(1, int(np.ceil(span / cfg.record_every - 1e-9)))
    rec = span / nrec
    nsub = max(1, int(np.ceil(rec / cfg.step() - 1e-9)))
    h = rec / nsub
    u = np.array(u0.u, dtype=float)
    f = lambda v: sys_(v, linear_only)

    taus, norms, amps, states = [t0], [grid.hnorm(u)], [Pd.amplitude(u)], []
    if keep_states:
        states.append(FieldState(t0, u.copy(), N))
    blow, blow_tau = False, None
    for k in range(1, nrec + 1):
        for j in range(nsub):
            prev = u
            k1 = f(u)
            k2 = f(u + 0.5 * h * k1)
            k3 = f(u + 0.5 * h * k2)
            k4 = f(u + h * k3)
            u = u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if Fm is not None:
                u[:N] = Fm @ u[:N]
                u[N:] = Fm @ u[N:]
            # cheap per-step guard: the nodal size bounds the norm from below up to O(1)
            if not np.max(np.abs(u)) < BLOWUP_NORM:
                blow = True
                if not np.all(np.isfinite(u)):
                    u = prev
                    j -= 1
                break
        t = t0 + (k - 1) * rec + (j + 1) * h
        if not np.all(np.isfinite(u)):
            raise DivergenceError("non-finite state", taus[-1])
        nrm = grid.hnorm(u)
        taus.append(t)
        norms.append(nrm)
        amps.append(Pd.amplitude(u))
        if keep_states:
            states.append(FieldState(t, u.copy(), N))
        if blow or nrm > BLOWUP_NORM:
            blow, blow_tau = True, t
            break
        if stop_norm is not None and nrm > stop_norm:
            break
    return EvolutionTrace(np.array(taus), np.array(norms), np.array(amps), FieldState(taus[-1], u, N),
                          blow, blow_tau, h, cfg.filter, states if keep_states else None)


# ---------------------------------------------------------------------------
# blowup-time tuning

@dataclass
class TuningResult:
    T_star: float
    bracket: tuple
    unstable_amplitude_trace: list
    decay_fit: Optional[RateFit]
    decay_trace: Optional[EvolutionTrace] = None
    monotone: bool = True

    def summary(self) -> dict:
        return {
            "T_star": self.T_star,
            "bracket": list(self.bracket),
            "iterations": [{"T": T, "amplitude": a} for T, a in self.unstable_amplitude_trace],
            "decay_fit": None if self.decay_fit is None else {
                "slope": self.decay_fit.slope, "intercept": self.decay_fit.intercept,
                "residual": self.decay_fit.residual, "slope_stderr": self.decay_fit.slope_stderr,
                "window": list(self.decay_fit.window)},
            "monotone": self.monotone,
        }


def unstable_amplitude(pert: Perturbation, T: float, cfg: EvolutionConfig, tau_probe: float = 6.0,
                       exit_norm: float = 0.1) -> float:
    """Signed coordinate along g of P Phi_T(tau_probe).

    Once the norm leaves the perturbative regime (``exit_norm``) the amplitude
    at the exit is continued with the linear e^tau growth to tau_probe, which
    keeps a(T) finite and sign-correct for trajectories that blow up or
    saturate early. Near the root no exit happens and the value is exact.
    """
    u0 = initial_data_U(pert, T, cfg.N)
    if not np.any(u0.u):
        return 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        tr = evolve(u0, cfg, tau_end=tau_probe, stop_norm=exit_norm)
    return float(tr.amplitude[-1] * np.exp(tau_probe - tr.tau[-1]))


def tune_blowup_time(pert: Perturbation, cfg: EvolutionConfig, tau_probe: float = 6.0,
                     xtol: float = 1e-13, h0: float = 1e-3, decay_window=(2.0, 8.0),
                     decay: bool = True) -> TuningResult:
    """Find T in (1/2, 3/2) with vanishing unstable amplitude at tau_probe.

    Starting at T = 1 the bracket is widened geometrically on both sides until
    the amplitude changes sign; Brent's method then refines the root. With
    ``decay`` the tuned solution is evolved over ``cfg.tau_max`` and the
    log-norm slope is fitted over ``decay_window`` (relative to the initial
    slow time).
    """
    if tau_probe <= 0.5:
        raise ValueError("tau_probe too small for the e^tau separation")
    trace = []

    def a(T):
        val = unstable_amplitude(pert, T, cfg, tau_probe)
        trace.append((float(T), val))
        return val

    a1 = a(1.0)
    root = 1.0 if a1 == 0.0 else None
    bracket = (1.0, 1.0)
    inner_m = inner_p = 1.0
    h = h0
    while root is None:
        if h > 0.5:
            raise OutOfRegimeError("no sign change of the unstable amplitude in (1/2, 3/2)")
        Tm, Tp = max(1 - h, 0.5 + 1e-9), min(1 + h, 1.5 - 1e-9)
        am, ap = a(Tm), a(Tp)
        if np.sign(am) != np.sign(a1):
            bracket = (Tm, inner_m)
        elif np.sign(ap) != np.sign(a1):
            bracket = (inner_p, Tp)
        else:
            inner_m, inner_p = Tm, Tp
            h *= 4
            continue
        root = optimize.brentq(a, bracket[0], bracket[1], xtol=xtol,
                               rtol=4 * np.finfo(float).eps, maxiter=200)
    mono = _monotone(trace, root)
    fit, dtrace = None, None
    if decay:
        dtrace = evolve(initial_data_U(pert, root, cfg.N), cfg)
        rel = dtrace.tau - dtrace.tau[0]
        inwin = (rel >= decay_window[0]) & (rel <= decay_window[1])
        if not dtrace.blowup and np.all(dtrace.norm[inwin] > 0):
            fit = fit_rate(rel, dtrace.norm, decay_window)
    return TuningResult(float(root), tuple(float(b) for b in bracket), trace, fit, dtrace, mono)


def _monotone(trace, root) -> bool:
    """Whether the sampled amplitudes are monotone in T (logged, not enforced)."""
    pts = sorted(trace)
    vals = np.array([v for _, v in pts])
    d = np.sign(np.diff(vals))
    d = d[d != 0]
    return bool(len(d) == 0 or np.all(d == d[0]))
