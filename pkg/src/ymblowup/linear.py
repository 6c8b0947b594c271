"""Discrete generator L = L0 + L', the explicit free resolvent at lambda = 2,
the rank-1 Riesz projection onto the symmetry mode and linear decay runs."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
from scipy import stats

from . import chebyshev as cheb
from .grid import FieldState, ResolutionError, SimGrid, check_N
from .operators import GridFunction, apply_K


class StepSizeError(RuntimeError):
    pass


class FitError(ValueError):
    pass


# ---------------------------------------------------------------------------
# generator

@dataclass(frozen=True)
class GeneratorMatrix:
    N: int
    L0_part: np.ndarray
    Lprime_part: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.L0_part + self.Lprime_part

    @property
    def dimension(self) -> int:
        return 2 * self.N

    @property
    def grid(self) -> SimGrid:
        return SimGrid(self.N)

    def free(self) -> np.ndarray:
        return self.L0_part


@lru_cache(maxsize=8)
def assemble_generator(N: int) -> GeneratorMatrix:
    """Collocation matrix of L on the stacked (p, w) grid values (N nodes per component).

    No boundary rows: the representation enforces the conditions at rho = 0
    and rho = 1 is an outflow boundary.
    """
    check_N(N, 32)
    g = SimGrid(N)
    x, D = g.x, g.D
    I = np.eye(N)
    XD = x[:, None] * D
    A_pp = -3 * I - 2 * XD
    A_pw = 4 * x[:, None] * (D @ D) + 14 * D
    A_wp = I
    A_ww = -2 * I - 2 * XD
    L0 = np.block([[A_pp, A_pw], [A_wp, A_ww]])
    Lp = np.zeros_like(L0)
    Lp[:N, N:] = -np.diag(g.V)
    L0.setflags(write=False)
    Lp.setflags(write=False)
    return GeneratorMatrix(N, L0, Lp)


@lru_cache(maxsize=8)
def _eig(N: int, with_potential: bool = True):
    G = assemble_generator(N)
    A = G.matrix if with_potential else G.L0_part
    ev, vl, vr = sla.eig(A, left=True, right=True)
    return ev, vl, vr


def spectral_radius(N: int, with_potential: bool = True) -> float:
    return float(np.max(np.abs(_eig(N, with_potential)[0])))


def discrete_spectrum(N: int, re_min: float = -1.4, with_potential: bool = True) -> np.ndarray:
    ev = _eig(N, with_potential)[0]
    ev = ev[ev.real > re_min]
    return ev[np.lexsort((ev.imag, -ev.real))]


def converged_spectrum(N: int, re_min: float = -1.4, move_tol: float = 0.05):
    """Eigenvalues with Re > re_min that persist (within move_tol) from N to 2N.

    Returns (kept, spurious) at resolution 2N.
    """
    a = discrete_spectrum(N, re_min)
    b = discrete_spectrum(2 * N, re_min)
    kept, spurious = [], []
    for z in b:
        (kept if len(a) and np.min(np.abs(a - z)) < move_tol else spurious).append(z)
    return np.array(kept), np.array(spurious)


# ---------------------------------------------------------------------------
# reference implementation of the free generator on rho-grid functions

def apply_free_generator_rho(u1: GridFunction, u2: GridFunction):
    """(-rho u1' + 2u1 + rho^2 u2 - 3K u2,  D^2 u1 - rho u2' - u2) on a rho grid."""
    r = u1.grid
    Ku2 = apply_K(u2).values
    first = -r * u1(r, 1) + 2 * u1.values + r * r * u2.values - 3 * Ku2
    d1 = u1(r, 1)
    d2 = u1(r, 2)
    second = np.empty_like(r)
    second[1:] = (r[1:] * d2[1:] - d1[1:]) / r[1:] ** 3
    second[0] = u1(0.0, 4) / 3 if u1.n > 4 else 0.0  # limit u1''''(0)/3 for u1 = O(rho^4)
    second = second - r * u2(r, 1) - u2.values
    return u1.with_values(first), u2.with_values(second)


# ---------------------------------------------------------------------------
# free resolvent at lambda = 2

class _Panels:
    """Piecewise Chebyshev representation on [0, 1] with equal panels."""

    def __init__(self, panels: int = 64, deg: int = 24):
        self.P, self.d = panels, deg
        self.edges = np.linspace(0.0, 1.0, panels + 1)
        t = cheb.lobatto(deg + 1, -1.0, 1.0)
        self.t = t
        self.nodes = (self.edges[:-1, None] + (t[None, :] + 1) / (2 * panels))

    def fit(self, vals: np.ndarray) -> np.ndarray:
        return cheb.to_coeffs(vals.T).T  # (P, d+1)

    def eval(self, C: np.ndarray, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        j = np.clip(np.floor(s * self.P).astype(int), 0, self.P - 1)
        t = 2 * (s - self.edges[j]) * self.P - 1
        c = C[j]
        b1 = np.zeros_like(t)
        b2 = np.zeros_like(t)
        for k in range(C.shape[1] - 1, 0, -1):
            b1, b2 = c[..., k] + 2 * t * b1 - b2, b1
        return c[..., 0] + t * b1 - b2

    def cumint(self, C: np.ndarray) -> np.ndarray:
        """Coefficients of int_0^s of the represented function, panel by panel."""
        h = 1.0 / (2 * self.P)
        out = np.zeros((self.P, C.shape[1] + 1))
        acc = 0.0
        for j in range(self.P):
            ic = np.polynomial.chebyshev.chebint(C[j], lbnd=-1) * h
            ic[0] += acc
            out[j] = ic
            acc = np.polynomial.chebyshev.chebval(1.0, ic)
        return out


def _gl(n):
    z, w = np.polynomial.legendre.leggauss(n)
    return (z + 1) / 2, w / 2


def free_resolvent_at_2(f1: Callable, f2: Callable, N: int, panels: int = 64, deg: int = 24):
    """Solve (2 - L0) u = f with the explicit integral formula.

    ``f1``, ``f2`` are vectorized callables of rho (the paper-level components;
    they must vanish near rho = 0). With q = u / rho^3,

        q(rho) = (1+rho)^{-2} int_0^1 h(rho + (1-rho) t) (1-t)(1+s) dt,
        h(s) = (f1(s) + s^2 K f2(s)) / s^4,

    which is the explicit resolvent integral after the substitution that
    removes the removable singularity at rho = 1. Then
    w = rho^{-5} int_0^rho s^4 q,  p = q - w - rho^{-5} K^2 f2.

    Returns (FieldState of the solution, FieldState of the right-hand side).
    """
    pan = _Panels(panels, deg)
    S = pan.nodes
    if np.any(np.abs(f1(S[:1, :3])) > 0) or np.any(np.abs(f2(S[:1, :3])) > 0):
        raise ValueError("right-hand side must vanish near rho = 0")
    Kf2 = pan.cumint(pan.fit(S * f2(S)))
    K2f2 = pan.cumint(pan.fit(S * pan.eval(Kf2, S)))
    Sn = np.where(S > 0, S, 1.0)
    hv = np.where(S > 0, (f1(S) + S ** 2 * pan.eval(Kf2, S)) / Sn ** 4, 0.0)
    Hc = pan.fit(hv)

    tq, wq = _gl(32)
    tt = (np.arange(panels)[:, None] + tq[None, :]).ravel() / panels
    wt = np.tile(wq, panels) / panels

    def q_at(r):
        r = np.asarray(r, dtype=float)
        s = r[..., None] + (1 - r[..., None]) * tt
        return (pan.eval(Hc, s) * (1 - tt) * (1 + s)) @ wt / (1 + r) ** 2

    Q = pan.cumint(pan.fit(S ** 4 * q_at(S)))
    g = SimGrid(N)
    rho = g.rho
    rs = np.where(rho > 0, rho, 1.0)
    w = pan.eval(Q, rho) / rs ** 5
    q = q_at(rho)
    wf = pan.eval(K2f2, rho) / rs ** 5
    pf = f1(rho) / rs ** 5
    w[0] = q[0] / 5  # rho -> 0 limit of rho^{-5} int s^4 q
    wf[0] = pf[0] = 0.0
    p = q - w - wf
    return FieldState.from_pw(p, w), FieldState.from_pw(pf, wf)


def resolvent_residual(f1: Callable, f2: Callable, N: int = 256) -> float:
    """Relative nodal residual max|(2 - L0) u - f| / max|f| of the explicit resolvent."""
    u, f = free_resolvent_at_2(f1, f2, N)
    A0 = assemble_generator(N).L0_part
    r = 2 * u.u - A0 @ u.u - f.u
    return float(np.max(np.abs(r)) / np.max(np.abs(f.u)))


def bump(a: float = 0.3, b: float = 0.7, amp: float = 1.0, c: float = 1.0) -> Callable:
    """C-infinity bump amp * exp(-c / ((s-a)(b-s))) supported in [a, b]."""
    def f(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        m = (s > a) & (s < b)
        out[m] = amp * np.exp(-c / ((s[m] - a) * (b - s[m])))
        return out
    return f


# ---------------------------------------------------------------------------
# projection

@dataclass
class ProjectionData:
    right_vector: np.ndarray
    left_vector: np.ndarray
    normalization: float
    eigenvalue: complex
    gap: float
    N: int

    @property
    def matrix(self) -> np.ndarray:
        return np.outer(self.right_vector, self.left_vector) / self.normalization

    def apply(self, u) -> np.ndarray:
        return self.right_vector * (self.left_vector @ u) / self.normalization

    def amplitude(self, u) -> float:
        """Coordinate of P u along g (normalized like the closed-form symmetry mode)."""
        return (self.left_vector @ u) / self.normalization

    def stable_part(self, u) -> np.ndarray:
        return u - self.apply(u)


@lru_cache(maxsize=8)
def build_projection(N: int) -> ProjectionData:
    """Rank-1 spectral projection onto the discrete eigenvalue closest to 1.

    P u = g (l . u) / (l . g) with l the left eigenvector of the generator
    matrix. This is the spectral projection of the matrix, hence independent
    of the inner product, and needs no inversion of the Gram matrix.
    """
    ev, vl, vr = _eig(N, True)
    i = int(np.argmin(np.abs(ev - 1)))
    others = np.delete(ev, i)
    gap = float(np.min(np.abs(others - ev[i])))
    if gap < 0.5:
        raise ResolutionError(f"eigenvalue near 1 not separated (gap {gap:.3f}); increase N")
    # the closed-form mode is an exact eigenvector of the continuous operator and
    # is resolved to rounding on the grid; use it instead of the noisier vr[:, i]
    g = SimGrid(N).symmetry_mode()
    l = vl[:, i].conj()
    l = (l / l[np.argmax(np.abs(l))]).real
    return ProjectionData(g, l, float(l @ g), complex(ev[i]), gap, N)


def riesz_projection_contour(N: int, radius: float = 0.5, m: int = 64) -> np.ndarray:
    """(1 / 2 pi i) contour integral of the resolvent on a circle around 1 (trapezoid rule)."""
    A = assemble_generator(N).matrix
    I = np.eye(A.shape[0])
    P = np.zeros_like(A, dtype=complex)
    for k in range(m):
        e = np.exp(2j * np.pi * k / m)
        z = 1 + radius * e
        P += radius * e * np.linalg.solve(z * I - A, I)
    return (P / m).real


# ---------------------------------------------------------------------------
# time stepping

@dataclass
class LinearTrace:
    """Norm history; for a batch run the norm arrays have shape (n_records, batch)."""
    tau: np.ndarray
    norm_total: np.ndarray
    norm_stable: np.ndarray
    dtau: float
    N: int
    with_potential: bool = True
    final: Optional[np.ndarray] = None

    def rows(self):
        for k, t in enumerate(self.tau):
            yield float(t), float(np.ravel(self.norm_total[k])[0]), float(np.ravel(self.norm_stable[k])[0])


def stable_dtau(N: int, with_potential: bool = True, safety: float = 0.9) -> float:
    """RK4 step safeguard: dtau <= safety / spectral radius (about 6/N^2 here)."""
    return safety / spectral_radius(N, with_potential)


def _rk4_linear(A, u, dt, nsteps):
    for _ in range(nsteps):
        k1 = A @ u
        k2 = A @ (u + 0.5 * dt * k1)
        k3 = A @ (u + 0.5 * dt * k2)
        k4 = A @ (u + dt * k3)
        u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return u


def linear_evolve(u0, tau_max: float, dtau: Optional[float] = None, with_potential: bool = True,
                  record_every: float = 0.25) -> LinearTrace:
    """Integrate du/dtau = L u (or L0 u) with classical RK4, recording ||u|| and ||(1-P)u||.

    ``u0`` is a FieldState, a stacked (p, w) vector, or a (2N, batch) array whose
    columns are evolved together. The step is rounded down so that it divides
    ``record_every``.
    """
    u = np.array(u0.u if isinstance(u0, FieldState) else u0, dtype=float)
    N = u.shape[0] // 2
    G = assemble_generator(N)
    A = G.matrix if with_potential else G.L0_part
    lim = 1.0 / spectral_radius(N, with_potential)
    if dtau is None:
        dtau = 0.9 * lim
    if dtau <= 0 or tau_max <= 0:
        raise ValueError("dtau and tau_max must be positive")
    nrec = max(1, int(np.ceil(record_every / dtau - 1e-9)))
    dt = record_every / nrec
    grid = SimGrid(N)
    Pd = build_projection(N) if with_potential else None
    U = u.reshape(2 * N, -1)

    def norms(U):
        tot = grid.hnorms(U)
        if Pd is None:
            return tot, tot
        S = U - np.outer(Pd.right_vector, Pd.left_vector @ U) / Pd.normalization
        return tot, grid.hnorms(S)

    n_out = int(round(tau_max / record_every))
    t0, s0 = norms(U)
    taus, tot, stab = [0.0], [t0], [s0]
    for k in range(1, n_out + 1):
        U = _rk4_linear(A, U, dt, nrec)
        t = k * record_every
        nt, ns = norms(U)
        if not np.all(np.isfinite(nt)) or np.any(nt > 10 * t0 * np.exp(2 * t)):
            raise StepSizeError(f"norm growth beyond e^(2 tau) at tau = {t:.3f}; dtau {dt:.2e} "
                                f"against the stable limit {lim:.2e}")
        taus.append(t)
        tot.append(nt)
        stab.append(ns)
    tot, stab = np.array(tot), np.array(stab)
    if u.ndim == 1:
        tot, stab = tot[:, 0], stab[:, 0]
    return LinearTrace(np.array(taus), tot, stab, dt, N, with_potential,
                       U[:, 0] if u.ndim == 1 else U)


# ---------------------------------------------------------------------------
# rate fitting

@dataclass
class RateFit:
    slope: float
    intercept: float
    residual: float
    slope_stderr: float
    window: tuple


def fit_rate(tau, norms, window=None) -> RateFit:
    """Least-squares line through log(norm) against tau inside ``window``."""
    tau = np.asarray(tau, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if window is None:
        window = (tau[0], tau[-1])
    lo, hi = window
    if hi - lo < 2:
        raise FitError("fit window must be at least 2 long")
    m = (tau >= lo - 1e-12) & (tau <= hi + 1e-12)
    if m.sum() < 3:
        raise FitError("fewer than three samples in the fit window")
    if np.any(norms[m] <= 0):
        raise FitError("nonpositive norm in the fit window")
    y = np.log(norms[m])
    fit = stats.linregress(tau[m], y)
    res = float(np.sqrt(np.mean((y - fit.intercept - fit.slope * tau[m]) ** 2)))
    return RateFit(float(fit.slope), float(fit.intercept), res, float(fit.stderr), (lo, hi))


def random_state(N: int, seed, terms: int = 8, project: bool = True, batch: Optional[int] = None):
    """Random smooth (p, w) from geometrically decaying Chebyshev coefficients in x.

    Any such pair is admissible: the boundary behavior at rho = 0 is built into
    the variables. With ``project`` the symmetry-mode component is removed.
    With ``batch`` the result has shape (2N, batch).
    """
    rng = np.random.default_rng(seed)
    x = SimGrid(N).x
    k = 1 if batch is None else batch
    c = rng.standard_normal((k, 2, terms)) * 0.5 ** np.arange(terms)
    T = np.polynomial.chebyshev.chebvander(2 * x - 1, terms - 1)
    U = np.concatenate([T @ c[:, 0].T, T @ c[:, 1].T])
    if project:
        Pd = build_projection(N)
        U = U - np.outer(Pd.right_vector, Pd.left_vector @ U) / Pd.normalization
    return U[:, 0] if batch is None else U
