"""Function-space toolkit on Chebyshev grids in rho: K, K^2, A, D, D^2-weighted,
the hat transform, the Hilbert-space norms and Hardy / Moser checks.

A GridFunction holds samples on the Chebyshev-Lobatto grid of [0, R]. All
derivatives and integrals act on the polynomial interpolant, so the
operations are spectrally accurate for smooth input. Quantities with a
coordinate singularity at rho = 0 are evaluated at interior Gauss-Legendre
nodes or through analytic limits, never by dividing small numbers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate

from . import chebyshev as cheb


class ParityError(ValueError):
    """Input violates the vanishing conditions required at rho = 0."""


@dataclass
class GridFunction:
    grid: np.ndarray
    values: np.ndarray
    parity_hint: int = 0

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values)
        if self.grid.shape != self.values.shape:
            raise ValueError("grid and values differ in shape")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")

    @property
    def R(self) -> float:
        return float(self.grid[-1])

    @property
    def n(self) -> int:
        return len(self.grid)

    @classmethod
    def sample(cls, f: Callable, n: int, R: float = 1.0, parity_hint: int = 0):
        r = cheb.lobatto(n, 0.0, R)
        return cls(r, f(r), parity_hint)

    def coeffs(self) -> np.ndarray:
        return cheb.to_coeffs(self.values)

    def __call__(self, r, deriv: int = 0):
        return cheb.evaluate(self.coeffs(), r, 0.0, self.R, deriv)

    def with_values(self, values, parity_hint: Optional[int] = None):
        p = self.parity_hint if parity_hint is None else parity_hint
        return GridFunction(self.grid, values, p)


def _check_parity(f: GridFunction, order: int, what: str, tol: float = 1e-8):
    """Require f^(k)(0) = 0 for k < order (relative to the size of f)."""
    scale = max(1.0, float(np.max(np.abs(f.values))))
    for k in range(order):
        if abs(f(0.0, deriv=k)) > tol * scale * max(1, f.n) ** (2 * k):
            raise ParityError(f"{what}: derivative {k} does not vanish at 0")


def gauss_nodes(n: int, R: float = 1.0):
    """Gauss-Legendre nodes and weights on [0, R]."""
    z, w = np.polynomial.legendre.leggauss(n)
    return R * (z + 1) / 2, w * R / 2


def _quad_points(f: GridFunction):
    return gauss_nodes(2 * f.n + 16, f.R)


# ---------------------------------------------------------------------------
# integral operators

def apply_K(f: GridFunction) -> GridFunction:
    """K f(rho) = int_0^rho s f(s) ds, exact for polynomial f of degree < n."""
    R = f.R
    c = f.coeffs()
    # s = R (t + 1) / 2 in the reference variable t
    sc = C.chebadd(C.chebmulx(c), c) * (R / 2)
    ic = C.chebint(sc, lbnd=-1) * (R / 2)
    vals = cheb.evaluate(ic, f.grid, 0.0, R)
    vals[0] = 0.0
    return f.with_values(vals, f.parity_hint + 2)


def apply_K2(f: GridFunction) -> GridFunction:
    return apply_K(apply_K(f))


def _A_kernel_quad(n: int = 48):
    z, w = gauss_nodes(n)
    return z, w * z * (1 - z * z) / 2


def A_at(u: GridFunction, r, deriv: int = 0) -> np.ndarray:
    """(A u)(r) = r^{-3} K^2 u(r) and its first two derivatives.

    Uses A u(r) = r int_0^1 z (1 - z^2)/2 u(r z) dz, free of cancellation.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    z, wk = _A_kernel_quad(max(48, u.n))
    c = u.coeffs()
    rz = r[:, None] * z[None, :]
    ev = lambda d: cheb.evaluate(c, rz, 0.0, u.R, d)
    if deriv == 0:
        out = r * (ev(0) @ wk)
    elif deriv == 1:
        out = ev(0) @ wk + r * ((ev(1) * z) @ wk)
    elif deriv == 2:
        out = 2 * ((ev(1) * z) @ wk) + r * ((ev(2) * z * z) @ wk)
    else:
        raise ValueError("deriv must be 0, 1 or 2")
    return out


def apply_A(u: GridFunction) -> GridFunction:
    """A u = rho^{-3} K^2 u; requires u(0) = 0."""
    _check_parity(u, 1, "apply_A")
    vals = A_at(u, u.grid)
    return u.with_values(vals, u.parity_hint + 1)


# ---------------------------------------------------------------------------
# differential operators

def apply_D2_weighted(f: GridFunction) -> GridFunction:
    """Weighted operator r f'' + 5 f' + 3 f / r (equal to (r^{-1} d/dr)^2 (r^3 f))."""
    _check_parity(f, 1, "apply_D2_weighted")
    r = f.grid
    f1, f2 = f(r, 1), f(r, 2)
    out = np.empty_like(r)
    out[1:] = r[1:] * f2[1:] + 5 * f1[1:] + 3 * f.values[1:] / r[1:]
    out[0] = 8 * f1[0]  # f/r -> f'(0)
    return f.with_values(out, max(f.parity_hint - 1, 0))


def hat_transform(phi: GridFunction) -> GridFunction:
    """phi_hat = r^{-1} d/dr [ r^{-1} d/dr (r^3 phi) ], coded literally."""
    _check_parity(phi, 2, "hat_transform")
    r = phi.grid
    g = phi.with_values(r ** 3 * phi.values)
    g1 = g(r, 1)
    h = np.empty_like(r)
    h[1:] = g1[1:] / r[1:]
    h[0] = 0.0  # (r^3 phi)' = O(r^4)
    H = phi.with_values(h)
    h1 = H(r, 1)
    out = np.empty_like(r)
    out[1:] = h1[1:] / r[1:]
    out[0] = 0.0
    return phi.with_values(out, 1)


def D2_at(u: GridFunction, r) -> np.ndarray:
    """D^2 u = r^{-1} (r^{-1} u')' at interior points r (D = r^{-1} d/dr)."""
    r = np.asarray(r, dtype=float)
    return (r * u(r, 2) - u(r, 1)) / r ** 3


# ---------------------------------------------------------------------------
# norms

@dataclass
class NormReport:
    norm1: float
    norm2: float
    total: float
    energy_R: Optional[float] = None


def pair_norm(u1: GridFunction, u2: GridFunction, check: bool = True) -> NormReport:
    """Norm of the Hilbert space: ||u1||_1 = ||D^2 u1||, ||u2||_2 = ||u2'||."""
    if check:
        _check_parity(u1, 2, "pair_norm u1")
        _check_parity(u2, 1, "pair_norm u2")
    r, w = _quad_points(u1)
    n1 = float(np.sqrt(np.sum(w * D2_at(u1, r) ** 2)))
    r, w = _quad_points(u2)
    n2 = float(np.sqrt(np.sum(w * u2(r, 1) ** 2)))
    return NormReport(n1, n2, float(np.hypot(n1, n2)))


def energy_norm(f: GridFunction, g: GridFunction, R: Optional[float] = None) -> float:
    """The E(R) norm with integrands r f''' + 6 f'' + 3 f'/r - 3 f/r^2 and
    r g'' + 5 g' + 3 g / r, evaluated literally at interior quadrature nodes."""
    _check_parity(f, 2, "energy_norm f")
    _check_parity(g, 1, "energy_norm g")
    R = f.R if R is None else float(R)
    if R > f.R + 1e-14 or R > g.R + 1e-14:
        raise ValueError("R exceeds the grid")
    r, w = gauss_nodes(2 * max(f.n, g.n) + 16, R)
    i1 = r * f(r, 3) + 6 * f(r, 2) + 3 * f(r, 1) / r - 3 * f(r) / r ** 2
    i2 = r * g(r, 2) + 5 * g(r, 1) + 3 * g(r) / r
    return float(np.sqrt(np.sum(w * i1 ** 2) + np.sum(w * i2 ** 2)))


def energy_norm_even(r: np.ndarray, eta: np.ndarray, zeta: np.ndarray, R: float) -> float:
    """E(R) norm of (f, g) = (r^2 eta, r^2 zeta) sampled on a uniform grid.

    With f = r^2 eta the first integrand is r^3 eta''' + 12 r^2 eta'' + 33 r eta' + 15 eta,
    the second r^3 zeta'' + 9 r^2 zeta' + 15 r zeta. Derivatives use fourth-order
    centered differences with even reflection at r = 0; the integral runs up
    to R with a cubic interpolant of the integrand on the last partial cell.
    """
    h = r[1] - r[0]
    if abs(r[0]) > 1e-14 * h:
        raise ValueError("uniform grid must start at r = 0")
    m = int(np.floor(R / h + 1e-9)) + 4
    if m + 3 > len(r):
        raise ValueError("R too close to the end of the grid")

    def ext(v):
        return np.concatenate([v[3:0:-1], v[: m + 4]])

    e, z = ext(eta), ext(zeta)
    k = np.arange(3, m + 3)

    def d1(v):
        return (v[k - 2] - 8 * v[k - 1] + 8 * v[k + 1] - v[k + 2]) / (12 * h)

    def d2(v):
        return (-v[k - 2] + 16 * v[k - 1] - 30 * v[k] + 16 * v[k + 1] - v[k + 2]) / (12 * h * h)

    def d3(v):
        return (v[k - 3] - 8 * v[k - 2] + 13 * v[k - 1] - 13 * v[k + 1]
                + 8 * v[k + 2] - v[k + 3]) / (8 * h ** 3)

    rr = r[:m]
    i1 = rr ** 3 * d3(e) + 12 * rr ** 2 * d2(e) + 33 * rr * d1(e) + 15 * e[k]
    i2 = rr ** 3 * d2(z) + 9 * rr ** 2 * d1(z) + 15 * rr * z[k]
    dens = i1 ** 2 + i2 ** 2
    from scipy.interpolate import CubicSpline
    return float(np.sqrt(CubicSpline(rr, dens).integrate(0.0, R)))


# ---------------------------------------------------------------------------
# Hardy and Moser-type checks

def hardy_check(u, alpha: float, du: Optional[Callable] = None, R: float = 1.0):
    """Both sides of  int u^2 / r^alpha <= (2/(alpha-1))^2 int u'^2 / r^(alpha-2).

    ``u`` is a GridFunction or a callable (then ``du`` must be its derivative).
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    if isinstance(u, GridFunction):
        fu, fd, R = (lambda r: u(r)), (lambda r: u(r, 1)), u.R
        r, w = gauss_nodes(2 * u.n + 32, R)
        lhs = np.sum(w * fu(r) ** 2 / r ** alpha)
        rhs = np.sum(w * fd(r) ** 2 / r ** (alpha - 2))
    else:
        if du is None:
            raise ValueError("derivative required for callable input")
        opts = dict(limit=200, epsabs=0.0, epsrel=1e-12)
        lhs = integrate.quad(lambda r: u(r) ** 2 / r ** alpha, 0.0, R, **opts)[0]
        rhs = integrate.quad(lambda r: du(r) ** 2 / r ** (alpha - 2), 0.0, R, **opts)[0]
    return float(lhs), float((2.0 / (alpha - 1)) ** 2 * rhs)


def moser_ratios(u: GridFunction) -> dict:
    """Ratios of the four A-bounds to ||u||_2 = ||u'||_{L^2} for one sample u (u(0) = 0)."""
    r, w = _quad_points(u)
    n2 = np.sqrt(np.sum(w * u(r, 1) ** 2))
    a0, a1, a2 = A_at(u, r), A_at(u, r, 1), A_at(u, r, 2)
    da = a1 / r
    d2a = (r * a2 - a1) / r ** 3
    rd = np.linspace(1e-6, u.R, 4001)
    return {
        "weighted_L2": float(np.sqrt(np.sum(w * (a0 / r ** 2) ** 2)) / n2),
        "weighted_Linf": float(np.max(np.abs(A_at(u, rd) / rd ** 1.5)) / n2),
        "DA_L2": float(np.sqrt(np.sum(w * da ** 2)) / n2),
        "r2D2A_L2": float(np.sqrt(np.sum(w * (r * r * d2a) ** 2)) / n2),
    }


def nonlinear_term(u2: GridFunction) -> GridFunction:
    """First component -rho Ntilde(A u2, rho) of the nonlinearity N(u)."""
    from .profiles import eval_W0
    r = u2.grid
    q = A_at(u2, r)
    vals = -r * (9 * eval_W0(r) * q * q + 3 * q ** 3)
    return u2.with_values(vals, 5)


def norm1(u1: GridFunction) -> float:
    r, w = _quad_points(u1)
    return float(np.sqrt(np.sum(w * D2_at(u1, r) ** 2)))


def norm2(u2: GridFunction) -> float:
    r, w = _quad_points(u2)
    return float(np.sqrt(np.sum(w * u2(r, 1) ** 2)))


def random_smooth(rng: np.random.Generator, n: int, vanish: int = 1, decay: float = 0.6,
                  degree: int = 10) -> GridFunction:
    """Random polynomial r^vanish * p(r) with geometrically decaying Chebyshev coefficients."""
    c = rng.standard_normal(degree) * decay ** np.arange(degree)
    r = cheb.lobatto(n)
    vals = r ** vanish * C.chebval(2 * r - 1, c)
    return GridFunction(r, vals, vanish)
