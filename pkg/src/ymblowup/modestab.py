"""Mode-stability eigenvalue problem solved by two-sided Frobenius-seeded shooting.

The mode equation for u(rho) is rewritten for w(x) = u / rho^2 with x = rho^2:

    4x(1-x) w'' + [14 - (14+4 lam) x] w' - [(lam+2)(lam+3) + V] w = 0,

multiplied by (5+3x)^2 so all coefficients are polynomials. x = 0 has
indices {0, -5/2} (u ~ rho^2 is the analytic branch) and x = 1 has indices
{0, 1-lam}. Series are generated in x at the left end and in y = 1 - x at
the right end; both are shot to the matching point with an adaptive
eighth-order Runge-Kutta method, and the Wronskian of the two solutions is the
connection coefficient whose zeros are the eigenvalues.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import solve_ivp

from .operators import GridFunction

log = logging.getLogger(__name__)

RTOL = 1e-12
ATOL = 1e-14
MAX_ORDER = 600


class DegenerateLambdaError(ArithmeticError):
    def __init__(self, k: int):
        super().__init__(f"indicial factor vanishes at series order {k} (lambda = {1 - k})")
        self.k = k


class IntegrationError(RuntimeError):
    pass


class InconclusiveContourError(RuntimeError):
    pass


class RefinementError(RuntimeError):
    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


@dataclass
class FrobeniusSeed:
    """Truncated Frobenius series at one endpoint.

    The series variable is x = rho^2 at endpoint 0 (u = rho^2 sum c_k x^k) and
    y = 1 - rho^2 at endpoint 1 (u = rho^2 y^index sum c_k y^k).
    """
    lam: complex
    endpoint: int
    index: float
    order: int
    coeffs: np.ndarray
    radius: float

    @property
    def start(self) -> float:
        """Starting point in the series variable."""
        return self.radius ** 2 if self.endpoint == 0 else 1 - (1 - self.radius) ** 2

    def w_and_dw(self, s):
        """w and dw/dx at series-variable value s (vectorized in s)."""
        s = np.asarray(s, dtype=float)
        k = np.arange(len(self.coeffs)) + self.index
        pw = s[..., None] ** k
        w = pw @ self.coeffs
        dw = (k * s[..., None] ** np.maximum(k - 1, 0)) @ self.coeffs
        if self.endpoint == 1:
            dw = -dw
        return w, dw

    def residual(self) -> float:
        """Relative ODE residual of the truncated series at the step-off point."""
        s = self.start
        k = np.arange(len(self.coeffs)) + self.index
        c = self.coeffs
        w = np.sum(c * s ** k)
        d1 = np.sum(c * k * s ** np.maximum(k - 1, 0))
        d2 = np.sum(c * k * (k - 1) * s ** np.maximum(k - 2, 0))
        x = s if self.endpoint == 0 else 1 - s
        sgn = 1 if self.endpoint == 0 else -1
        p2, p1, p0 = _xcoef(np.array([self.lam]), x)
        r = p2[0] * d2 + p1[0] * sgn * d1 + p0[0] * w
        scale = abs(p2[0] * d2) + abs(p1[0] * d1) + abs(p0[0] * w)
        return float(abs(r) / scale)


def _xcoef(lam, x):
    """Polynomial coefficients P2, P1, P0 of the x-form ODE at x (vectorized over lam)."""
    s = (5 + 3 * x) ** 2
    p2 = 4 * x * (1 - x) * s * np.ones_like(lam)
    p1 = (14 - (14 + 4 * lam) * x) * s
    p0 = -(lam + 2) * (lam + 3) * s + 144 * (5 - x)
    return p2, p1, p0


def _series_polys(lam: complex, endpoint: int):
    """(q, p, r) with ODE  s q(s) w'' + p(s) w' + r(s) w = 0 in the series variable s."""
    if endpoint == 0:
        s2 = P.polymul([5.0, 3.0], [5.0, 3.0])
        q = 4 * P.polymul([1.0, -1.0], s2)
        p = P.polymul([14.0, -(14 + 4 * lam)], s2)
        r = P.polyadd(-(lam + 2) * (lam + 3) * s2, 144 * np.array([5.0, -1.0]))
    else:
        s2 = P.polymul([8.0, -3.0], [8.0, -3.0])
        q = 4 * P.polymul([1.0, -1.0], s2)
        p = P.polymul([4 * lam, -(14 + 4 * lam)], s2)
        r = P.polyadd(-(lam + 2) * (lam + 3) * s2, 144 * np.array([4.0, 1.0]))
    pad = lambda a: np.pad(np.asarray(a, dtype=complex), (0, 4 - len(a)))
    return pad(q), pad(p), pad(r)


def _degenerate_k(lam: complex, tol: float = 1e-12) -> Optional[int]:
    k = 1 - lam.real
    if abs(lam.imag) < tol and abs(k - round(k)) < tol and round(k) >= 1:
        return int(round(k))
    return None


def frobenius_seed(lam: complex, endpoint: int, M: int = 25, delta: float = 0.05,
                   on_degenerate: str = "switch", adaptive: bool = True) -> FrobeniusSeed:
    """Analytic Frobenius solution at rho = 0 (index 2 in rho) or rho = 1 (index 0).

    ``M`` is the minimum order; with ``adaptive`` the series is extended until
    the tail is below machine precision at the step-off point. At a degenerate
    lam = 1 - k (k >= 1) the index-0 recurrence breaks down at order k; with
    ``on_degenerate='switch'`` the analytic index-k solution is returned instead,
    with ``'raise'`` a DegenerateLambdaError is raised.
    """
    if M < 10:
        raise ValueError("series order M must be at least 10")
    if not 0 < delta <= 0.1:
        raise ValueError("step-off distance delta must lie in (0, 0.1]")
    lam = complex(lam)
    index = 0.0
    if endpoint == 1:
        k = _degenerate_k(lam)
        if k is not None:
            if on_degenerate == "raise":
                raise DegenerateLambdaError(k)
            index = float(k)
    elif endpoint != 0:
        raise ValueError("endpoint must be 0 or 1")
    q, p, r = _series_polys(lam, endpoint)
    s0 = delta ** 2 if endpoint == 0 else 1 - (1 - delta) ** 2
    nmax = MAX_ORDER if adaptive else M
    c = np.zeros(nmax + 1, dtype=complex)
    c[0] = 1.0
    sig = index
    n_used = M
    small = 0
    for n in range(1, nmax + 1):
        acc = 0j
        for j in range(1, 4):
            if n - j >= 0:
                m = n - j + sig
                acc += c[n - j] * (m * (m - 1) * q[j] + m * p[j])
        for j in range(0, 4):
            if n - 1 - j >= 0:
                acc += c[n - 1 - j] * r[j]
        m = n + sig
        den = m * (m - 1) * q[0] + m * p[0]
        if den == 0:
            raise DegenerateLambdaError(n)
        c[n] = -acc / den
        if n >= M and adaptive:
            tail = abs(c[n]) * s0 ** n
            head = np.max(np.abs(c[: n + 1]) * s0 ** np.arange(n + 1))
            small = small + 1 if tail < 1e-17 * head else 0
            if small >= 3:
                n_used = n
                break
        n_used = n
    return FrobeniusSeed(lam, endpoint, index, n_used, c[: n_used + 1].copy(), delta)


def _rhs(x, y, lam):
    k = len(lam)
    w, dw = y[:k], y[k:]
    p2, p1, p0 = _xcoef(lam, x)
    return np.concatenate([dw, -(p1 * dw + p0 * w) / p2])


def _integrate(lam: np.ndarray, x0: float, x1: float, w0, dw0, rtol: float, dense=False):
    y0 = np.concatenate([w0, dw0]).astype(complex)
    sol = solve_ivp(_rhs, (x0, x1), y0, args=(lam,), method="DOP853", rtol=rtol,
                    atol=ATOL, dense_output=dense)
    if sol.status != 0:
        raise IntegrationError(f"integration failed ({sol.message}); try a larger delta")
    return sol


def _to_rho(x, w, dw):
    """(u, du/drho) for u = rho^2 w(x), x = rho^2."""
    r = np.sqrt(x)
    return x * w, 2 * r * w + 2 * r * x * dw


def shoot(lam: complex, seed: FrobeniusSeed, rho_target: float, rtol: float = RTOL):
    """Integrate from the seed's step-off point to rho_target; returns (u, u')."""
    if not 0 < rho_target < 1:
        raise ValueError("rho_target must lie strictly inside (0, 1)")
    lamv = np.array([complex(lam)])
    s0 = seed.start
    x0 = s0 if seed.endpoint == 0 else 1 - s0
    w0, dw0 = seed.w_and_dw(s0)
    xt = rho_target ** 2
    if (seed.endpoint == 0 and xt <= x0) or (seed.endpoint == 1 and xt >= x0):
        raise ValueError("rho_target lies on the wrong side of the step-off point")
    sol = _integrate(lamv, x0, xt, np.atleast_1d(w0), np.atleast_1d(dw0), rtol)
    u, du = _to_rho(xt, sol.y[0, -1], sol.y[1, -1])
    return complex(u), complex(du)


@dataclass
class ConnectionValue:
    lam: complex
    value: complex
    scale: float
    raw: complex = 0j  # entire-function form lam(lam+1) W (unnormalized)


def _batch(lams, rho_m, M, delta, rtol):
    """Left/right solutions at rho_m for an array of lam; returns (uL, duL, uR, duR, factor)."""
    lams = np.asarray(lams, dtype=complex)
    n = len(lams)
    xm = rho_m ** 2
    left = [frobenius_seed(l, 0, M, delta) for l in lams]
    right = [frobenius_seed(l, 1, M, delta) for l in lams]
    wl = np.array([s.w_and_dw(s.start) for s in left])
    wr = np.array([s.w_and_dw(s.start) for s in right])
    sl = _integrate(lams, delta ** 2, xm, wl[:, 0], wl[:, 1], rtol)
    sr = _integrate(lams, (1 - delta) ** 2, xm, wr[:, 0], wr[:, 1], rtol)
    uL, duL = _to_rho(xm, sl.y[:n, -1], sl.y[n:, -1])
    uR, duR = _to_rho(xm, sr.y[:n, -1], sr.y[n:, -1])
    # the index-0 seed at rho = 1 has simple poles at lam = 0, -1; lam(lam+1) removes them
    fac = lams * (lams + 1)
    degen = np.array([s.index != 0 for s in right])
    fac[degen] = 1.0
    return uL, duL, uR, duR, fac


def connection_values(lams: Sequence[complex], rho_m: float = 0.5, M: int = 25,
                      delta: float = 0.05, rtol: float = RTOL, chunk: int = 48):
    """Vectorized connection coefficients; returns (normalized, scale, raw) arrays."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    if not 0 < rho_m < 1:
        raise ValueError("matching point must lie in (0, 1)")
    out = np.empty(len(lams), complex)
    scl = np.empty(len(lams))
    raw = np.empty(len(lams), complex)
    order = np.argsort(np.abs(lams))
    for i in range(0, len(lams), chunk):
        idx = order[i:i + chunk]
        lv = lams[idx]
        uL, duL, uR, duR, fac = _batch(lv, rho_m, M, delta, rtol)
        W = uL * duR - duL * uR
        sc = 1 + np.abs(lv)
        nL = np.hypot(np.abs(uL), np.abs(duL) / sc)
        nR = np.hypot(np.abs(uR), np.abs(duR) / sc)
        ph = np.where(np.abs(fac) > 0, fac / np.abs(fac), 1.0)
        out[idx] = W / (nL * nR) / sc * ph
        scl[idx] = nL * nR * sc
        raw[idx] = W * fac
    return out, scl, raw


def connection(lam: complex, rho_m: float = 0.5, M: int = 25, delta: float = 0.05,
               rtol: float = RTOL) -> ConnectionValue:
    """Normalized Wronskian of the two endpoint-analytic solutions at rho_m."""
    v, s, r = connection_values([lam], rho_m, M, delta, rtol)
    return ConnectionValue(complex(lam), complex(v[0]), float(s[0]), complex(r[0]))


# ---------------------------------------------------------------------------
# argument principle

@dataclass
class Rect:
    re0: float
    re1: float
    im0: float
    im1: float

    def boundary(self, n: int) -> np.ndarray:
        """Counterclockwise closed polygon with n points per edge (last point omitted)."""
        t = np.linspace(0, 1, n, endpoint=False)
        a, b = self.re0 + 1j * self.im0, self.re1 + 1j * self.im0
        c, d = self.re1 + 1j * self.im1, self.re0 + 1j * self.im1
        return np.concatenate([a + (b - a) * t, b + (c - b) * t, c + (d - c) * t, d + (a - d) * t])

    def contains(self, z) -> bool:
        return self.re0 < z.real < self.re1 and self.im0 < z.imag < self.im1


def _detour(z: np.ndarray, eps: float = 1e-4) -> np.ndarray:
    """Move sample points off the degenerate values lam in {0, -1}."""
    z = z.copy()
    for d in (0.0, -1.0):
        near = np.abs(z - d) < eps
        z[near] = z[near] + 1j * eps * np.where(z[near].imag >= 0, 1, -1)
    return z


@dataclass
class ContourResult:
    count: int
    winding: float
    min_abs: float
    points: np.ndarray
    values: np.ndarray
    log_increments: np.ndarray


def _contour(rect: Rect, n_boundary: int, max_refine: int, kw: dict) -> ContourResult:
    z = _detour(rect.boundary(n_boundary))
    v, _, raw = connection_values(z, **kw)
    for _ in range(max_refine + 1):
        zc = np.append(z, z[0])
        rc = np.append(raw, raw[0])
        dphi = np.angle(rc[1:] / rc[:-1])
        bad = np.nonzero(np.abs(dphi) > np.pi / 2)[0]
        if len(bad) == 0:
            break
        mids = _detour((zc[bad] + zc[bad + 1]) / 2)
        mv, _, mraw = connection_values(mids, **kw)
        z = np.insert(z, bad + 1, mids)
        v = np.insert(v, bad + 1, mv)
        raw = np.insert(raw, bad + 1, mraw)
    else:
        raise InconclusiveContourError(
            f"phase jumps above pi/2 persist on {rect} after {max_refine} refinements")
    zc = np.append(z, z[0])
    rc = np.append(raw, raw[0])
    dlog = np.log(np.abs(rc[1:] / rc[:-1])) + 1j * np.angle(rc[1:] / rc[:-1])
    wind = float(np.sum(dlog.imag) / (2 * np.pi))
    if abs(wind - round(wind)) > 0.1:
        raise InconclusiveContourError(f"non-integer winding {wind:.3f} on {rect}")
    return ContourResult(int(round(wind)), wind, float(np.min(np.abs(v))), z, v, dlog)


def count_eigenvalues(rect, n_boundary: int = 32, max_refine: int = 10, rho_m: float = 0.5,
                      M: int = 25, delta: float = 0.05, rtol: float = RTOL) -> int:
    """Number of zeros of the connection coefficient inside ``rect`` (winding number)."""
    rect = rect if isinstance(rect, Rect) else Rect(*rect)
    kw = dict(rho_m=rho_m, M=M, delta=delta, rtol=rtol)
    return _contour(rect, n_boundary, max_refine, kw).count


def contour_min_abs(rect, n_boundary: int = 32, **kw) -> tuple[int, float]:
    """(count, min |connection| on the refined boundary)."""
    rect = rect if isinstance(rect, Rect) else Rect(*rect)
    res = _contour(rect, n_boundary, kw.pop("max_refine", 10), kw)
    return res.count, res.min_abs


# ---------------------------------------------------------------------------
# refinement and eigenfunctions

@dataclass
class EigenvalueRecord:
    lam: complex
    multiplicity_count: int
    eigenfunction: Optional[GridFunction]
    residual: float
    connection_abs: float = 0.0
    trace: list = field(default_factory=list)


def refine_eigenvalue(lam0: complex, rho_m: float = 0.5, M: int = 25, delta: float = 0.05,
                      rtol: float = RTOL, tol: float = 1e-13, max_iter: int = 40,
                      n_grid: int = 201, multiplicity: int = 1) -> EigenvalueRecord:
    """Secant iteration on the entire function lam(lam+1) W(lam), then eigenfunction assembly."""
    kw = dict(rho_m=rho_m, M=M, delta=delta, rtol=rtol)
    f = lambda l: connection_values([l], **kw)[2][0]
    h = 1e-4 * max(1.0, abs(lam0))
    z0, z1 = complex(lam0), complex(lam0) + h
    f0, f1 = f(z0), f(z1)
    trace = [(z0, abs(f0)), (z1, abs(f1))]
    for _ in range(max_iter):
        if f1 == f0:
            break
        z2 = z1 - f1 * (z1 - z0) / (f1 - f0)
        z0, f0 = z1, f1
        z1, f1 = z2, f(z2)
        trace.append((z1, abs(f1)))
        if abs(z1 - z0) < tol * max(1.0, abs(z1)):
            break
    else:
        raise RefinementError(f"no convergence from {lam0}", trace)
    lam = z1
    if abs(lam.imag) < 1e-10 and abs(np.imag(lam0)) < 1e-10:
        lam = complex(lam.real, 0.0)
    cv = connection(lam, **kw)
    if abs(cv.value) > 1e-8:
        raise RefinementError(f"connection {abs(cv.value):.2e} too large at {lam}", trace)
    ef, res = eigenfunction(lam, rho_m, M, delta, rtol, n_grid)
    return EigenvalueRecord(lam, multiplicity, ef, res, abs(cv.value), trace)


def eigenfunction(lam: complex, rho_m: float = 0.5, M: int = 25, delta: float = 0.05,
                  rtol: float = RTOL, n_grid: int = 201):
    """Glue the two shot solutions on a uniform rho grid; returns (GridFunction, residual).

    The function is normalized so that its entry of largest modulus equals 1;
    the residual is the sup of the mode equation evaluated with fourth-order
    differences at interior grid points.
    """
    lam = complex(lam)
    lamv = np.array([lam])
    xm = rho_m ** 2
    rho = np.linspace(0.0, 1.0, n_grid)
    x = rho ** 2
    sL = frobenius_seed(lam, 0, M, delta)
    sR = frobenius_seed(lam, 1, M, delta)
    a = _integrate(lamv, sL.start, xm, *map(np.atleast_1d, sL.w_and_dw(sL.start)), rtol, dense=True)
    b = _integrate(lamv, 1 - sR.start, xm, *map(np.atleast_1d, sR.w_and_dw(sR.start)), rtol,
                   dense=True)
    w = np.empty(n_grid, complex)
    iL = x <= sL.start
    iR = x >= 1 - sR.start
    iA = (~iL) & (x <= xm)
    iB = (~iR) & (x > xm)
    w[iL] = sL.w_and_dw(x[iL])[0]
    w[iA] = a.sol(x[iA])[0]
    wB = np.empty(n_grid, complex)
    wB[iB] = b.sol(x[iB])[0]
    wB[iR] = sR.w_and_dw(1 - x[iR])[0]
    scale = a.y[0, -1] / b.y[0, -1]
    w[iB | iR] = wB[iB | iR] * scale
    u = x * w
    k = np.argmax(np.abs(u))
    u = u / u[k]
    res = mode_residual(rho, u, lam)
    if np.max(np.abs(u.imag)) < 1e-13:
        u = u.real
    return GridFunction(rho, u, 2), res


def mode_residual(rho: np.ndarray, u: np.ndarray, lam: complex) -> float:
    """Sup over interior nodes of the mode equation applied to uniform samples u."""
    h = rho[1] - rho[0]
    k = np.arange(2, len(rho) - 2)
    d1 = (u[k - 2] - 8 * u[k - 1] + 8 * u[k + 1] - u[k + 2]) / (12 * h)
    d2 = (-u[k - 2] + 16 * u[k - 1] - 30 * u[k] + 16 * u[k + 1] - u[k + 2]) / (12 * h * h)
    r = rho[k]
    w0 = (1 - r * r) / (1 + 0.6 * r * r)
    pot = 3 * (3 * w0 ** 2 - 1) / r ** 2
    res = -(1 - r * r) * (d2 + 2 * d1 / r) + 2 * lam * r * d1 + lam * (lam + 1) * u[k] + pot * u[k]
    return float(np.max(np.abs(res)))


# ---------------------------------------------------------------------------
# scanning

@dataclass
class ScanResult:
    eigenvalues: list
    spectral_bound: Optional[float]
    inconclusive: list
    cells: list


def _moment_estimate(res: ContourResult) -> complex:
    """First moment (1/2 pi i) \\oint lam dlog E for a cell containing one zero."""
    z = res.points
    zc = np.append(z, z[0])
    zmid = (zc[1:] + zc[:-1]) / 2
    return complex(np.sum(zmid * res.log_increments) / (2j * np.pi))


def _locate(rect: Rect, n_boundary: int, kw: dict, depth: int, found: list, bad: list):
    try:
        res = _contour(rect, n_boundary, 10, kw)
    except InconclusiveContourError as e:
        bad.append((rect, str(e)))
        return
    if res.count == 0:
        return
    if res.count == 1 or depth == 0:
        guess = _moment_estimate(res) if res.count == 1 else complex(
            (rect.re0 + rect.re1) / 2, (rect.im0 + rect.im1) / 2)
        if not rect.contains(guess):
            guess = complex((rect.re0 + rect.re1) / 2, (rect.im0 + rect.im1) / 2)
        try:
            rec = refine_eigenvalue(guess, **kw)
            rec.multiplicity_count = res.count
            found.append(rec)
        except RefinementError as e:
            bad.append((rect, str(e)))
        return
    rm, im = (rect.re0 + rect.re1) / 2, (rect.im0 + rect.im1) / 2
    # split off-centre so no sub-edge lies on the real axis
    if rect.im0 < 0 < rect.im1:
        im = rect.im0 + 0.61 * (rect.im1 - rect.im0) if abs(im) < 1e-3 else im
    for r in (Rect(rect.re0, rm, rect.im0, im), Rect(rm, rect.re1, rect.im0, im),
              Rect(rect.re0, rm, im, rect.im1), Rect(rm, rect.re1, im, rect.im1)):
        _locate(r, n_boundary, kw, depth - 1, found, bad)


def _scan_cell(c: Rect, n_boundary: int, kw: dict):
    f, b = [], []
    _locate(c, n_boundary, kw, 3, f, b)
    return f, b


def spectrum_scan(re_range=(-1.4, 2.0), im_range=(-20.0, 20.0), resolution=(4, 9),
                  n_boundary: int = 24, rho_m: float = 0.5, M: int = 25, delta: float = 0.05,
                  rtol: float = RTOL, symmetric: bool = True, jobs: int = 1) -> ScanResult:
    """Subdivide the rectangle into cells, count zeros per cell and refine them.

    With ``symmetric`` only the upper half plane is scanned (the coefficients are
    real so zeros come in conjugate pairs) and the lower half is mirrored.
    The imaginary cell edges never coincide with the real axis.
    """
    if re_range[0] <= -1.5:
        raise ValueError("the mode equation characterizes the spectrum only for Re lam > -3/2")
    nre, nim = resolution
    if nim % 2 == 0:
        nim += 1
    kw = dict(rho_m=rho_m, M=M, delta=delta, rtol=rtol)
    re_e = np.linspace(re_range[0], re_range[1], nre + 1)
    im_e = np.linspace(im_range[0], im_range[1], nim + 1)
    cells = [Rect(re_e[i], re_e[i + 1], im_e[j], im_e[j + 1])
             for i in range(nre) for j in range(nim)]
    if symmetric and abs(im_range[0] + im_range[1]) < 1e-12:
        cells = [c for c in cells if c.im1 > 0]
    found, bad = [], []
    work = partial(_scan_cell, n_boundary=n_boundary, kw=kw)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(work, cells))
    else:
        results = [work(c) for c in cells]
    for f, b in results:
        found.extend(f)
        bad.extend(b)
    if symmetric and abs(im_range[0] + im_range[1]) < 1e-12:
        mirrored = []
        for rec in found:
            if abs(rec.lam.imag) > 1e-9:
                ef = rec.eigenfunction
                ef2 = None if ef is None else GridFunction(ef.grid, np.conj(ef.values), 2)
                mirrored.append(EigenvalueRecord(np.conj(rec.lam), rec.multiplicity_count, ef2,
                                                 rec.residual, rec.connection_abs))
        found.extend(mirrored)
    # merge duplicates from neighbouring cells
    uniq = []
    for rec in found:
        if all(abs(rec.lam - u.lam) > 1e-6 for u in uniq):
            uniq.append(rec)
    uniq.sort(key=lambda r: (r.lam.real, r.lam.imag))
    others = [r.lam.real for r in uniq if abs(r.lam - 1) > 1e-6]
    bound = max(others) if others else None
    return ScanResult(uniq, bound, bad, cells)


# ---------------------------------------------------------------------------
# the lambda = 1 mode: simplicity integral and Abel identity

def algmult_integral() -> tuple[float, float]:
    """int_0^1 s^2 h0(s) gtilde(s) ds by adaptive Gauss-Kronrod (scipy) and by
    tanh-sinh quadrature in 30-digit arithmetic (mpmath).

    A nonzero value rules out a Jordan chain at lambda = 1.
    """
    import mpmath as mp
    from scipy.integrate import quad

    from .profiles import eval_gtilde, eval_h0
    a = quad(lambda s: s * s * eval_h0(s) * eval_gtilde(s), 0.0, 1.0, epsabs=1e-15, epsrel=1e-14)[0]
    with mp.workdps(30):
        f = lambda s: s ** 4 * s ** 2 * (35 - 3 * s ** 2) / (3 * (5 + 3 * s ** 2) ** 5)
        b = float(mp.quad(f, [0, 1]))
    return float(a), b


def _mode_rhs_rho(r, y, lam):
    u, du = y
    w0 = (1 - r * r) / (1 + 0.6 * r * r)
    pot = 3 * (3 * w0 ** 2 - 1) / r ** 2
    p = 2 / r - 2 * lam * r / (1 - r * r)
    q = -(lam * (lam + 1) + pot) / (1 - r * r)
    return [du, -p * du - q * u]


def wronskian_check(rho=None, lam: float = 1.0, rho0: float = 0.5) -> float:
    """Max relative deviation of W(h0, h1) rho^2 (1 - rho^2)^lam from its value at rho0.

    h0 = rho^2/(5+3rho^2)^2 is the regular lambda = 1 solution; h1 is an
    independent solution shot from rho0 with (h1, h1') = (0, 1). Abel's formula
    for the mode equation predicts W = C / (rho^2 (1 - rho^2)^lam).
    """
    rho = np.linspace(0.1, 0.9, 81) if rho is None else np.asarray(rho, dtype=float)
    fwd = rho[rho >= rho0]
    bwd = rho[rho < rho0][::-1]
    h1 = np.empty_like(rho)
    dh1 = np.empty_like(rho)
    for pts, sign in ((fwd, 1), (bwd, -1)):
        if len(pts) == 0:
            continue
        sol = solve_ivp(_mode_rhs_rho, (rho0, pts[-1]), [0.0, 1.0], method="DOP853",
                        t_eval=pts, rtol=1e-13, atol=1e-15, args=(lam,))
        idx = np.searchsorted(rho, pts)
        h1[idx], dh1[idx] = sol.y
    h0 = rho ** 2 / (5 + 3 * rho ** 2) ** 2
    dh0 = 2 * rho * (5 - 3 * rho ** 2) / (5 + 3 * rho ** 2) ** 3
    W = h0 * dh1 - dh0 * h1
    c = W * rho ** 2 * (1 - rho ** 2) ** lam
    c0 = rho0 ** 2 / (5 + 3 * rho0 ** 2) ** 2 * rho0 ** 2 * (1 - rho0 ** 2) ** lam
    return float(np.max(np.abs(c / c0 - 1)))
