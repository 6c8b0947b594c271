"""Similarity-variable discretization shared by the linear and nonlinear solvers.

The fields are not collocated directly. With x = rho^2 every admissible pair
(phi1, phi2) is written as

    phi1 = rho^5 p(x),     phi2 = rho M[w](x),     M[f] = 15 f + 20 x f' + 4 x^2 f'',

where w = rho^{-5} K^2 phi2 is the similarity-variable perturbation divided
by rho^2. Both w and p are smooth in x on [0, 1], so the boundary conditions
phi1(0) = phi1'(0) = phi2(0) = 0 (and the higher-order vanishing at rho = 0)
hold by construction, and the first-order system becomes

    p_tau = -3p - 2x p_x + 4x w_xx + 14 w_x - V w - (9 W0 w^2 + 3 x w^3)
    w_tau =  p - 2w - 2x w_x

with no singular coefficients. The state vector stacks (p, w), matching the
component order (phi1, phi2).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import chebyshev as cheb
from .operators import NormReport


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class SimGrid:
    N: int

    @property
    def x(self) -> np.ndarray:
        return _nodes(self.N)

    @property
    def rho(self) -> np.ndarray:
        return np.sqrt(self.x)

    @property
    def D(self) -> np.ndarray:
        return _dmat(self.N)

    @property
    def V(self) -> np.ndarray:
        x = self.x
        return -144 * (5 - x) / (5 + 3 * x) ** 2

    @property
    def W0(self) -> np.ndarray:
        x = self.x
        return 5 * (1 - x) / (5 + 3 * x)

    def symmetry_mode(self) -> np.ndarray:
        """Stacked (p, w) of the symmetry mode g."""
        x = self.x
        return np.concatenate([(5 - x) / (5 + 3 * x) ** 3, 1 / (3 * (5 + 3 * x) ** 2)])

    def split(self, u):
        u = np.asarray(u)
        return u[: self.N], u[self.N:]

    def norm(self, u) -> NormReport:
        Bp, Bw, wq = _norm_ops(self.N)
        p, w = self.split(u)
        n1 = float(np.sqrt(np.sum(wq * np.abs(Bp @ p) ** 2)))
        n2 = float(np.sqrt(np.sum(wq * np.abs(Bw @ w) ** 2)))
        return NormReport(n1, n2, float(np.hypot(n1, n2)))

    def hnorm(self, u) -> float:
        return self.norm(u).total

    def hnorms(self, U: np.ndarray) -> np.ndarray:
        """Total norms of many states given as the columns of U."""
        Bp, Bw, wq = _norm_ops(self.N)
        a = Bp @ U[: self.N]
        b = Bw @ U[self.N:]
        return np.sqrt(wq @ (np.abs(a) ** 2) + wq @ (np.abs(b) ** 2))

    def fields(self, u, rho):
        """Evaluate (phi1, phi2) at arbitrary rho from the stacked (p, w)."""
        p, w = self.split(u)
        rho = np.asarray(rho, dtype=float)
        x = rho ** 2
        cp, cw = cheb.to_coeffs(p), cheb.to_coeffs(w)
        M = (15 * cheb.evaluate(cw, x) + 20 * x * cheb.evaluate(cw, x, deriv=1)
             + 4 * x * x * cheb.evaluate(cw, x, deriv=2))
        return rho ** 5 * cheb.evaluate(cp, x), rho * M

    def interp(self, u, x):
        p, w = self.split(u)
        return cheb.evaluate(cheb.to_coeffs(p), x), cheb.evaluate(cheb.to_coeffs(w), x)


@lru_cache(maxsize=16)
def _nodes(N: int) -> np.ndarray:
    return cheb.lobatto(N, 0.0, 1.0)


@lru_cache(maxsize=16)
def _dmat(N: int) -> np.ndarray:
    return cheb.diff_matrix(N, 0.0, 1.0)


@lru_cache(maxsize=16)
def _norm_ops(N: int):
    """Matrices giving D^2 phi1 = rho M[p] and phi2' = M[w] + 2x M[w]_x at
    Gauss-Legendre nodes in rho; the norm is a weighted sum of squares, which
    stays accurate where the Gram matrix would be hopelessly ill-conditioned."""
    nq = 2 * N + 16
    r, wq = np.polynomial.legendre.leggauss(nq)
    r = (r + 1) / 2
    wq = wq / 2
    xq = (r ** 2)[:, None]
    E = [cheb.eval_matrix(N, r ** 2, 0.0, 1.0, d) for d in range(4)]
    Mf = 15 * E[0] + 20 * xq * E[1] + 4 * xq ** 2 * E[2]
    dMf = 35 * E[1] + 28 * xq * E[2] + 4 * xq ** 2 * E[3]
    Bp = r[:, None] * Mf
    Bw = Mf + 2 * xq * dMf
    return Bp, Bw, wq


@dataclass
class FieldState:
    """Similarity-variable state at slow time tau, stored as smooth (p, w) on the x-grid.

    ``phi1`` and ``phi2`` evaluate the paper-level fields at arbitrary rho.
    """
    tau: float
    u: np.ndarray
    N: int

    @property
    def grid(self) -> SimGrid:
        return SimGrid(self.N)

    @property
    def p(self) -> np.ndarray:
        return self.u[: self.N]

    @property
    def w(self) -> np.ndarray:
        return self.u[self.N:]

    def phi1(self, rho) -> np.ndarray:
        return self.grid.fields(self.u, rho)[0]

    def phi2(self, rho) -> np.ndarray:
        return self.grid.fields(self.u, rho)[1]

    def norm(self) -> NormReport:
        return self.grid.norm(self.u)

    def check(self) -> None:
        if not np.all(np.isfinite(self.u)):
            raise FloatingPointError("state contains non-finite values")

    @classmethod
    def from_pw(cls, p, w, tau: float = 0.0):
        p, w = np.asarray(p), np.asarray(w)
        if p.shape != w.shape:
            raise ValueError("p and w must have the same length")
        return cls(tau, np.concatenate([p, w]), len(p))

    @classmethod
    def zero(cls, N: int, tau: float = 0.0):
        return cls(tau, np.zeros(2 * N), N)


def check_N(N: int, minimum: int = 16) -> None:
    if N < minimum:
        raise ResolutionError(f"N = {N} below the minimum {minimum}")
