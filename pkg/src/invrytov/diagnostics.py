"""Independent finite-difference oracle and convergence-radius estimates.

The mode fields solved analytically elsewhere satisfy, for each angular
index n, the radial boundary value problem

    rho^2 v'' + rho v' - (k^2 (1 + eta(rho)) rho^2 + n^2) v = 0   on (0, R),
    v(R) + ell v'(R) = ell / R,
    v(0) = 0 for n >= 1,  v'(0) = 0 for n = 0,

which this module discretises with second-order central differences and a
sparse direct solve.  It shares no code with the analytic route, so
agreement between the two is a real check.

The forward-series convergence test uses L2 surrogates of the kernel
bounds: per mode,

    mu_alpha = g max_i sqrt(sum_n 2 pi dr r_n g_alpha(r_i, r_n)^2)
    nu_alpha = g sqrt(pi R_a^2) max_y1 g_alpha(R, y1)
               * max_y2 g_alpha(y2, R) / g_alpha(R, R)

with maxima and sums over nodes inside the support radius, and the
sufficient condition ||eta|| (mu + nu) < 1 in the polar-weighted norm
||eta|| = sqrt(sum 2 pi dr r eta^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import spsolve

from .greens import GreensTable
from .model import ProblemConfig, RadialGrid, RadialProfile, true_profile

__all__ = [
    "FdModeSolution",
    "ConvergenceReport",
    "fd_oracle",
    "estimate_mu_nu",
    "rel_l2_error",
]


@dataclass
class FdModeSolution:
    """One finite-difference mode field on its fine grid."""

    n: int
    rho: np.ndarray
    values: np.ndarray

    @property
    def boundary(self) -> float:
        return float(self.values[-1])

    def at(self, r) -> np.ndarray:
        return np.interp(r, self.rho, self.values)


def _eta_on_fine(eta, rho: np.ndarray, cfg: ProblemConfig) -> np.ndarray:
    if eta is None:
        return np.zeros_like(rho)
    vals = eta.values if isinstance(eta, RadialProfile) else \
        np.asarray(eta, dtype=float)
    if vals.shape != (cfg.N_r,):
        raise ValueError(f"eta must have shape ({cfg.N_r},), got {vals.shape}")
    # node i carries the cell ((i-1) dr, i dr]
    idx = np.ceil(rho / cfg.dr - 1e-12).astype(int)
    idx = np.clip(idx, 1, cfg.N_r)
    return vals[idx - 1]


def fd_oracle(n: int, eta, cfg: ProblemConfig,
              fd_points: int = 10_000) -> FdModeSolution:
    """Solve one mode's boundary value problem by finite differences.

    eta is None for the unperturbed field, or a profile of N_r cell values
    read piecewise-constantly.  The returned boundary value converges to
    the analytic mode field at second order in the step.
    """
    if n < 0:
        raise ValueError(f"mode index must be >= 0, got {n}")
    if fd_points < 10:
        raise ValueError(f"need at least 10 points, got {fd_points}")
    m = int(fd_points)
    h = cfg.R / m
    rho = h * np.arange(1, m + 1)
    coeff = cfg.k * cfg.k * (1.0 + _eta_on_fine(eta, rho, cfg))

    # interior stencil over rows 0..m-2; row m-1 is the boundary condition
    r = rho[:m - 1]
    lower = r * r / (h * h) - r / (2.0 * h)
    diag = -2.0 * r * r / (h * h) - (coeff[:m - 1] * r * r + n * n)
    upper = r * r / (h * h) + r / (2.0 * h)
    if n == 0:
        # regularity v'(0) = 0: parabola through 0,h,2h gives
        # v(0) = (4 v_1 - v_2) / 3
        diag[0] += lower[0] * 4.0 / 3.0
        upper[0] += lower[0] * (-1.0 / 3.0)
    # n >= 1: v(0) = 0, the row-0 lower entry drops either way

    ell = cfg.ell
    d0 = np.append(diag, 1.0 + 3.0 * ell / (2.0 * h))
    d_up = upper
    d_lo = np.append(lower[1:], -2.0 * ell / h)
    d_lo2 = np.zeros(m - 2)
    # one-sided second-order v'(R) in the boundary condition
    d_lo2[m - 3] = ell / (2.0 * h)
    mat = diags([d_lo2, d_lo, d0, d_up], offsets=[-2, -1, 0, 1], format="csr")
    rhs = np.zeros(m)
    rhs[m - 1] = ell / cfg.R

    vals = spsolve(mat, rhs)
    return FdModeSolution(n=n, rho=rho, values=vals)


@dataclass
class ConvergenceReport:
    """Kernel-norm surrogates and the sufficient convergence condition."""

    mu_modes: np.ndarray
    nu_modes: np.ndarray
    mu: float
    nu: float
    eta_norm: float
    forward_radius_ok: bool
    p: int = 2
    q: int = 2
    r: int = 2


def estimate_mu_nu(cfg: ProblemConfig, table: GreensTable, eta=None,
                   g_factor: float = 1.0) -> ConvergenceReport:
    """Estimate the convergence-radius bound for a profile (default: the
    configured step profile).  g_factor scales the coupling, for scaling
    studies."""
    grid = table.grid
    pts = grid.points
    inside = pts <= cfg.R_a + 1e-12 * cfg.R
    if not np.any(inside):
        raise ValueError("no grid nodes inside the support radius")
    geff = cfg.g * g_factor
    w = 2.0 * math.pi * cfg.dr * pts[inside]

    # unweighted kernel g_alpha(x, y): strip the r' factor
    kernels = table.modes / pts[np.newaxis, np.newaxis, :]
    sub = kernels[:, :, inside][:, inside, :]
    mu_modes = geff * np.sqrt((sub * sub) @ w).max(axis=1)

    bnd_row = kernels[:, -1, inside]          # g_alpha(R, y1)
    bnd_col = kernels[:, inside, -1]          # g_alpha(y2, R)
    point = kernels[:, -1, -1]                # g_alpha(R, R)
    nu_modes = geff * math.sqrt(math.pi) * cfg.R_a * \
        bnd_row.max(axis=1) * bnd_col.max(axis=1) / point

    if eta is None:
        eta = true_profile(cfg, grid)
    vals = eta.values if isinstance(eta, RadialProfile) else \
        np.asarray(eta, dtype=float)
    eta_norm = float(np.sqrt(np.sum(2.0 * math.pi * cfg.dr * pts
                                    * vals * vals)))

    mu = float(mu_modes.max())
    nu = float(nu_modes.max())
    return ConvergenceReport(mu_modes=mu_modes, nu_modes=nu_modes,
                             mu=mu, nu=nu, eta_norm=eta_norm,
                             forward_radius_ok=eta_norm * (mu + nu) < 1.0)


def rel_l2_error(approx, reference, grid: RadialGrid) -> float:
    """Relative error in the polar-weighted discrete L2 norm.

    Zero reference: 0.0 when approx is also zero, +inf otherwise.
    """
    a = approx.values if isinstance(approx, RadialProfile) else \
        np.asarray(approx, dtype=float)
    b = reference.values if isinstance(reference, RadialProfile) else \
        np.asarray(reference, dtype=float)
    w = grid.dr * grid.points
    num = float(np.sqrt(np.sum(w * (a - b) ** 2)))
    den = float(np.sqrt(np.sum(w * b * b)))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den
