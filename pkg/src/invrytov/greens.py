"""Robin Green's function of the homogeneous disk, mode by mode.

For angular mode n the radial kernel is

    g_n(r, r') = K_n(k max(r, r')) I_n(k min(r, r'))
                 - dhat_n I_n(k r) I_n(k r'),

    dhat_n = (K_n(kR) + k ell K_n'(kR)) / (I_n(kR) + k ell I_n'(kR)),

which satisfies g_n + ell d/dr g_n = 0 at r = R in the first argument.  The
weighted kernel G^(n)(r, r') = g_n(r, r') r' absorbs the polar metric of the
second argument; d_alpha = dhat_alpha I_alpha(kR) and the unperturbed
boundary field per mode is u0(alpha) = g_alpha(R, R).

Scaling: I_n and K_n factors individually leave the double range long before
n reaches the mode counts used here, but each retained term pairs one I with
one K (or compensates through dhat), so the assembly works in log magnitude
plus sign and demotes only the balanced terms.  Underflow of a negligible
term demotes to 0.0, which is the correct limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import (ScaledValue, bessel_i, bessel_i_family, bessel_k,
                     bessel_k_family, bessel_pair_derivatives)
from .model import ProblemConfig, RadialGrid, make_grid

__all__ = [
    "GreensTable",
    "g_mode",
    "d_coefficient",
    "u0_boundary",
    "build_greens_table",
]


def _dhat(n: int, cfg: ProblemConfig) -> ScaledValue:
    """dhat_n, the Robin reflection coefficient at the boundary."""
    x = cfg.k * cfg.R
    di, dk = bessel_pair_derivatives(n, x)
    num = bessel_k(n, x) + (cfg.k * cfg.ell) * dk
    den = bessel_i(n, x) + (cfg.k * cfg.ell) * di
    return num / den


def _mode_cap(n: int, cfg: ProblemConfig) -> None:
    if abs(n) > cfg.M_SD + 2:
        raise ValueError(f"mode {n} outside the supported range "
                         f"|n| <= M_SD + 2 = {cfg.M_SD + 2}")


def g_mode(n: int, r: float, rp: float, cfg: ProblemConfig) -> float:
    """Point evaluation g_n(r, rp); n may be negative (g is even in n)."""
    _mode_cap(n, cfg)
    n = abs(n)
    if not (0.0 < r <= cfg.R and 0.0 < rp <= cfg.R):
        raise ValueError(f"radii must lie in (0, R], got {r}, {rp}")
    k = cfg.k
    hi, lo = (r, rp) if r >= rp else (rp, r)
    main = bessel_k(n, k * hi) * bessel_i(n, k * lo)
    tail = _dhat(n, cfg) * bessel_i(n, k * r) * bessel_i(n, k * rp)
    return (main - tail).to_float()


def d_coefficient(alpha: int, cfg: ProblemConfig) -> float:
    """d_alpha = dhat_alpha * I_alpha(kR)."""
    _mode_cap(alpha, cfg)
    alpha = abs(alpha)
    return (_dhat(alpha, cfg) * bessel_i(alpha, cfg.k * cfg.R)).to_float()


def u0_boundary(alpha: int, cfg: ProblemConfig) -> float:
    """Unperturbed boundary field per mode, u0 = g_alpha(R, R).

    Evaluated as I_alpha(kR) K_alpha(kR) - d_alpha I_alpha(kR); raises if the
    value fails to be positive, which would poison every later log-ratio.
    """
    _mode_cap(alpha, cfg)
    alpha = abs(alpha)
    x = cfg.k * cfg.R
    i_r = bessel_i(alpha, x)
    val = (i_r * bessel_k(alpha, x) - _dhat(alpha, cfg) * i_r * i_r).to_float()
    if not (val > 0.0 and math.isfinite(val)):
        raise ValueError(f"u0 boundary value must be positive, "
                         f"got {val} at mode {alpha}")
    return val


@dataclass
class GreensTable:
    """Dense per-mode kernels on the radial grid.

    modes[a-1, i-1, n-1] = G^(a)(r_i, r_n) = g_a(r_i, r_n) * r_n.  Because
    r_{N_r} = R, row N_r is the boundary row G^(a)(R, r_n) and column N_r is
    G^(a)(r_i, R).  u0[a-1] = g_a(R, R) and d[a-1] = d_a.
    """

    cfg: ProblemConfig
    grid: RadialGrid
    modes: np.ndarray
    u0: np.ndarray
    d: np.ndarray

    def boundary_row(self, alpha: int) -> np.ndarray:
        """G^(alpha)(R, r_n) for n = 1..N_r."""
        return self.modes[alpha - 1, -1, :]

    def boundary_col(self, alpha: int) -> np.ndarray:
        """G^(alpha)(r_i, R) for i = 1..N_r."""
        return self.modes[alpha - 1, :, -1]

    def boundary_point(self, alpha: int) -> float:
        """G^(alpha)(R, R)."""
        return float(self.modes[alpha - 1, -1, -1])


def build_greens_table(cfg: ProblemConfig,
                       grid: RadialGrid | None = None) -> GreensTable:
    if grid is None:
        grid = make_grid(cfg)
    k = cfg.k
    n_r = cfg.N_r
    m_sd = cfg.M_SD
    pts = grid.points
    n_orders = m_sd + 1

    # log I_n(k r_i), log K_n(k r_i) for every node and mode (all positive)
    log_i = np.empty((n_r, n_orders))
    log_k = np.empty((n_r, n_orders))
    for idx in range(n_r):
        x = k * pts[idx]
        ifam = bessel_i_family(m_sd, x)
        kfam = bessel_k_family(m_sd, x)
        for n in range(n_orders):
            log_i[idx, n] = ifam[n].log_abs()
            log_k[idx, n] = kfam[n].log_abs()

    # dhat_n at the boundary, as sign and log magnitude
    dhat_sign = np.empty(n_orders)
    dhat_log = np.empty(n_orders)
    u0 = np.empty(m_sd)
    dvals = np.empty(m_sd)
    x_r = k * cfg.R
    ifam_r = bessel_i_family(m_sd + 1, x_r)
    kfam_r = bessel_k_family(m_sd + 1, x_r)
    kl = k * cfg.ell
    for n in range(n_orders):
        if n == 0:
            di = ifam_r[1]
            dk = -kfam_r[1]
        else:
            di = (ifam_r[n - 1] + ifam_r[n + 1]) * 0.5
            dk = (kfam_r[n - 1] + kfam_r[n + 1]) * (-0.5)
        dh = (kfam_r[n] + kl * dk) / (ifam_r[n] + kl * di)
        dhat_sign[n] = dh.sign
        dhat_log[n] = dh.log_abs()
        if 1 <= n <= m_sd:
            dvals[n - 1] = (dh * ifam_r[n]).to_float()
            val = (ifam_r[n] * kfam_r[n] - dh * ifam_r[n] * ifam_r[n]).to_float()
            if not (val > 0.0 and math.isfinite(val)):
                raise ValueError(f"u0 boundary value must be positive, "
                                 f"got {val} at mode {n}")
            u0[n - 1] = val

    # G^(a)(r_i, r_n) = exp(LK[max] + LI[min]) - s exp(Ldhat + LI_i + LI_n),
    # weighted by r_n; index max/min works because the grid is sorted
    idx = np.arange(n_r)
    hi = np.maximum.outer(idx, idx)
    lo = np.minimum.outer(idx, idx)
    modes = np.empty((m_sd, n_r, n_r))
    with np.errstate(under="ignore"):
        for a in range(1, m_sd + 1):
            li = log_i[:, a]
            lk = log_k[:, a]
            main = np.exp(lk[hi] + li[lo])
            tail = dhat_sign[a] * np.exp(dhat_log[a] + np.add.outer(li, li))
            modes[a - 1] = (main - tail) * pts[np.newaxis, :]

    return GreensTable(cfg=cfg, grid=grid, modes=modes, u0=u0, d=dvals)
