"""Born and Rytov expansion terms on the discrete grid.

The multilinear Born vectors are built by the quadrature recursion

    {K_0}_alpha          = -G^(alpha)(R, R)
    {K_1(b)}_{i,alpha}   = +g dr sum_n G^(alpha)(r_i, r_n) G^(alpha)(r_n, R) b_n
    {K_j(b_1..b_j)}      = -g dr sum_n G^(alpha)(r_i, r_n) {b_j}_n
                                  {K_{j-1}(b_1..b_{j-1})}_{n,alpha}   (j >= 2)

with the flat index i + (alpha-1) N_r, i fastest; entry i = N_r is the
boundary slice.  The log-ratio expansion term of order j is assembled from
boundary slices over ordered compositions of j,

    {J_j(b_1..b_j)}_alpha = sum_{m=1}^{j} (-1)^m / (m {K_0}_alpha^m)
        sum_{i_1+..+i_m=j} prod_t {K_{i_t}(consecutive args)}_{N_r,alpha},

where factor t consumes the arguments b with positions s_t+1 .. s_t+i_t,
s_t = i_1 + .. + i_{t-1}.  A composition of j into m parts maps to a choice
of m-1 cut points out of j-1, so the inner sum has C(j-1, m-1) terms and
2^(j-1) products in total.

Evaluation order is fixed (m ascending, compositions in lexicographic order)
so results are bitwise reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .greens import GreensTable
from .model import BoundaryData, ProblemConfig, RadialProfile

__all__ = [
    "compositions",
    "BornVector",
    "born_zero",
    "born_vector",
    "rytov_forward",
]


def compositions(j: int, m: int) -> list[tuple[int, ...]]:
    """Ordered m-tuples of positive integers summing to j, lexicographic."""
    if j < 1 or m < 1:
        raise ValueError(f"need j >= 1 and m >= 1, got j={j}, m={m}")
    if m > j:
        return []
    out = []
    for cuts in combinations(range(1, j), m - 1):
        bounds = (0,) + cuts + (j,)
        out.append(tuple(bounds[t + 1] - bounds[t] for t in range(m)))
    return out


@dataclass
class BornVector:
    """values[alpha-1, i-1] = {K_order(...)}_{i + (alpha-1) N_r}."""

    values: np.ndarray
    order: int

    @property
    def boundary_slice(self) -> np.ndarray:
        """Entries at i = N_r, one per mode."""
        return self.values[:, -1]

    def flat(self) -> np.ndarray:
        """The printed flat layout (i fastest, alpha outer)."""
        return self.values.reshape(-1)


def _values(profile) -> np.ndarray:
    if isinstance(profile, RadialProfile):
        return profile.values
    return np.asarray(profile, dtype=float)


def born_zero(table: GreensTable) -> np.ndarray:
    """{K_0}_alpha = -G^(alpha)(R, R)."""
    return -table.modes[:, -1, -1].copy()


def _born_values(j: int, inputs: Sequence[np.ndarray], table: GreensTable,
                 cfg: ProblemConfig) -> np.ndarray:
    g_dr = cfg.g * cfg.dr
    modes = table.modes
    w = modes[:, :, -1]                      # G^(alpha)(r_n, R)
    cur = g_dr * np.einsum("ain,an->ai", modes, w * inputs[0][np.newaxis, :])
    for t in range(1, j):
        cur = -g_dr * np.einsum("ain,an->ai", modes,
                                inputs[t][np.newaxis, :] * cur)
    return cur


def born_vector(j: int, inputs: Sequence, table: GreensTable,
                cfg: ProblemConfig) -> BornVector:
    """K_j applied to j radial profiles (order of arguments matters)."""
    if j < 1:
        raise ValueError(f"order must be >= 1, got {j}")
    if len(inputs) != j:
        raise ValueError(f"expected {j} input profiles, got {len(inputs)}")
    vals = [_values(b) for b in inputs]
    n_r = cfg.N_r
    for b in vals:
        if b.shape != (n_r,):
            raise ValueError(f"input profile has shape {b.shape}, "
                             f"expected ({n_r},)")
    return BornVector(values=_born_values(j, vals, table, cfg), order=j)


def rytov_forward(j: int, inputs: Sequence, table: GreensTable,
                  cfg: ProblemConfig) -> BoundaryData:
    """J_j applied to j radial profiles; returns one value per mode."""
    if j < 1:
        raise ValueError(f"order must be >= 1, got {j}")
    if len(inputs) != j:
        raise ValueError(f"expected {j} input profiles, got {len(inputs)}")
    vals = [_values(b) for b in inputs]

    g_dr = cfg.g * cfg.dr
    modes = table.modes
    w = modes[:, :, -1]
    # prefix chains: chain[s] holds K_i(b_{s+1}..b_{s+i}) for the i values
    # a composition starting at s can request; build lazily
    slices: dict[tuple[int, int], np.ndarray] = {}

    def boundary(s: int, i: int) -> np.ndarray:
        key = (s, i)
        hit = slices.get(key)
        if hit is not None:
            return hit
        if i == 1:
            cur = g_dr * np.einsum("ain,an->ai", modes,
                                   w * vals[s][np.newaxis, :])
        else:
            prev = full(s, i - 1)
            cur = -g_dr * np.einsum("ain,an->ai", modes,
                                    vals[s + i - 1][np.newaxis, :] * prev)
        fulls[key] = cur
        out = cur[:, -1]
        slices[key] = out
        return out

    fulls: dict[tuple[int, int], np.ndarray] = {}

    def full(s: int, i: int) -> np.ndarray:
        key = (s, i)
        hit = fulls.get(key)
        if hit is not None:
            return hit
        boundary(s, i)
        return fulls[key]

    k0 = born_zero(table)
    total = np.zeros(cfg.M_SD)
    k0_pow = np.ones(cfg.M_SD)
    sign = 1.0
    for m in range(1, j + 1):
        k0_pow = k0_pow * k0
        sign = -sign
        acc = np.zeros(cfg.M_SD)
        for parts in compositions(j, m):
            prod = np.ones(cfg.M_SD)
            s = 0
            for i in parts:
                prod = prod * boundary(s, i)
                s += i
            acc += prod
        total += (sign / m) * (acc / k0_pow)
    return BoundaryData(values=total)
