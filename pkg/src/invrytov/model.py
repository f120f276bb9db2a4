"""Problem description shared by every stage of the pipeline.

A single ProblemConfig fixes the physics (wavenumber k, disk radius R,
perturbation radius R_a, impedance length ell, perturbation amplitude eta_a),
the discretisation (N_r radial cells, M_SD source-detector modes), the
regularisation policy (a retained singular-value count or a threshold), the
series truncation order and the noise protocol (gamma, seed).

The radial grid is r_i = i * dr for i = 1..N_r with dr = R / N_r, so the last
node sits exactly on the boundary.  Radial profiles are vectors over that
grid; node i represents the cell ((i-1) dr, i dr].  Boundary data is a vector
over the mode index alpha = 1..M_SD.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .bessel import ARG_MAX, ORDER_MAX

__all__ = [
    "ProblemConfig",
    "RadialGrid",
    "RadialProfile",
    "BoundaryData",
    "make_grid",
    "true_profile",
    "parse_config",
    "config_from_file",
    "config_to_text",
    "config_to_file",
]

# keys accepted in a config file, in canonical serialisation order
_CONFIG_KEYS = ("k", "R", "R_a", "ell", "eta_a", "N_r", "M_SD",
                "sv_count", "sv_threshold", "order", "gamma", "seed")
_FLOAT_KEYS = {"k", "R", "R_a", "ell", "eta_a", "sv_threshold", "gamma"}
_INT_KEYS = {"N_r", "M_SD", "sv_count", "order", "seed"}


@dataclass(frozen=True)
class ProblemConfig:
    """Complete description of one experiment."""

    k: float
    R: float
    R_a: float
    ell: float
    eta_a: float
    N_r: int
    M_SD: int
    order: int
    sv_count: int | None = None
    sv_threshold: float | None = None
    gamma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (self.k > 0.0 and math.isfinite(self.k)):
            raise ValueError(f"k must be positive, got {self.k}")
        if not (self.R > 0.0 and math.isfinite(self.R)):
            raise ValueError(f"R must be positive, got {self.R}")
        if not (0.0 < self.R_a < self.R):
            raise ValueError(f"need 0 < R_a < R, got R_a={self.R_a}, R={self.R}")
        if not (self.ell > 0.0 and math.isfinite(self.ell)):
            raise ValueError(f"ell must be positive, got {self.ell}")
        if not (math.isfinite(self.eta_a) and self.eta_a >= -1.0):
            raise ValueError(f"eta_a must be >= -1, got {self.eta_a}")
        if not (isinstance(self.N_r, int) and self.N_r >= 1):
            raise ValueError(f"N_r must be an integer >= 1, got {self.N_r!r}")
        if not (isinstance(self.M_SD, int) and self.M_SD >= 1):
            raise ValueError(f"M_SD must be an integer >= 1, got {self.M_SD!r}")
        # the Green's table needs orders up to M_SD + 3 (derivative margin)
        if self.M_SD + 3 > ORDER_MAX:
            raise ValueError(f"M_SD={self.M_SD} needs Bessel orders beyond "
                             f"the supported maximum {ORDER_MAX}")
        if self.k * self.R > ARG_MAX:
            raise ValueError(f"k*R={self.k * self.R} exceeds the supported "
                             f"Bessel argument range [0, {ARG_MAX}]")
        if not (isinstance(self.order, int) and self.order >= 1):
            raise ValueError(f"order must be an integer >= 1, got {self.order!r}")
        if (self.sv_count is None) == (self.sv_threshold is None):
            raise ValueError("exactly one of sv_count / sv_threshold must be set")
        if self.sv_count is not None:
            lim = min(self.M_SD, self.N_r)
            if not (isinstance(self.sv_count, int) and 1 <= self.sv_count <= lim):
                raise ValueError(f"sv_count must be in [1, {lim}], "
                                 f"got {self.sv_count!r}")
        if self.sv_threshold is not None:
            if not (self.sv_threshold > 0.0 and math.isfinite(self.sv_threshold)):
                raise ValueError(f"sv_threshold must be positive, "
                                 f"got {self.sv_threshold}")
        if not (self.gamma >= 0.0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if not isinstance(self.seed, int):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")

    @property
    def g(self) -> float:
        """Background absorption, g = k**2."""
        return self.k * self.k

    @property
    def dr(self) -> float:
        return self.R / self.N_r

    def replace(self, **kwargs) -> "ProblemConfig":
        return dataclasses.replace(self, **kwargs)


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial nodes r_i = i * dr, i = 1..N_r, with r_{N_r} = R."""

    points: np.ndarray
    dr: float

    def __len__(self) -> int:
        return len(self.points)

    @property
    def boundary(self) -> float:
        return float(self.points[-1])


@dataclass
class RadialProfile:
    """A vector over the radial grid with a role tag.

    Roles in use: eta_true, eta_proj, eta_order_j (with order set),
    eta_partial_sum (with order set), mu_a.
    """

    values: np.ndarray
    role: str = "eta_true"
    order: int | None = None

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class BoundaryData:
    """Log-ratio data over the mode index alpha = 1..M_SD."""

    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)


def make_grid(cfg: ProblemConfig) -> RadialGrid:
    n = cfg.N_r
    dr = cfg.R / n
    pts = dr * np.arange(1, n + 1, dtype=float)
    # pin the last node to the boundary exactly
    pts[-1] = cfg.R
    return RadialGrid(points=pts, dr=dr)


def true_profile(cfg: ProblemConfig, grid: RadialGrid) -> RadialProfile:
    """The piecewise-constant target: eta_a inside r <= R_a, zero outside."""
    vals = np.where(grid.points <= cfg.R_a + 1e-12 * cfg.R, cfg.eta_a, 0.0)
    return RadialProfile(values=vals, role="eta_true")


def parse_config(text: str) -> ProblemConfig:
    """Parse the flat key=value format ('#' starts a comment)."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ValueError(f"line {lineno}: empty value for {key!r}")
        raw[key] = value

    def _get_int(key: str) -> int:
        try:
            return int(raw[key])
        except ValueError:
            raise ValueError(f"key {key!r}: expected integer, got {raw[key]!r}")

    def _get_float(key: str) -> float:
        try:
            return float(raw[key])
        except ValueError:
            raise ValueError(f"key {key!r}: expected number, got {raw[key]!r}")

    required = ("k", "R", "R_a", "ell", "eta_a", "N_r", "M_SD", "order")
    missing = [key for key in required if key not in raw]
    if missing:
        raise ValueError(f"missing required config keys: {', '.join(missing)}")
    if "sv_count" in raw and "sv_threshold" in raw:
        raise ValueError("sv_count and sv_threshold are mutually exclusive")
    if "sv_count" not in raw and "sv_threshold" not in raw:
        raise ValueError("one of sv_count / sv_threshold is required")

    return ProblemConfig(
        k=_get_float("k"),
        R=_get_float("R"),
        R_a=_get_float("R_a"),
        ell=_get_float("ell"),
        eta_a=_get_float("eta_a"),
        N_r=_get_int("N_r"),
        M_SD=_get_int("M_SD"),
        order=_get_int("order"),
        sv_count=_get_int("sv_count") if "sv_count" in raw else None,
        sv_threshold=(_get_float("sv_threshold")
                      if "sv_threshold" in raw else None),
        gamma=_get_float("gamma") if "gamma" in raw else 0.0,
        seed=_get_int("seed") if "seed" in raw else 0,
    )


def config_from_file(path) -> ProblemConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def config_to_text(cfg: ProblemConfig) -> str:
    lines = []
    for key in _CONFIG_KEYS:
        if key == "sv_count" and cfg.sv_count is None:
            continue
        if key == "sv_threshold" and cfg.sv_threshold is None:
            continue
        lines.append(f"{key} = {_fmt(getattr(cfg, key))}")
    return "\n".join(lines) + "\n"


def config_to_file(cfg: ProblemConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(config_to_text(cfg))
