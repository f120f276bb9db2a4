"""Shared fixtures: the standard 90-mode disk problem and its decompositions.

Everything expensive (Green's table, SVD) is built once per session; the
objects are treated as immutable by every test.
"""

import numpy as np
import pytest

from invrytov.forward import boundary_fields, psi_from_fields
from invrytov.greens import build_greens_table
from invrytov.inversion import assemble_j1, build_tsvd
from invrytov.model import ProblemConfig, make_grid


@pytest.fixture(scope="session")
def cfg54():
    """The standard testbed: unit contrast, 90 modes, 23 singular values."""
    return ProblemConfig(k=1.0, R=3.0, R_a=1.5, ell=0.3, eta_a=1.0,
                         N_r=90, M_SD=90, order=5, sv_count=23)


@pytest.fixture(scope="session")
def grid(cfg54):
    return make_grid(cfg54)


@pytest.fixture(scope="session")
def table(cfg54, grid):
    return build_greens_table(cfg54, grid)


@pytest.fixture(scope="session")
def j1(table, cfg54):
    return assemble_j1(table, cfg54)


@pytest.fixture(scope="session")
def inv(j1, cfg54):
    return build_tsvd(j1, cfg=cfg54)


@pytest.fixture(scope="session")
def psi54(cfg54):
    """Exact data at unit contrast."""
    u0, u = boundary_fields(cfg54)
    return psi_from_fields(u0, u)


@pytest.fixture(scope="session")
def fields54(cfg54):
    u0, u = boundary_fields(cfg54)
    return u0, u


def weighted_norm(values: np.ndarray, grid) -> float:
    """Polar-weighted discrete L2 norm used throughout the figures."""
    w = grid.dr * grid.points
    return float(np.sqrt(np.sum(w * values * values)))
