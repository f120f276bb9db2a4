"""Reconstruction of a radial absorption perturbation in a disk from
boundary log-ratio data, by inverting the perturbation series order by
order.

The pipeline: analytic mode fields and kernels (bessel, greens), the
layered forward solution and noise model (forward), the discrete
perturbation series (series), the regularised inverse series (inversion),
and independent numerical checks (diagnostics).  The cli module exposes
the same workflow as a command line tool.
"""

from .bessel import ScaledValue, bessel_i, bessel_i_family, bessel_k, \
    bessel_k_family
from .diagnostics import ConvergenceReport, estimate_mu_nu, fd_oracle, \
    rel_l2_error
from .forward import (PRNG_ALGORITHM, add_noise, boundary_fields,
                      exact_boundary_data, psi_from_fields,
                      solve_layer_coefficients)
from .greens import GreensTable, build_greens_table, d_coefficient, g_mode, \
    u0_boundary
from .inversion import (LinearizedMap, ReconstructionResult, TsvdInverse,
                        apply_tsvd, assemble_j1, build_tsvd, inverse_order_j,
                        projected_truth, reconstruct)
from .model import (BoundaryData, ProblemConfig, RadialGrid, RadialProfile,
                    config_from_file, config_to_file, make_grid,
                    parse_config, true_profile)
from .series import BornVector, born_vector, born_zero, compositions, \
    rytov_forward

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ScaledValue", "bessel_i", "bessel_k", "bessel_i_family",
    "bessel_k_family",
    "ProblemConfig", "RadialGrid", "RadialProfile", "BoundaryData",
    "make_grid", "true_profile", "parse_config", "config_from_file",
    "config_to_file",
    "GreensTable", "build_greens_table", "g_mode", "d_coefficient",
    "u0_boundary",
    "PRNG_ALGORITHM", "solve_layer_coefficients", "boundary_fields",
    "psi_from_fields", "exact_boundary_data", "add_noise",
    "BornVector", "compositions", "born_zero", "born_vector",
    "rytov_forward",
    "LinearizedMap", "TsvdInverse", "ReconstructionResult", "assemble_j1",
    "build_tsvd", "apply_tsvd", "inverse_order_j", "reconstruct",
    "projected_truth",
    "ConvergenceReport", "fd_oracle", "estimate_mu_nu", "rel_l2_error",
]
