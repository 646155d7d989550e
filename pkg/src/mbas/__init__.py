"""Block alternating splitting solvers for time-harmonic parabolic control systems."""

from mbas.errors import (
    ConvergenceError,
    DimensionError,
    MbasError,
    NotPositiveDefiniteError,
    ParameterError,
)
from mbas.meshfem import Grid, assemble_mass, assemble_stiffness, assemble_target
from mbas.sparsekit import CsrMatrix, SpdFactor, cg_solve, frob_norm, spd_factorize, spd_solve
from mbas.systems import ProblemParams, SystemBundle, build_system
from mbas.splittings import IterConfig, SolveReport, asss_solve, bas_solve, mbas_solve
from mbas.krylov import GmresConfig, gmres_full
from mbas.params import AlphaPolicy, SpectralExtremes, alpha_est, eig_extremes, resolve_alpha

__version__ = "0.1.0"

__all__ = [
    "AlphaPolicy",
    "ConvergenceError",
    "CsrMatrix",
    "DimensionError",
    "GmresConfig",
    "Grid",
    "IterConfig",
    "MbasError",
    "NotPositiveDefiniteError",
    "ParameterError",
    "ProblemParams",
    "SolveReport",
    "SpdFactor",
    "SpectralExtremes",
    "SystemBundle",
    "alpha_est",
    "asss_solve",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_target",
    "bas_solve",
    "build_system",
    "cg_solve",
    "eig_extremes",
    "frob_norm",
    "gmres_full",
    "mbas_solve",
    "resolve_alpha",
    "spd_factorize",
    "spd_solve",
]
