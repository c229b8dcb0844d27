"""Kernel denoisers (linear filtering, Yaroslavsky, NLM, NLM-average and
membership/bandwidth oracles) written as box-kernel local polynomial
regressions, with synthetic scenes and a Monte-Carlo benchmark harness."""

from .estimators import DenoiseResult, MethodConfig, active_sets, default_bandwidths, denoise
from .grid import (DomainError, ErrorReport, NoiseSpec, add_noise, bias_variance,
                   lattice_point, mse)
from .kernels import PatchSpec, PhotometricSpec, WindowSpec
from .lpr import LprConfig, basis, clip01, lpr_fit, ridge_solve_batch
from .scenes import Scene

__all__ = [
    "DenoiseResult", "DomainError", "ErrorReport", "LprConfig", "MethodConfig", "NoiseSpec",
    "PatchSpec", "PhotometricSpec", "Scene", "WindowSpec", "active_sets", "add_noise", "basis",
    "bias_variance", "clip01", "default_bandwidths", "denoise", "lattice_point", "lpr_fit", "mse",
    "ridge_solve_batch",
]
