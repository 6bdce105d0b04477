"""Erdelyi-Kober operators, Fox H kernels and Hardy-space bound checks.

The numerical hot loop (residue-series summation in double-double
arithmetic) runs in a compiled extension when it is available and in a
pure-Python twin otherwise; ``ekhardy.BACKEND`` tells which.  Set
``EKH_PURE_PYTHON=1`` before import to force the fallback.
"""
from ._backend import BACKEND
from .errors import (ConvergenceError, DeltaNeutralityError, DivergenceError, DomainError,
                     EKHardyError, PoleError, QuadratureError, SpecError)
from .functions import TestFunction, atom, constant, poisson_bump, power, tabulated
from .gamma import GammaRatioSpec, gamma_ratio, log_gamma, log_gamma_ratio
from .grid import Grid, GridFunction, PointValues
from .hardy import (DEFAULT_GRID, BoundCheckReport, TGrid, dilation_commutation_check, h1_norm,
                    make_atom, maximal_function, poisson_bound, poisson_convolve, poisson_kernel,
                    verify_bound_i, verify_bound_k)
from .kernels import (EvalOptions, EvalResult, ExponentFit, GKernelSpec, HKernel, HKernelSpec,
                      eval_g_m0, eval_h_m0, evaluate_many, fit_endpoint_exponent, get_kernel,
                      mellin_multiplier, power_shift_check, validate_h_spec)
from .operators import (HausdorffReport, IOperatorSpec, KOperatorSpec, apply_i, apply_k,
                        compose_single_ek, derive_i_kernel, derive_k_kernel,
                        hausdorff_admissibility, ho_constant_c1, ho_constant_c2, kernel_norm_k1,
                        kernel_norm_k2, power_multiplier_i, power_multiplier_k)
from .quadrature import QuadratureOptions

__version__ = "0.1.0"
