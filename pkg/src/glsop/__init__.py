"""Sharp constants and Grand Lebesgue Space bounds for multilinear integral
operators with homogeneous kernels on the half-line."""

from .beta import BetaCurve, BetaPoint, CertifyReport, beta_at, beta_curve, certify_theorem
from .gls import (GeneratingFunction, GlsNorm, NormEstimate, TestFunction, constant_psi,
                  exponential, expr_function, expr_psi, extremal_psi, function_from_spec, gls_norm,
                  indicator, lp_norm, neglog, power_psi, psi_from_spec, tail_power, trunc_power,
                  two_sided_psi)
from .kernel import (HomogeneityReport, HomogeneousKernel, KernelError, KernelNotVerified,
                     builtin_kernel, check_homogeneity, kernel_from_expression, kernel_from_spec)
from .quadrature import (IntegralEstimate, QuadratureConfig, integrate_halfline_1,
                         integrate_halfline_m)
from .tail import HStar, TailBound, TailCheck, tail_bound, tail_check, young_fenchel
from .theta import DmScan, ExponentVector, ThetaEstimate, dm_scan, theta, theta_closed_form
from .verify import (InequalityReport, OperatorNorm, SharpnessProbe, SharpnessViolation,
                     apply_operator, check_inequality, operator_lp_norm, sharpness_probe)

__version__ = "0.1.0"
