"""Non-blind image deblurring with a constrained hybrid non-convex TV model."""

from .degrade import NoiseSpec, degrade, make_psf, standard_psfs, synthetic_image
from .image import clamp, load_pnm, save_pnm
from .metrics import SsimConfig, mssim, psnr, ssim_map
from .operators import Psf, convolve_periodic, grad, grad_adjoint, hessian, hessian_adjoint
from .solver import DivergenceError, SolverConfig, SolverReport, deblur, deblur_color
from .weights import WeightConfig, irls_weights, zeta

__version__ = "0.1.0"
