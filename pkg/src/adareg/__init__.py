"""Variational imaging with a spatially adaptive regularization weight.

Linearized ADMM solvers for TV denoising, two-phase segmentation and
TV-L1 optical flow, where the per-pixel trade-off ``lam`` between data
fidelity and regularization is refreshed from the current residual.
"""

from .admm import ConvergenceTrace, DivergenceError, SolverConfig, TraceRecord
from .denoise import denoise, denoise_energy, denoise_residual
from .flow import (PyramidConfig, angular_error, endpoint_error, flow_level, flow_pyramid,
                   linearize, warp_bilinear)
from .grid import (GaussianKernel, convolve_gaussian, divergence, gradient, project_box,
                   shrink_vector2, soft_shrink)
from .imgio import (FlowFormatError, ImageFormatError, flow_to_color, read_flo, read_image,
                    write_flo, write_image)
from .metrics import SsimConfig, psnr, ssim
from .segment import DegenerateRegionError, SegmentResult, f_measure, segment, segment_energy
from .synth import (BiasedNoiseSpec, NoiseProfile, PhantomShape, SyntheticScene,
                    add_biased_noise, make_piecewise_image, make_texture,
                    make_translation_pair, make_two_level_phantom, make_two_motion_pair)
from .weights import (AdaptiveWeightConfig, InvalidResidualError, InvalidWeightError,
                      WeightMode, compute_lambda, entropy_penalty, lambda_lower_bound,
                      weight_stats)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveWeightConfig", "BiasedNoiseSpec", "ConvergenceTrace", "DegenerateRegionError",
    "DivergenceError", "FlowFormatError", "GaussianKernel", "ImageFormatError",
    "InvalidResidualError", "InvalidWeightError", "NoiseProfile", "PhantomShape",
    "PyramidConfig", "SegmentResult", "SolverConfig", "SsimConfig", "SyntheticScene",
    "TraceRecord", "WeightMode", "add_biased_noise", "angular_error", "compute_lambda",
    "convolve_gaussian", "denoise", "denoise_energy", "denoise_residual", "divergence",
    "endpoint_error", "entropy_penalty", "f_measure", "flow_level", "flow_pyramid",
    "flow_to_color", "gradient", "lambda_lower_bound", "linearize", "make_piecewise_image",
    "make_texture", "make_translation_pair", "make_two_level_phantom", "make_two_motion_pair",
    "project_box", "psnr", "read_flo", "read_image", "segment", "segment_energy",
    "shrink_vector2", "soft_shrink", "ssim", "warp_bilinear", "weight_stats", "write_flo",
    "write_image",
]
