"""Gaussian path integrals on discretized path spaces."""

from .grid_paths import (DIFFUSIVE, OSCILLATORY, BoundaryFamily, DiscretePath, MetricMatrix, Regime, TimeGrid,
                         concat_paths, quadratic_variation, scale_path)
from .greens import GreenFunction, discretize_kernel, green_closed_form, verify_inverse
from .gaussian_mc import PathFunctional, PathSampler, expectation, feynman_kac, sample_paths
from .driven_flow import DrivenSystem, FlowResult, develop, integrate, multistep_sigma
from .classical_jacobi import ActionModel, JacobiBlocks, jacobi_blocks, jacobi_green, solve_classical
from .determinants import DetResult, det_by_jacobi, det_by_limit, det_by_log_derivative, morse_index
from .propagators import (AbConfig, Constants, WkbAmplitude, ab_polar_inversion, ab_winding_sum, free_amplitude,
                          wkb_momentum_to_position, wkb_point_to_point)

__version__ = "0.1.0"
