"""
spinlet
Spin-weighted spherical harmonics, spin needlet frames and Gaussian spin random fields.
"""

__version__ = '1.0.0'

from .geometry import Partition, QuadratureGrid, Rotation, SpherePoint, build_partition, build_quadrature
from .harmonics import (
    GridField,
    SpinCoefficients,
    analysis,
    eval_sylm,
    eval_sylm_direct,
    spin_lower,
    spin_raise,
    synthesis,
)
from .wigner import eval_sylm_chart, projection_kernel, rotate_coefficients, wigner_D
from .filters import FilterSpec, build_filter, daubechies_bounds
from .frame import (
    NeedletFrame,
    WaveletCoefficients,
    apply_Q,
    apply_S,
    build_frame,
    frame_bound_estimate,
    gap_sweep,
    localization_probe,
    needlet_kernel,
    wavelet_coefficients,
)
from .fields import PowerSpectrum, isotropy_diagnostic, power_law_spectrum, sample_ensemble, sample_field
from .stats import clt_experiment, gamma_hat, gamma_tilde, rejection_rate, s_statistic, uncorrelation_experiment
from .parser import ExperimentConfig, load_config
from .errors import SpinletError
from .console import console, logger

__all__ = [
    'Partition',
    'QuadratureGrid',
    'Rotation',
    'SpherePoint',
    'build_partition',
    'build_quadrature',
    'GridField',
    'SpinCoefficients',
    'analysis',
    'eval_sylm',
    'eval_sylm_direct',
    'spin_lower',
    'spin_raise',
    'synthesis',
    'eval_sylm_chart',
    'projection_kernel',
    'rotate_coefficients',
    'wigner_D',
    'FilterSpec',
    'build_filter',
    'daubechies_bounds',
    'NeedletFrame',
    'WaveletCoefficients',
    'apply_Q',
    'apply_S',
    'build_frame',
    'frame_bound_estimate',
    'gap_sweep',
    'localization_probe',
    'needlet_kernel',
    'wavelet_coefficients',
    'PowerSpectrum',
    'isotropy_diagnostic',
    'power_law_spectrum',
    'sample_ensemble',
    'sample_field',
    'clt_experiment',
    'gamma_hat',
    'gamma_tilde',
    'rejection_rate',
    's_statistic',
    'uncorrelation_experiment',
    'ExperimentConfig',
    'load_config',
    'SpinletError',
    'console',
    'logger',
]
