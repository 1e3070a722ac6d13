"""Spatially extended Unruh-DeWitt detectors.

Frequency windows of extended detector profiles, vacuum and one-particle
Wightman functions, and transition rates for inertial and uniformly
accelerated detectors, with closed forms where they exist and numeric
quadrature paths to check them.
"""
from .errors import (ConfigError, DistributionalProfileError, InfraredDivergenceError,
                     KernelDegeneracyError, QuadratureError, UDWError, UnsupportedOrderError)
from .kernels import BACKEND
from .specfun import (EPS_IR, HERMITE_MAX_ORDER, BesselEvalReport, bessel_k_imag, heaviside, hermite,
                      oscillator_wavefunction, planck_factor)
from .quadrature import (IntegrandSpec, QuadratureResult, fourier_window_1d, integrate_adaptive,
                         oscillatory_halfline)
from .profiles import (DoubleGaussian, FrequencyWindow, HermiteCoupling, HermiteFit, PointLike,
                       RindlerDoubleGaussian, SpatialProfile, evaluate_profile, hermite_fit_report,
                       minkowski_window, rindler_window_1p1, rindler_window_3p1)
from .detector import (GaussianPacket, Inertial, Massive3p1, Massless1p1, MinkowskiParticle, ModelSpec,
                       RateResult, UniformlyAccelerated, UnruhParticle, Vacuum, packet_overlap_I,
                       particle_rate, rindler_norm, unruh_weights, vacuum_rate, vacuum_rate_accelerated,
                       vacuum_rate_inertial, vacuum_rate_numeric, wightman_vacuum)
from .config import ExperimentConfig, parse_config
from .sweep import figure_preset, run_sweep

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConfigError", "DistributionalProfileError", "InfraredDivergenceError",
    "KernelDegeneracyError", "QuadratureError", "UDWError", "UnsupportedOrderError",
    "EPS_IR", "HERMITE_MAX_ORDER", "BesselEvalReport", "bessel_k_imag", "heaviside", "hermite",
    "oscillator_wavefunction", "planck_factor",
    "IntegrandSpec", "QuadratureResult", "fourier_window_1d", "integrate_adaptive", "oscillatory_halfline",
    "DoubleGaussian", "FrequencyWindow", "HermiteCoupling", "HermiteFit", "PointLike",
    "RindlerDoubleGaussian", "SpatialProfile", "evaluate_profile", "hermite_fit_report",
    "minkowski_window", "rindler_window_1p1", "rindler_window_3p1",
    "GaussianPacket", "Inertial", "Massive3p1", "Massless1p1", "MinkowskiParticle", "ModelSpec",
    "RateResult", "UniformlyAccelerated", "UnruhParticle", "Vacuum", "packet_overlap_I",
    "particle_rate", "rindler_norm", "unruh_weights", "vacuum_rate", "vacuum_rate_accelerated",
    "vacuum_rate_inertial", "vacuum_rate_numeric", "wightman_vacuum",
    "ExperimentConfig", "parse_config", "figure_preset", "run_sweep",
]
