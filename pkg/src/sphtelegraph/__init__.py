"""Telegraph equation on the unit sphere with isotropic Gaussian random initial data."""

__version__ = "0.1.0"

from .analysis import (
    CrossoverError,
    chebyshev_tail_probability,
    covariance,
    evolved_spectrum,
    monte_carlo_covariance,
    spatial_increment_mse,
    temporal_increment_norm,
    truncation_bound,
    truncation_error_exact,
    variance,
)
from .diffusion import diffusion_length, level_set_radius, point_source_density
from .field import (
    HarmonicCoefficients,
    ResolutionError,
    SphereGrid,
    analyze,
    evolve_coefficients,
    green_function,
    sample_coefficients,
    synthesize,
)
from .legendre import assoc_legendre_normalized, legendre_p, y_lm
from .modes import ModelParams, crossover_degree, evolution_factors, mode_factors
from .spectrum import (
    AngularSpectrum,
    SpectrumFormatError,
    bundled_spectrum_path,
    load_spectrum,
    planck_like_spectrum,
    power_law_spectrum,
    save_spectrum,
    validate_spectrum,
)

__all__ = [
    "__version__",
    "AngularSpectrum",
    "CrossoverError",
    "HarmonicCoefficients",
    "ModelParams",
    "ResolutionError",
    "SpectrumFormatError",
    "SphereGrid",
    "analyze",
    "assoc_legendre_normalized",
    "bundled_spectrum_path",
    "chebyshev_tail_probability",
    "covariance",
    "crossover_degree",
    "diffusion_length",
    "evolution_factors",
    "evolve_coefficients",
    "evolved_spectrum",
    "green_function",
    "legendre_p",
    "level_set_radius",
    "load_spectrum",
    "mode_factors",
    "monte_carlo_covariance",
    "planck_like_spectrum",
    "point_source_density",
    "power_law_spectrum",
    "sample_coefficients",
    "save_spectrum",
    "spatial_increment_mse",
    "synthesize",
    "temporal_increment_norm",
    "truncation_bound",
    "truncation_error_exact",
    "validate_spectrum",
    "variance",
    "y_lm",
]
