"""sropkit: spectral roll-off point analysis for signals, images, and feature maps."""

from .errors import (
    ArchitectureError,
    BadMagicError,
    DegenerateSampleError,
    FormatError,
    ManifestError,
    ParameterError,
    ShapeMismatchError,
    SropkitError,
    TooSmallError,
    UnsupportedDtypeError,
    ZeroEnergyError,
)
from .spectral import (
    DEFAULT_KAPPA,
    FeatureMapTensor,
    Spectrum1D,
    Spectrum2D,
    SropValue,
    normalize_srop,
    power_spectrum_1d,
    power_spectrum_2d,
    radial_bin_count,
    radial_profile,
    srop_2d,
    srop_feature_map,
    srop_from_spectrum,
)
from .stats import (
    KdeCurve,
    SropReport,
    kde_estimate,
    layer_stats,
    profile_series,
    sample_scalarize,
    silverman_bandwidth,
)

__version__ = "0.1.0"

__all__ = [
    "ArchitectureError",
    "BadMagicError",
    "DEFAULT_KAPPA",
    "DegenerateSampleError",
    "FeatureMapTensor",
    "FormatError",
    "KdeCurve",
    "ManifestError",
    "ParameterError",
    "ShapeMismatchError",
    "Spectrum1D",
    "Spectrum2D",
    "SropReport",
    "SropValue",
    "SropkitError",
    "TooSmallError",
    "UnsupportedDtypeError",
    "ZeroEnergyError",
    "kde_estimate",
    "layer_stats",
    "normalize_srop",
    "power_spectrum_1d",
    "power_spectrum_2d",
    "profile_series",
    "radial_bin_count",
    "radial_profile",
    "sample_scalarize",
    "silverman_bandwidth",
    "srop_2d",
    "srop_feature_map",
    "srop_from_spectrum",
]
