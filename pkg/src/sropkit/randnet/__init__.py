"""Forward-only randomized CNN engine with named-layer activation taps."""

from .arch import (
    ArchitectureSpec,
    ForwardRunner,
    LayerSpec,
    benchmark_downscale,
    build_from_config,
    downscale_ladder,
    export_activations,
    run_profile,
    to_config_dict,
    validate_spec,
)
from .presets import build_preset, load_config, preset_names, write_all_configs

__all__ = [
    "ArchitectureSpec",
    "ForwardRunner",
    "LayerSpec",
    "benchmark_downscale",
    "build_from_config",
    "build_preset",
    "downscale_ladder",
    "export_activations",
    "load_config",
    "preset_names",
    "run_profile",
    "to_config_dict",
    "validate_spec",
    "write_all_configs",
]
