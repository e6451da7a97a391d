"""srop-exporter: torchvision activation dumps and CASE-CNN training runs.

Outputs are NPY files plus a manifest.json consumed by the sropkit CLI;
this package never imports the analysis toolkit's Python API.
"""

from .export import ExportJob, export_activations
from .models import ExportError, build_model, model_ids, tap_table

__version__ = "0.1.0"

__all__ = [
    "ExportError",
    "ExportJob",
    "build_model",
    "export_activations",
    "model_ids",
    "tap_table",
]
