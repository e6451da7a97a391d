"""Batched activation export at named tap points."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .manifest import save_layer_npy, write_manifest
from .models import IMAGENET_MEAN, IMAGENET_STD, ExportError, build_model, tap_table


@dataclass
class ExportJob:
    """One activation-dump run over a directory of prepared images."""

    model_id: str
    out_dir: Path
    image_paths: list[Path] = field(default_factory=list)
    weights: str = "random"  # 'pretrained' | 'random'
    seed: int = 0
    taps: list[str] | None = None  # default: the full block-row tap set
    batch_size: int = 8


def load_image_batch(paths: list[Path]) -> torch.Tensor:
    """Stack (3, 224, 224) float NPY images and apply channel normalization."""
    images = []
    for path in paths:
        arr = np.load(path)
        if arr.ndim != 3 or arr.shape[0] != 3:
            raise ExportError(f"{path}: expected a (3, n, n) image, got {arr.shape}")
        images.append(np.asarray(arr, dtype=np.float32))
    batch = torch.from_numpy(np.stack(images))
    mean = torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1)
    std = torch.tensor(IMAGENET_STD).view(1, 3, 1, 1)
    return (batch - mean) / std


def export_activations(job: ExportJob) -> Path:
    """Dump per-tap activations as float32 NPY plus a manifest.

    The manifest is written only after every layer file is complete, so a
    failed job never leaves a readable-but-partial dump behind.
    """
    if not job.image_paths:
        raise ExportError("job has no input images")
    table = tap_table(job.model_id)
    wanted = list(table) if job.taps is None else list(job.taps)
    for tap in wanted:
        if tap not in table:
            raise ExportError(f"unknown tap {tap!r} for {job.model_id}; "
                              f"available: {list(table)}")
    model, _, origin = build_model(job.model_id, job.weights, job.seed)
    named = dict(model.named_modules())

    captured: dict[str, list[np.ndarray]] = {tap: [] for tap in wanted}
    hooks = []
    try:
        for tap in wanted:
            def hook(module, inputs, output, tap=tap):
                captured[tap].append(output.detach().to(torch.float32).numpy())

            hooks.append(named[table[tap]].register_forward_hook(hook))
        with torch.no_grad():
            for start in range(0, len(job.image_paths), job.batch_size):
                batch = load_image_batch(job.image_paths[start : start + job.batch_size])
                model(batch)
    finally:
        for handle in hooks:
            handle.remove()

    out_dir = Path(job.out_dir)
    layers = []
    for tap in wanted:
        data = np.concatenate(captured[tap], axis=0)
        filename, shape = save_layer_npy(out_dir, tap, data)
        layers.append((tap, filename, shape))
    return write_manifest(
        out_dir,
        model_name=job.model_id,
        weights_origin=origin,
        input_desc=f"{len(job.image_paths)} images, 224x224, ImageNet normalization",
        seed=job.seed,
        layers=layers,
    )
