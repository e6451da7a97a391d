"""Natural-image corpus assembly from locally bundled photograph sets.

Profiling and baseline runs need directories of natural images as NPY
tensors.  This module crops fixed-size patches from the photographs bundled
with scikit-learn and scikit-image (no downloads), which is enough to drive
the full analysis pipeline offline.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ParameterError
from .tensorio import NpyTensor, save_npy

_SKIMAGE_NAMES = (
    "astronaut",
    "coffee",
    "chelsea",
    "rocket",
    "retina",
    "hubble_deep_field",
)


def _source_photos() -> list[np.ndarray]:
    photos: list[np.ndarray] = []
    try:
        from sklearn.datasets import load_sample_images

        for img in load_sample_images().images:
            photos.append(np.asarray(img, dtype=np.float32) / np.float32(255.0))
    except ImportError:
        pass
    try:
        import skimage.data as skd

        for name in _SKIMAGE_NAMES:
            try:
                arr = getattr(skd, name)()
            except (AttributeError, OSError):
                continue
            if arr.ndim == 3 and arr.shape[2] >= 3 and arr.dtype == np.uint8:
                photos.append(
                    np.asarray(arr[:, :, :3], dtype=np.float32) / np.float32(255.0)
                )
    except ImportError:
        pass
    if not photos:
        raise ParameterError(
            "no bundled photographs available; install scikit-learn or scikit-image"
        )
    return photos


def natural_images(count: int = 100, size: int = 224, seed: int = 0) -> np.ndarray:
    """``count`` RGB crops of bundled photographs as (count, 3, size, size) float32."""
    if count < 1 or size < 8:
        raise ParameterError("count must be >= 1 and size >= 8")
    photos = [p for p in _source_photos() if p.shape[0] >= size and p.shape[1] >= size]
    if not photos:
        raise ParameterError(f"no bundled photograph is at least {size} x {size}")
    rng = np.random.default_rng(seed)
    out = np.empty((count, 3, size, size), dtype=np.float32)
    for i in range(count):
        photo = photos[i % len(photos)]
        y = int(rng.integers(0, photo.shape[0] - size + 1))
        x = int(rng.integers(0, photo.shape[1] - size + 1))
        out[i] = np.transpose(photo[y : y + size, x : x + size, :], (2, 0, 1))
    return out


def write_corpus(out_dir: str | Path, count: int = 100, size: int = 224, seed: int = 0) -> list[Path]:
    """Materialize the corpus as one NPY file per image (img_0000.npy, ...)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    images = natural_images(count=count, size=size, seed=seed)
    paths = []
    for i, img in enumerate(images):
        path = out_dir / f"img_{i:04d}.npy"
        save_npy(path, NpyTensor.from_array(img))
        paths.append(path)
    return paths
