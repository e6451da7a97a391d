"""Blended everyday-object + digit dataset generation (CASE I / CASE II).

CASE I blends the object image only into digit-"1" samples, so the object
pattern predicts the label; CASE II blends it into every sample, so the
object pattern is label-independent noise.  The blend weight ``w`` sets the
object's share of each pixel.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .tensorio import (
    LabeledImageSet,
    NpyTensor,
    atomic_write_text,
    filter_by_label,
    save_npy,
)

CASE_I = "CASE_I"
CASE_II = "CASE_II"
TARGET_DIGIT = 1
FROG_LABEL = 6  # CIFAR-10 class index for the canonical object image


@dataclass
class BlendSpec:
    """Parameters of one blended-dataset generation run."""

    mode: str  # CASE_I | CASE_II
    w: float
    frog_image: np.ndarray  # 32 x 32 x 3 uint8 source object image
    digit_source: LabeledImageSet
    seed: int = 0
    frog_origin: str = "unspecified"

    def __post_init__(self) -> None:
        if self.mode not in (CASE_I, CASE_II):
            raise ParameterError(f"mode must be {CASE_I} or {CASE_II}")
        if not (0.0 <= self.w <= 1.0):
            raise ParameterError("w must lie in [0, 1]")
        self.frog_image = np.asarray(self.frog_image)
        if self.frog_image.ndim != 3 or self.frog_image.shape[2] != 3:
            raise ParameterError("frog_image must be (h, w, 3)")
        if len(self.digit_source) == 0:
            raise ParameterError("digit source is empty")


def resize_bilinear(img, target: tuple[int, int] = (28, 28)) -> np.ndarray:
    """Edge-clamped bilinear resample of (h, w) or (h, w, c) to ``target``."""
    x = np.asarray(img, dtype=np.float64)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[:, :, None]
    if x.ndim != 3:
        raise ParameterError("image must be (h, w) or (h, w, c)")
    h, w, _ = x.shape
    if h < 2 or w < 2:
        raise ParameterError("source must be at least 2 x 2")
    th, tw = target
    if th < 1 or tw < 1:
        raise ParameterError("target must be positive")

    def axis_coords(src: int, dst: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if dst == 1:
            pos = np.zeros(1)
        else:
            pos = np.arange(dst) * (src - 1) / (dst - 1)
        lo = np.clip(np.floor(pos).astype(int), 0, src - 1)
        hi = np.clip(lo + 1, 0, src - 1)
        frac = pos - lo
        return lo, hi, frac

    ylo, yhi, fy = axis_coords(h, th)
    xlo, xhi, fx = axis_coords(w, tw)
    top = x[ylo][:, xlo] * (1 - fx)[None, :, None] + x[ylo][:, xhi] * fx[None, :, None]
    bot = x[yhi][:, xlo] * (1 - fx)[None, :, None] + x[yhi][:, xhi] * fx[None, :, None]
    out = top * (1 - fy)[:, None, None] + bot * fy[:, None, None]
    return out[:, :, 0] if squeeze else out


def to_grayscale(img) -> np.ndarray:
    """Rec.601 luminance: 0.299 R + 0.587 G + 0.114 B."""
    x = np.asarray(img, dtype=np.float64)
    if x.ndim != 3 or x.shape[2] != 3:
        raise ParameterError("expected (h, w, 3)")
    return x @ np.array([0.299, 0.587, 0.114])


def blend_case(digit: np.ndarray, frog_gray: np.ndarray, w: float) -> np.ndarray:
    """Pixelwise convex blend ``w * frog + (1 - w) * digit`` on [0, 1] images."""
    if not (0.0 <= w <= 1.0):
        raise ParameterError("w must lie in [0, 1]")
    d = np.asarray(digit, dtype=np.float64)
    f = np.asarray(frog_gray, dtype=np.float64)
    if d.shape != f.shape:
        raise ParameterError(f"shape mismatch: {d.shape} vs {f.shape}")
    for name, arr in (("digit", d), ("frog", f)):
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ParameterError(f"{name} pixels must lie in [0, 1]")
    return w * f + (1.0 - w) * d


def prepare_frog(frog_image: np.ndarray, size: int = 28) -> np.ndarray:
    """Object image -> grayscale [0, 1] at the digit resolution."""
    resized = resize_bilinear(np.asarray(frog_image, dtype=np.float64) / 255.0, (size, size))
    return np.clip(to_grayscale(resized), 0.0, 1.0)


def frog_from_cifar(batch: LabeledImageSet, index: int = 0) -> tuple[np.ndarray, str]:
    """The ``index``-th frog-class image of a CIFAR batch, with provenance text."""
    frogs = filter_by_label(batch, FROG_LABEL)
    if len(frogs) <= index:
        raise ParameterError(f"batch has only {len(frogs)} frog images")
    return frogs.images[index], f"cifar10:label{FROG_LABEL}:index{index}"


def generate_dataset(spec: BlendSpec) -> tuple[LabeledImageSet, dict]:
    """Blend per the CASE rule; labels pass through unchanged.

    Returns float32 images in [0, 1] plus a provenance record identifying
    the object source, blend weight, mode, and seed.
    """
    digits = np.asarray(spec.digit_source.images)
    labels = np.asarray(spec.digit_source.labels)
    if digits.ndim != 3:
        raise ParameterError("digit images must be (n, h, w)")
    size = digits.shape[1]
    frog = prepare_frog(spec.frog_image, size)
    base = (
        digits.astype(np.float64) / 255.0
        if digits.dtype == np.uint8
        else digits.astype(np.float64)
    )
    if base.min() < 0.0 or base.max() > 1.0:
        raise ParameterError("float digit images must already lie in [0, 1]")
    out = base.copy()
    if spec.mode == CASE_II:
        blend_mask = np.ones(len(labels), dtype=bool)
    else:
        blend_mask = labels == TARGET_DIGIT
    out[blend_mask] = spec.w * frog[None, :, :] + (1.0 - spec.w) * base[blend_mask]
    provenance = {
        "mode": spec.mode,
        "w": spec.w,
        "seed": spec.seed,
        "frog_origin": spec.frog_origin,
        "frog_sha256": hashlib.sha256(
            np.ascontiguousarray(spec.frog_image).tobytes()
        ).hexdigest(),
        "blended_samples": int(blend_mask.sum()),
        "total_samples": int(len(labels)),
    }
    return (
        LabeledImageSet(images=out.astype(np.float32), labels=labels.astype(np.uint8)),
        provenance,
    )


def emit_dataset(
    dataset: LabeledImageSet,
    provenance: dict,
    out_dir: str | Path,
    frog_probe: np.ndarray | None = None,
) -> dict:
    """Write images.npy (float32), labels.npy (u8), and provenance.json.

    When given, the prepared grayscale object image is stored alongside as
    frog.npy so the directory is self-contained for probe runs.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_npy(out_dir / "images.npy", NpyTensor.from_array(dataset.images))
    save_npy(out_dir / "labels.npy", NpyTensor.from_array(dataset.labels))
    atomic_write_text(out_dir / "provenance.json", json.dumps(provenance, indent=2) + "\n")
    paths = {
        "images": str(out_dir / "images.npy"),
        "labels": str(out_dir / "labels.npy"),
        "provenance": str(out_dir / "provenance.json"),
    }
    if frog_probe is not None:
        save_npy(out_dir / "frog.npy", NpyTensor.from_array(frog_probe.astype(np.float32)))
        paths["frog"] = str(out_dir / "frog.npy")
    return paths
