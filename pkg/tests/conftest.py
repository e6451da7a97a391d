"""Shared fixtures: synthetic datasets and the bundled natural-image corpus."""

from __future__ import annotations

import struct

import numpy as np
import pytest


def make_idx_pair(images: np.ndarray, labels: np.ndarray) -> tuple[bytes, bytes]:
    """Serialize u8 images/labels into the big-endian IDX wire format."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, rows, cols = images.shape
    image_bytes = struct.pack(">IIII", 0x00000803, n, rows, cols) + images.tobytes()
    label_bytes = struct.pack(">II", 0x00000801, n) + labels.tobytes()
    return image_bytes, label_bytes


def make_cifar_batch(images_hwc: np.ndarray, labels: np.ndarray) -> bytes:
    """Serialize u8 (N, 32, 32, 3) images into CIFAR-10 binary records."""
    images_hwc = np.asarray(images_hwc, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    out = bytearray()
    for img, label in zip(images_hwc, labels):
        out.append(int(label))
        out += np.transpose(img, (2, 0, 1)).tobytes()  # R plane, G plane, B plane
    return bytes(out)


@pytest.fixture(scope="session")
def digit_set():
    """Deterministic toy digit corpus: 60 u8 28x28 images, labels 0..9."""
    rng = np.random.default_rng(11)
    images = rng.integers(0, 256, size=(60, 28, 28), dtype=np.uint8)
    labels = np.tile(np.arange(10, dtype=np.uint8), 6)
    return images, labels


@pytest.fixture(scope="session")
def idx_files(digit_set):
    return make_idx_pair(*digit_set)


@pytest.fixture(scope="session")
def cifar_batch_bytes():
    rng = np.random.default_rng(5)
    images = rng.integers(0, 256, size=(30, 32, 32, 3), dtype=np.uint8)
    labels = np.tile(np.arange(10, dtype=np.uint8), 3)
    return make_cifar_batch(images, labels)


@pytest.fixture(scope="session")
def corpus100():
    """100 natural 3x224x224 crops from bundled photographs."""
    from sropkit.corpus import natural_images

    return natural_images(count=100, size=224, seed=7)


@pytest.fixture(scope="session")
def corpus_small():
    """A handful of natural 64x64 crops for quick spectral checks."""
    from sropkit.corpus import natural_images

    return natural_images(count=6, size=64, seed=3)
