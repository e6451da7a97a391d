"""Shared exporter fixtures: deterministic NPY image directories."""

from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture(scope="session")
def image_dir(tmp_path_factory):
    """Three deterministic (3, 224, 224) float images on disk."""
    d = tmp_path_factory.mktemp("imgs")
    rng = np.random.default_rng(0)
    base = rng.random((3, 224, 224)).astype(np.float32)
    for i in range(3):
        ramp = np.linspace(0, 1, 224, dtype=np.float32)
        img = np.clip(0.6 * base + 0.4 * ramp[None, None, :] * (i + 1) / 3.0, 0, 1)
        np.save(d / f"img_{i}.npy", img)
    return d
