"""Dump-side writer for the NPY + manifest interchange contract.

The manifest schema (schema_version 1) is the analysis toolkit's documented
format: model_name, weights_origin, input_desc, seed, and a layer list of
{name, file, shape} with files relative to the manifest.  This module is
deliberately self-contained; the contract is the files, not a Python API.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def _atomic_write(path: Path, payload: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_layer_npy(out_dir: Path, name: str, data: np.ndarray) -> tuple[str, tuple[int, ...]]:
    """Write one float32 activation dump; returns (relative file, shape)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    filename = name.replace("/", "_").replace(".", "_") + ".npy"
    arr = np.ascontiguousarray(data, dtype=np.float32)
    buf = tempfile.NamedTemporaryFile(dir=out_dir, suffix=".npy", delete=False)
    try:
        np.save(buf, arr)
        buf.close()
        os.replace(buf.name, out_dir / filename)
    except BaseException:
        buf.close()
        if os.path.exists(buf.name):
            os.unlink(buf.name)
        raise
    return filename, tuple(arr.shape)


def write_manifest(
    out_dir: Path,
    model_name: str,
    weights_origin: str,
    input_desc: str,
    seed: int,
    layers: list[tuple[str, str, tuple[int, ...]]],
) -> Path:
    """Write manifest.json last, after all layer files exist."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "model_name": model_name,
        "weights_origin": weights_origin,
        "input_desc": input_desc,
        "seed": seed,
        "layers": [
            {"name": name, "file": file, "shape": list(shape)}
            for name, file, shape in layers
        ],
    }
    path = out_dir / "manifest.json"
    _atomic_write(path, (json.dumps(doc, indent=2) + "\n").encode("utf-8"))
    return path
