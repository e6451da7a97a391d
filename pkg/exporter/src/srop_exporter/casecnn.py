"""Small digit CNN for the blended-input experiments, plus its training loop.

The network is a classical two-conv/two-pool/two-fc MNIST-style classifier;
the second convolution's ReLU output (64 x 14 x 14) is the analysis tap.
Blended datasets are produced by the analysis toolkit's `sropkit synth`
command and consumed here purely through its output files.
"""

from __future__ import annotations

import json
import math
import struct
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .manifest import save_layer_npy, write_manifest
from .models import ExportError


class CaseCnn(nn.Module):
    def __init__(self) -> None:
        super().__init__()
        self.conv1 = nn.Conv2d(1, 32, kernel_size=3, padding=1)
        self.conv2 = nn.Conv2d(32, 64, kernel_size=3, padding=1)
        self.fc1 = nn.Linear(64 * 7 * 7, 128)
        self.fc2 = nn.Linear(128, 10)

    def features(self, x: torch.Tensor) -> torch.Tensor:
        """Activation tap: post-ReLU output of the last convolution (14x14)."""
        x = F.max_pool2d(F.relu(self.conv1(x)), 2)
        return F.relu(self.conv2(x))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = F.max_pool2d(self.features(x), 2)
        x = x.flatten(1)
        return self.fc2(F.relu(self.fc1(x)))


@dataclass
class TrainResult:
    model: CaseCnn
    test_accuracy: float
    epoch_losses: list[float]
    train_indices: np.ndarray
    test_indices: np.ndarray


def train_case_cnn(
    images: np.ndarray,
    labels: np.ndarray,
    *,
    epochs: int = 20,
    lr: float = 0.001,
    seed: int = 0,
    batch_size: int = 128,
    test_fraction: float = 0.2,
) -> TrainResult:
    """Train the classifier on (N, 28, 28) float images in [0, 1].

    A seeded permutation provides the train/test split; aborts with
    diagnostics if the loss diverges to NaN.
    """
    if images.ndim != 3 or images.shape[0] != labels.shape[0]:
        raise ExportError(f"bad dataset shapes: {images.shape} vs {labels.shape}")
    torch.manual_seed(seed)
    model = CaseCnn()
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(images))
    n_test = max(1, int(len(images) * test_fraction))
    test_idx, train_idx = order[:n_test], order[n_test:]
    x = torch.from_numpy(np.ascontiguousarray(images, dtype=np.float32)).unsqueeze(1)
    y = torch.from_numpy(np.ascontiguousarray(labels, dtype=np.int64))
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    model.train()
    losses = []
    for epoch in range(epochs):
        perm = torch.from_numpy(rng.permutation(train_idx))
        epoch_loss = 0.0
        batches = 0
        for start in range(0, len(perm), batch_size):
            idx = perm[start : start + batch_size]
            optimizer.zero_grad()
            loss = F.cross_entropy(model(x[idx]), y[idx])
            if not math.isfinite(loss.item()):
                raise ExportError(
                    f"training diverged: loss={loss.item()} at epoch {epoch}, "
                    f"batch {batches} (lr={lr}, seed={seed})"
                )
            loss.backward()
            optimizer.step()
            epoch_loss += loss.item()
            batches += 1
        losses.append(epoch_loss / max(batches, 1))
    model.eval()
    with torch.no_grad():
        predictions = model(x[test_idx]).argmax(dim=1)
        accuracy = float((predictions == y[test_idx]).float().mean())
    return TrainResult(model, accuracy, losses, train_idx, test_idx)


def dump_case_activations(
    result: TrainResult,
    images: np.ndarray,
    frog: np.ndarray,
    out_dir: Path,
    *,
    mode: str,
    w: float,
    seed: int,
    max_dump: int = 2000,
    batch_size: int = 256,
) -> Path:
    """Write last-conv activations for the test split and the object probe."""
    out_dir = Path(out_dir)
    model = result.model
    model.eval()
    dump_idx = result.test_indices[:max_dump]
    chunks = []
    with torch.no_grad():
        for start in range(0, len(dump_idx), batch_size):
            idx = dump_idx[start : start + batch_size]
            batch = torch.from_numpy(
                np.ascontiguousarray(images[idx], dtype=np.float32)
            ).unsqueeze(1)
            chunks.append(model.features(batch).numpy())
        probe = torch.from_numpy(
            np.ascontiguousarray(frog, dtype=np.float32)
        ).reshape(1, 1, *frog.shape)
        frog_features = model.features(probe).numpy()
    layers = []
    filename, shape = save_layer_npy(out_dir, "conv2", np.concatenate(chunks, axis=0))
    layers.append(("conv2", filename, shape))
    filename, shape = save_layer_npy(out_dir, "conv2_frog", frog_features)
    layers.append(("conv2_frog", filename, shape))
    return write_manifest(
        out_dir,
        model_name=f"case_cnn_{mode}_w{w}",
        weights_origin="pretrained",  # trained to convergence on the blend
        input_desc=f"{mode} w={w}: {len(dump_idx)} test digits + object probe, 28x28",
        seed=seed,
        layers=layers,
    )


def fallback_digit_idx(out_dir: Path, seed: int = 0) -> tuple[Path, Path]:
    """Bundled 8x8 handwritten digits upscaled to 28x28, as IDX files.

    Offline stand-in for the canonical digit corpus; callers see vanilla
    IDX files either way.
    """
    from sklearn.datasets import load_digits

    data = load_digits()
    images = torch.from_numpy(data.images.astype(np.float32) / 16.0)
    upscaled = F.interpolate(
        images.unsqueeze(1), size=28, mode="bilinear", align_corners=True
    ).squeeze(1)
    pixels = (upscaled.clamp(0, 1) * 255).round().to(torch.uint8).numpy()
    labels = data.target.astype(np.uint8)
    out_dir.mkdir(parents=True, exist_ok=True)
    images_path = out_dir / "digits-images.idx"
    labels_path = out_dir / "digits-labels.idx"
    n, rows, cols = pixels.shape
    images_path.write_bytes(
        struct.pack(">IIII", 0x00000803, n, rows, cols) + pixels.tobytes()
    )
    labels_path.write_bytes(struct.pack(">II", 0x00000801, n) + labels.tobytes())
    return images_path, labels_path


def synthetic_object_npy(path: Path, seed: int = 0) -> Path:
    """Deterministic smooth color patch standing in for the object image."""
    rng = np.random.default_rng(seed)
    coarse = torch.from_numpy(rng.random((1, 3, 4, 4)).astype(np.float32))
    smooth = F.interpolate(coarse, size=32, mode="bilinear", align_corners=True)
    img = (smooth.squeeze(0).permute(1, 2, 0).numpy() * 255).round().astype(np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, img)
    return path


def synth_dataset(
    mode: str,
    w: float,
    out_dir: Path,
    *,
    digits: Path | None = None,
    labels: Path | None = None,
    frog_npy: Path | None = None,
    seed: int = 0,
) -> Path:
    """Produce a blended dataset directory via the `sropkit synth` CLI.

    Missing inputs are filled with the bundled fallbacks; the blend itself
    always comes from the analysis toolkit so both packages share one
    definition of the CASE rules.
    """
    out_dir = Path(out_dir)
    staging = out_dir / "inputs"
    if digits is None or labels is None:
        digits, labels = fallback_digit_idx(staging, seed=seed)
    if frog_npy is None:
        frog_npy = synthetic_object_npy(staging / "object.npy", seed=seed)
    command = [
        "sropkit", "synth", mode, str(w),
        "--digits", str(digits),
        "--labels", str(labels),
        "--frog-npy", str(frog_npy),
        "--seed", str(seed),
        "--out", str(out_dir),
    ]
    proc = subprocess.run(command, capture_output=True, text=True)
    if proc.returncode != 0:
        raise ExportError(
            f"sropkit synth failed (exit {proc.returncode}): {proc.stderr.strip()}"
        )
    return out_dir


def run_traincase(
    mode: str,
    w: float,
    out_dir: Path,
    *,
    dataset_dir: Path | None = None,
    digits: Path | None = None,
    labels: Path | None = None,
    epochs: int = 20,
    lr: float = 0.001,
    seed: int = 0,
    max_dump: int = 2000,
) -> dict:
    """End-to-end CASE run: blend, train, evaluate, dump, record metrics."""
    out_dir = Path(out_dir)
    if dataset_dir is None:
        dataset_dir = synth_dataset(
            mode, w, out_dir / "dataset", digits=digits, labels=labels, seed=seed
        )
    dataset_dir = Path(dataset_dir)
    images = np.load(dataset_dir / "images.npy")
    labels_arr = np.load(dataset_dir / "labels.npy")
    frog_path = dataset_dir / "frog.npy"
    if not frog_path.exists():
        raise ExportError(f"dataset {dataset_dir} has no frog.npy probe image")
    frog = np.load(frog_path)
    result = train_case_cnn(
        images, labels_arr, epochs=epochs, lr=lr, seed=seed
    )
    dump_case_activations(
        result, images, frog, out_dir / "dump",
        mode=mode, w=w, seed=seed, max_dump=max_dump,
    )
    torch.save(result.model.state_dict(), out_dir / "case_cnn.pt")
    metrics = {
        "mode": mode,
        "w": w,
        "seed": seed,
        "epochs": epochs,
        "lr": lr,
        "test_accuracy": result.test_accuracy,
        "epoch_losses": result.epoch_losses,
        "train_samples": int(result.train_indices.size),
        "test_samples": int(result.test_indices.size),
        "dataset_dir": str(dataset_dir),
    }
    (out_dir / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
    return metrics
