"""Aggregation of per-kernel roll-off values into layer statistics and densities."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSampleError, ParameterError

PROFILE_CSV_HEADER = (
    "layer",
    "resolution",
    "mean",
    "median",
    "q1",
    "q3",
    "std",
    "log_mean",
    "skipped",
)


@dataclass
class SropReport:
    """Distribution summary of per-kernel roll-off values for one layer.

    Quartiles use linear interpolation between closest ranks; ``std`` is the
    population standard deviation.  All statistics are recomputable from
    ``kernel_srops``.
    """

    layer_name: str
    resolution: int
    kernel_srops: np.ndarray
    mean: float
    median: float
    q1: float
    q3: float
    std: float
    skipped_channels: int = 0


def layer_stats(
    srops, layer_name: str, resolution: int, skipped_channels: int = 0
) -> SropReport:
    """Summarize a layer's per-kernel roll-off values into an SropReport."""
    values = np.asarray(srops, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ParameterError("need at least one non-missing roll-off value")
    if not np.all(np.isfinite(values)):
        raise ParameterError("roll-off values must be finite")
    q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0])
    return SropReport(
        layer_name=layer_name,
        resolution=int(resolution),
        kernel_srops=values,
        mean=float(values.mean()),
        median=float(median),
        q1=float(q1),
        q3=float(q3),
        std=float(values.std()),
        skipped_channels=int(skipped_channels),
    )


@dataclass
class KdeCurve:
    """Gaussian-kernel density over a uniform grid on [0, 1].

    The kernel mass is reflected at both support edges so the density
    integrates to ~1 inside [0, 1] even for boundary-concentrated samples.
    """

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def peaks(self) -> np.ndarray:
        """Grid locations of local maxima of the density."""
        d = self.density
        n = d.size
        idx = [
            i
            for i in range(n)
            if (i == 0 or d[i] > d[i - 1]) and (i == n - 1 or d[i] > d[i + 1])
        ]
        return self.grid[idx]


def silverman_bandwidth(values: np.ndarray) -> float:
    """Rule-of-thumb Gaussian bandwidth: 1.06 * sigma * n^(-1/5)."""
    sigma = float(np.std(values, ddof=1))
    if sigma <= 0.0:
        raise DegenerateSampleError("bandwidth undefined for constant samples")
    return 1.06 * sigma * values.size ** (-0.2)


def kde_estimate(values, grid_points: int = 256) -> KdeCurve:
    """Gaussian kernel density of roll-off values on a uniform [0, 1] grid."""
    x = np.asarray(values, dtype=np.float64).ravel()
    if grid_points < 16:
        raise ParameterError("grid_points must be at least 16")
    if np.unique(x).size < 2:
        raise DegenerateSampleError("need at least two distinct values")
    h = silverman_bandwidth(x)
    grid = np.linspace(0.0, 1.0, grid_points)
    density = np.zeros(grid_points, dtype=np.float64)
    norm = 1.0 / (x.size * h * math.sqrt(2.0 * math.pi))
    # reflect samples at 0 and 1 so boundary mass stays inside the support
    for block_start in range(0, x.size, 1024):
        block = x[block_start : block_start + 1024]
        for centers in (block, -block, 2.0 - block):
            z = (grid[:, None] - centers[None, :]) / h
            density += np.exp(-0.5 * z * z).sum(axis=1)
    density *= norm
    return KdeCurve(grid=grid, density=density, bandwidth=h)


def sample_scalarize(per_sample_kernel_srops, mode: str = "per_sample_mean") -> np.ndarray:
    """Reduce a (samples x kernels) matrix to one scalar sequence for a KDE.

    ``per_sample_mean`` (default) averages each sample's kernels; ``pooled``
    flattens all kernel values into a single sample set.
    """
    matrix = np.asarray(per_sample_kernel_srops, dtype=np.float64)
    if matrix.ndim == 1:
        return matrix
    if matrix.ndim != 2:
        raise ParameterError("expected a 1-D or 2-D value array")
    if mode == "per_sample_mean":
        return matrix.mean(axis=1)
    if mode == "pooled":
        return matrix.ravel()
    raise ParameterError("mode must be 'per_sample_mean' or 'pooled'")


def profile_series(reports) -> list[dict]:
    """Depth-ordered table rows for a sequence of layer reports.

    Adds a natural-log mean column for log-scale depth profiles.  Layer
    names must be unique; input order is preserved.
    """
    reports = list(reports)
    if not reports:
        raise ParameterError("profile needs at least one report")
    names = [r.layer_name for r in reports]
    if len(set(names)) != len(names):
        raise ParameterError("duplicate layer names in profile")
    rows = []
    for r in reports:
        rows.append(
            {
                "layer": r.layer_name,
                "resolution": r.resolution,
                "mean": r.mean,
                "median": r.median,
                "q1": r.q1,
                "q3": r.q3,
                "std": r.std,
                "log_mean": math.log(r.mean) if r.mean > 0 else float("-inf"),
                "skipped": r.skipped_channels,
            }
        )
    return rows


def profile_csv_text(rows: list[dict]) -> str:
    """Render profile rows as CSV (LF endings, '.' decimals, repr floats)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PROFILE_CSV_HEADER)
    for row in rows:
        writer.writerow(
            [
                row["layer"],
                row["resolution"],
                repr(float(row["mean"])),
                repr(float(row["median"])),
                repr(float(row["q1"])),
                repr(float(row["q3"])),
                repr(float(row["std"])),
                repr(float(row["log_mean"])),
                row["skipped"],
            ]
        )
    return buf.getvalue()


def parse_profile_csv(text: str) -> list[dict]:
    """Inverse of :func:`profile_csv_text`."""
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != PROFILE_CSV_HEADER:
        raise ParameterError(f"unexpected CSV header: {header!r}")
    rows = []
    for rec in reader:
        rows.append(
            {
                "layer": rec[0],
                "resolution": int(rec[1]),
                "mean": float(rec[2]),
                "median": float(rec[3]),
                "q1": float(rec[4]),
                "q3": float(rec[5]),
                "std": float(rec[6]),
                "log_mean": float(rec[7]),
                "skipped": int(rec[8]),
            }
        )
    return rows
