"""Architecture graphs, config validation, and the randomized forward engine."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .._parallel import map_ordered
from ..errors import ArchitectureError, ParameterError
from ..spectral import DEFAULT_KAPPA, FeatureMapTensor, srop_feature_map
from ..stats import SropReport, layer_stats
from . import layers as L

_OPS = (
    "conv",
    "maxpool",
    "avgpool",
    "blurpool",
    "batchnorm",
    "relu",
    "add",
    "concat",
    "avgpool_global",
)
_CONV_KERNELS = (1, 3, 5, 7, 11)
_CONV_STRIDES = (1, 2, 4)
_POOL_KERNELS = (2, 3)

INPUT_NAME = "input"


@dataclass
class LayerSpec:
    """One graph node: an op applied to one or more named predecessors.

    ``inputs`` defaults to the immediately preceding layer (or the network
    input for the first layer).
    """

    name: str
    op: str
    params: dict = field(default_factory=dict)
    inputs: list[str] | None = None


@dataclass
class ArchitectureSpec:
    """Validated ordered layer graph plus the tap names to capture."""

    name: str
    layers: list[LayerSpec]
    taps: list[str]
    input_size: int = 224
    input_channels: int = 3
    # per-layer (channels, size) computed during validation
    shapes: dict[str, tuple[int, int]] = field(default_factory=dict)

    def tap_resolutions(self) -> list[int]:
        return [self.shapes[t][1] for t in self.taps]


def _expect_int(params: dict, key: str, layer: str, allowed=None, default=None):
    if key not in params:
        if default is not None:
            return default
        raise ArchitectureError(f"layer {layer!r}: missing param {key!r}")
    value = params[key]
    if not isinstance(value, int):
        raise ArchitectureError(f"layer {layer!r}: param {key!r} must be an integer")
    if allowed is not None and value not in allowed:
        raise ArchitectureError(
            f"layer {layer!r}: {key}={value} not in allowed set {allowed}"
        )
    return value


def _out_size(n: int, kernel: int, stride: int, padding: int, layer: str) -> int:
    out = (n + 2 * padding - kernel) // stride + 1
    if out < 1:
        raise ArchitectureError(f"layer {layer!r}: output size collapses to {out}")
    return out


def validate_spec(spec: ArchitectureSpec) -> ArchitectureSpec:
    """Check ops, params, references, and chain shapes through the graph."""
    if spec.input_size < 1 or spec.input_channels < 1:
        raise ArchitectureError("input_size and input_channels must be positive")
    shapes: dict[str, tuple[int, int]] = {
        INPUT_NAME: (spec.input_channels, spec.input_size)
    }
    previous = INPUT_NAME
    for layer in spec.layers:
        if layer.name in shapes:
            raise ArchitectureError(f"duplicate layer name {layer.name!r}")
        if layer.op not in _OPS:
            raise ArchitectureError(f"layer {layer.name!r}: unknown op {layer.op!r}")
        inputs = layer.inputs if layer.inputs is not None else [previous]
        if not inputs:
            raise ArchitectureError(f"layer {layer.name!r}: no inputs")
        for ref in inputs:
            if ref not in shapes:
                raise ArchitectureError(
                    f"layer {layer.name!r}: dangling reference {ref!r}"
                )
        in_shapes = [shapes[ref] for ref in inputs]
        c, n = in_shapes[0]
        p = layer.params
        if layer.op == "conv":
            k = _expect_int(p, "kernel", layer.name, _CONV_KERNELS)
            s = _expect_int(p, "stride", layer.name, _CONV_STRIDES)
            pad = _expect_int(p, "padding", layer.name, default=0)
            c_out = _expect_int(p, "out_channels", layer.name)
            if c_out < 1:
                raise ArchitectureError(f"layer {layer.name!r}: out_channels < 1")
            out = (c_out, _out_size(n, k, s, pad, layer.name))
        elif layer.op == "maxpool":
            k = _expect_int(p, "kernel", layer.name, _POOL_KERNELS)
            s = _expect_int(p, "stride", layer.name, (2,))
            pad = _expect_int(p, "padding", layer.name, default=0)
            out = (c, _out_size(n, k, s, pad, layer.name))
        elif layer.op == "avgpool":
            k = _expect_int(p, "kernel", layer.name, (2,))
            s = _expect_int(p, "stride", layer.name, (2,))
            out = (c, _out_size(n, k, s, 0, layer.name))
        elif layer.op == "blurpool":
            dk = p.get("dense_max_kernel")
            if dk is not None:
                dk = _expect_int(p, "dense_max_kernel", layer.name, _POOL_KERNELS)
                dp = _expect_int(p, "dense_max_padding", layer.name, default=0)
                n = n + 2 * dp - dk + 1
                if n < 1:
                    raise ArchitectureError(
                        f"layer {layer.name!r}: dense max collapses the map"
                    )
            out = (c, (n + 1) // 2)
        elif layer.op in ("batchnorm", "relu"):
            out = (c, n)
        elif layer.op == "add":
            if len(inputs) != 2:
                raise ArchitectureError(f"layer {layer.name!r}: add needs two inputs")
            if in_shapes[0] != in_shapes[1]:
                raise ArchitectureError(
                    f"layer {layer.name!r}: add shape mismatch "
                    f"{in_shapes[0]} vs {in_shapes[1]}"
                )
            out = in_shapes[0]
        elif layer.op == "concat":
            if len(inputs) < 2:
                raise ArchitectureError(
                    f"layer {layer.name!r}: concat needs two or more inputs"
                )
            if len({shape[1] for shape in in_shapes}) != 1:
                raise ArchitectureError(
                    f"layer {layer.name!r}: concat spatial sizes differ"
                )
            out = (sum(shape[0] for shape in in_shapes), n)
        else:  # avgpool_global
            out = (c, 1)
        layer.inputs = inputs
        shapes[layer.name] = out
        previous = layer.name
    for tap in spec.taps:
        if tap not in shapes or tap == INPUT_NAME:
            raise ArchitectureError(f"unknown tap {tap!r}")
    if len(set(spec.taps)) != len(spec.taps):
        raise ArchitectureError("duplicate tap names")
    spec.shapes = shapes
    return spec


def build_from_config(config: str | dict) -> ArchitectureSpec:
    """Parse and validate a JSON architecture config (text or dict)."""
    if isinstance(config, str):
        try:
            doc = json.loads(config)
        except json.JSONDecodeError as exc:
            raise ArchitectureError(f"config is not valid JSON: {exc}") from exc
    else:
        doc = config
    for key in ("name", "layers"):
        if key not in doc:
            raise ArchitectureError(f"config missing {key!r}")
    layer_specs = []
    for entry in doc["layers"]:
        if "name" not in entry or "op" not in entry:
            raise ArchitectureError(f"layer entry needs 'name' and 'op': {entry!r}")
        layer_specs.append(
            LayerSpec(
                name=entry["name"],
                op=entry["op"],
                params=dict(entry.get("params", {})),
                inputs=list(entry["inputs"]) if "inputs" in entry else None,
            )
        )
    spec = ArchitectureSpec(
        name=doc["name"],
        layers=layer_specs,
        taps=list(doc.get("taps", [layer_specs[-1].name] if layer_specs else [])),
        input_size=int(doc.get("input_size", 224)),
        input_channels=int(doc.get("input_channels", 3)),
    )
    return validate_spec(spec)


def to_config_dict(spec: ArchitectureSpec) -> dict:
    """Inverse of :func:`build_from_config` (layer inputs always explicit)."""
    return {
        "name": spec.name,
        "input_size": spec.input_size,
        "input_channels": spec.input_channels,
        "taps": list(spec.taps),
        "layers": [
            {
                "name": layer.name,
                "op": layer.op,
                "params": dict(layer.params),
                "inputs": list(layer.inputs or []),
            }
            for layer in spec.layers
        ],
    }


class ForwardRunner:
    """Executes a validated spec with seeded random weights, capturing taps."""

    def __init__(self, spec: ArchitectureSpec, seed: int = 0):
        validate_spec(spec)
        self.spec = spec
        self.seed = int(seed)
        self.weights: dict[str, np.ndarray] = {}
        for index, layer in enumerate(spec.layers):
            if layer.op != "conv":
                continue
            c_in = spec.shapes[layer.inputs[0]][0]
            rng = np.random.default_rng([self.seed, index])
            self.weights[layer.name] = L.he_uniform(
                rng, layer.params["out_channels"], c_in, layer.params["kernel"]
            )
        # free intermediate tensors as soon as their last consumer has run
        self._last_use: dict[str, int] = {}
        for index, layer in enumerate(spec.layers):
            for ref in layer.inputs:
                self._last_use[ref] = index

    def run(self, image: np.ndarray, taps: list[str] | None = None) -> dict[str, np.ndarray]:
        """Forward one (channels, n, n) input; returns {tap_name: activation}."""
        spec = self.spec
        x = np.ascontiguousarray(image, dtype=np.float32)
        expected = (spec.input_channels, spec.input_size, spec.input_size)
        if x.shape != expected:
            raise ParameterError(f"input shape {x.shape} != expected {expected}")
        wanted = list(spec.taps if taps is None else taps)
        for tap in wanted:
            if tap not in spec.shapes:
                raise ParameterError(f"unknown tap {tap!r}")
        keep = set(wanted)
        tensors: dict[str, np.ndarray] = {INPUT_NAME: x}
        captured: dict[str, np.ndarray] = {}
        for index, layer in enumerate(spec.layers):
            ins = [tensors[ref] for ref in layer.inputs]
            p = layer.params
            if layer.op == "conv":
                out = L.conv2d(
                    ins[0],
                    self.weights[layer.name],
                    stride=p["stride"],
                    padding=p.get("padding", 0),
                )
            elif layer.op == "maxpool":
                out = L.maxpool2d(ins[0], p["kernel"], p["stride"], p.get("padding", 0))
            elif layer.op == "avgpool":
                out = L.avgpool2d(ins[0], p["kernel"], p["stride"])
            elif layer.op == "blurpool":
                out = L.blurpool(
                    ins[0],
                    dense_max_kernel=p.get("dense_max_kernel"),
                    dense_max_padding=p.get("dense_max_padding", 0),
                )
            elif layer.op == "batchnorm":
                out = L.batchnorm_identity(ins[0])
            elif layer.op == "relu":
                out = L.relu(ins[0])
            elif layer.op == "add":
                out = L.add(ins[0], ins[1])
            elif layer.op == "concat":
                out = L.concat(ins)
            else:
                out = L.avgpool_global(ins[0])
            tensors[layer.name] = out
            if layer.name in keep:
                captured[layer.name] = out
            for ref in layer.inputs:
                if self._last_use.get(ref) == index and ref not in keep:
                    tensors.pop(ref, None)
        return captured


def _collect_tap_srops(
    runner: ForwardRunner,
    image: np.ndarray,
    kappa: float,
    squared: bool,
    exclude_dc: bool,
) -> dict[str, tuple[list[float], int]]:
    spec = runner.spec
    activations = runner.run(image)
    out: dict[str, tuple[list[float], int]] = {}
    for tap in spec.taps:
        tensor = FeatureMapTensor(
            data=activations[tap], layer_name=tap, source="randomized"
        )
        scale = spec.shapes[tap][1] / spec.input_size
        values: list[float] = []
        skipped = 0
        for value in srop_feature_map(
            tensor, kappa, squared=squared, exclude_dc=exclude_dc
        ):
            if value is None:
                skipped += 1
            else:
                values.append(value.normalized * scale)
        out[tap] = (values, skipped)
    return out


def run_profile(
    spec: ArchitectureSpec,
    inputs,
    seed: int = 0,
    kappa: float = DEFAULT_KAPPA,
    *,
    squared: bool = False,
    exclude_dc: bool = False,
) -> list[SropReport]:
    """Layer-wise roll-off reports of a randomized forward pass over ``inputs``.

    Per-kernel values are referred to the input band (scaled by
    ``layer_size / input_size``) so layers of different resolutions are
    comparable on one axis.  Deterministic given (spec, seed, inputs).
    """
    runner = ForwardRunner(spec, seed)
    images = [np.asarray(img) for img in inputs]
    if not images:
        raise ParameterError("need at least one input image")
    per_image = map_ordered(
        lambda img: _collect_tap_srops(runner, img, kappa, squared, exclude_dc),
        images,
    )
    reports = []
    for tap in spec.taps:
        values: list[float] = []
        skipped = 0
        for result in per_image:
            tap_values, tap_skipped = result[tap]
            values.extend(tap_values)
            skipped += tap_skipped
        reports.append(
            layer_stats(values, tap, spec.shapes[tap][1], skipped_channels=skipped)
        )
    return reports


def export_activations(
    spec: ArchitectureSpec, inputs, seed: int, out_dir
) -> "Path":
    """Dump tap activations as per-layer NPY files plus a manifest.

    Produces the same directory contract as the external exporter, so
    randomized and pretrained activations flow through one analysis path.
    """
    from pathlib import Path

    from ..tensorio import ManifestLayer, NpyTensor, RunManifest, save_npy, write_manifest

    runner = ForwardRunner(spec, seed)
    images = [np.asarray(img) for img in inputs]
    if not images:
        raise ParameterError("need at least one input image")
    batches: dict[str, list[np.ndarray]] = {tap: [] for tap in spec.taps}
    for result in map_ordered(runner.run, images):
        for tap in spec.taps:
            batches[tap].append(result[tap])
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    layers = []
    for tap in spec.taps:
        stacked = np.stack(batches[tap]).astype(np.float32)
        filename = tap.replace("/", "_").replace(".", "_") + ".npy"
        save_npy(out_dir / filename, NpyTensor.from_array(stacked))
        layers.append(ManifestLayer(name=tap, file=filename, shape=stacked.shape))
    manifest = RunManifest(
        model_name=spec.name,
        weights_origin="randomized",
        input_desc=f"{len(images)} images, {spec.input_size}x{spec.input_size}",
        seed=seed,
        layers=layers,
    )
    path = out_dir / "manifest.json"
    write_manifest(manifest, path)
    return path


def downscale_ladder(n: int) -> list[int]:
    """Resolutions visited by repeated 2x max-pooling, input included."""
    sizes = [n]
    while sizes[-1] % 2 == 0 and sizes[-1] // 2 >= 7:
        sizes.append(sizes[-1] // 2)
    return sizes


def benchmark_downscale(
    inputs,
    kappa: float = DEFAULT_KAPPA,
    *,
    squared: bool = False,
    exclude_dc: bool = False,
) -> list[SropReport]:
    """Reference roll-off ladder: repeated kernel-2/stride-2 max-pooling.

    Reports one entry per resolution (input first), with per-kernel values
    referred to the input band exactly as in :func:`run_profile`.
    """
    images = [np.ascontiguousarray(img, dtype=np.float32) for img in inputs]
    if not images:
        raise ParameterError("need at least one input image")
    base = images[0].shape
    if len(base) != 3 or base[1] != base[2]:
        raise ParameterError("inputs must be (channels, n, n)")
    for img in images:
        if img.shape != base:
            raise ParameterError("all inputs must share one shape")
    sizes = downscale_ladder(base[1])

    def ladder_srops(img: np.ndarray) -> list[tuple[list[float], int]]:
        out = []
        x = img
        for size in sizes:
            scale = size / base[1]
            tensor = FeatureMapTensor(data=x, layer_name=f"ds{size}", source="input_image")
            values: list[float] = []
            skipped = 0
            for value in srop_feature_map(
                tensor, kappa, squared=squared, exclude_dc=exclude_dc
            ):
                if value is None:
                    skipped += 1
                else:
                    values.append(value.normalized * scale)
            out.append((values, skipped))
            if size != sizes[-1]:
                x = L.maxpool2d(x, kernel=2, stride=2)
        return out

    per_image = map_ordered(ladder_srops, images)
    reports = []
    for level, size in enumerate(sizes):
        values: list[float] = []
        skipped = 0
        for result in per_image:
            level_values, level_skipped = result[level]
            values.extend(level_values)
            skipped += level_skipped
        reports.append(
            layer_stats(values, f"ds{size}", size, skipped_channels=skipped)
        )
    return reports
