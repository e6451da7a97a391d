"""Builders for the shipped backbone configs and their anti-aliased variants.

Layer names follow the block-level naming convention used throughout the
toolkit (conv0, pool1, resblk2.0, denseblk1, transblk1, ...).  Default taps
capture one activation per named block row; inner layers (e.g. the first
conv of a two-conv block range) remain addressable by name for custom taps.

Anti-aliased variants keep the same names and output sizes but downscale
with a stride-1 dense max (pools) or stride-1 conv (strided convs) followed
by a [1,2,1]/4 blur at stride 2.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import ParameterError
from .arch import INPUT_NAME, ArchitectureSpec, LayerSpec, to_config_dict, validate_spec


class _Builder:
    def __init__(self) -> None:
        self.layers: list[LayerSpec] = []
        self.prev = INPUT_NAME

    def add(self, name: str, op: str, params: dict | None = None, inputs=None) -> str:
        self.layers.append(
            LayerSpec(name=name, op=op, params=dict(params or {}), inputs=inputs)
        )
        self.prev = name
        return name

    def conv(self, name, out_channels, kernel, stride=1, padding=0, inputs=None):
        return self.add(
            name,
            "conv",
            {
                "kernel": kernel,
                "stride": stride,
                "padding": padding,
                "out_channels": out_channels,
            },
            inputs,
        )

    def maxpool(self, name, kernel, padding=0):
        return self.add(name, "maxpool", {"kernel": kernel, "stride": 2, "padding": padding})

    def blurpool(self, name, dense_max_kernel=None, dense_max_padding=0, inputs=None):
        params: dict = {}
        if dense_max_kernel is not None:
            params["dense_max_kernel"] = dense_max_kernel
            params["dense_max_padding"] = dense_max_padding
        return self.add(name, "blurpool", params, inputs)

    def pool_block(self, name, kernel, padding=0, antialiased=False):
        """Named downscaling pool; anti-aliased form is dense max + blur."""
        if antialiased:
            return self.blurpool(name, dense_max_kernel=kernel, dense_max_padding=padding)
        return self.maxpool(name, kernel, padding)


def alexnet(antialiased: bool = False) -> ArchitectureSpec:
    b = _Builder()
    if antialiased:
        b.conv("conv0.conv", 64, kernel=11, stride=2, padding=2)
        b.blurpool("conv0.blur")
    else:
        b.conv("conv0.conv", 64, kernel=11, stride=4, padding=2)
    b.add("conv0", "relu")
    b.pool_block("pool1", kernel=3, antialiased=antialiased)
    b.conv("conv1.0.conv", 192, kernel=5, padding=2)
    b.add("conv1.0", "relu")
    b.pool_block("pool2", kernel=3, antialiased=antialiased)
    for name, channels in (("conv2.0", 384), ("conv2.1", 256), ("conv2.2", 256)):
        b.conv(f"{name}.conv", channels, kernel=3, padding=1)
        b.add(name, "relu")
    b.pool_block("pool3", kernel=3, antialiased=antialiased)
    taps = ["conv0", "pool1", "conv1.0", "pool2", "conv2.2", "pool3"]
    return _finish("alexnet", b, taps, antialiased)


def vgg16(batchnorm: bool = False, antialiased: bool = False) -> ArchitectureSpec:
    b = _Builder()
    channels = (64, 128, 256, 512, 512)
    counts = (2, 2, 3, 3, 3)
    taps = []
    for block, (width, count) in enumerate(zip(channels, counts)):
        for i in range(count):
            name = f"conv{block}.{i}"
            b.conv(f"{name}.conv", width, kernel=3, padding=1)
            if batchnorm:
                b.add(f"{name}.bn", "batchnorm")
            b.add(name, "relu")
        taps.append(b.prev)
        b.pool_block(f"pool{block + 1}", kernel=2, antialiased=antialiased)
        taps.append(b.prev)
    base = "vgg16_bn" if batchnorm else "vgg16"
    return _finish(base, b, taps, antialiased)


def _basic_block(b: _Builder, name: str, out_channels: int, stride: int, antialiased: bool):
    block_input = b.prev
    if antialiased and stride == 2:
        b.conv(f"{name}.conv1", out_channels, kernel=3, stride=1, padding=1)
        b.add(f"{name}.bn1", "batchnorm")
        b.add(f"{name}.relu1", "relu")
        b.blurpool(f"{name}.blur1")
    else:
        b.conv(f"{name}.conv1", out_channels, kernel=3, stride=stride, padding=1)
        b.add(f"{name}.bn1", "batchnorm")
        b.add(f"{name}.relu1", "relu")
    b.conv(f"{name}.conv2", out_channels, kernel=3, stride=1, padding=1)
    main = b.add(f"{name}.bn2", "batchnorm")
    shortcut = block_input
    if stride != 1:
        if antialiased:
            b.blurpool(f"{name}.down.blur", inputs=[block_input])
            b.conv(f"{name}.down.conv", out_channels, kernel=1, stride=1)
        else:
            b.conv(
                f"{name}.down.conv", out_channels, kernel=1, stride=2,
                inputs=[block_input],
            )
        shortcut = b.add(f"{name}.down.bn", "batchnorm")
    b.add(f"{name}.add", "add", inputs=[main, shortcut])
    b.add(name, "relu")


def _resnet(name: str, block_counts: tuple[int, ...], antialiased: bool) -> ArchitectureSpec:
    b = _Builder()
    if antialiased:
        b.conv("conv0.conv", 64, kernel=7, stride=1, padding=3)
        b.blurpool("conv0.blur")
    else:
        b.conv("conv0.conv", 64, kernel=7, stride=2, padding=3)
    b.add("conv0.bn", "batchnorm")
    b.add("conv0", "relu")
    b.pool_block("pool1", kernel=2, antialiased=antialiased)
    taps = ["conv0", "pool1"]
    widths = (64, 128, 256, 512)
    for stage, (width, count) in enumerate(zip(widths, block_counts), start=1):
        for i in range(count):
            stride = 2 if (stage > 1 and i == 0) else 1
            _basic_block(b, f"resblk{stage}.{i}", width, stride, antialiased)
        if stage == 1:
            taps.append(b.prev)  # last same-size block of the range row
        else:
            taps.append(f"resblk{stage}.0")
            if count > 1:
                taps.append(b.prev)
    return _finish(name, b, taps, antialiased)


def resnet18(antialiased: bool = False) -> ArchitectureSpec:
    return _resnet("resnet18", (2, 2, 2, 2), antialiased)


def resnet34(antialiased: bool = False) -> ArchitectureSpec:
    return _resnet("resnet34", (3, 4, 6, 3), antialiased)


def _dense_block(b: _Builder, name: str, num_layers: int, growth: int):
    bottleneck = 4 * growth
    for i in range(num_layers):
        cur = b.prev
        b.add(f"{name}.l{i}.bn1", "batchnorm", inputs=[cur])
        b.add(f"{name}.l{i}.relu1", "relu")
        b.conv(f"{name}.l{i}.conv1", bottleneck, kernel=1)
        b.add(f"{name}.l{i}.bn2", "batchnorm")
        b.add(f"{name}.l{i}.relu2", "relu")
        b.conv(f"{name}.l{i}.conv2", growth, kernel=3, padding=1)
        out_name = name if i == num_layers - 1 else f"{name}.l{i}"
        b.add(out_name, "concat", inputs=[cur, f"{name}.l{i}.conv2"])


def _transition(b: _Builder, name: str, out_channels: int, antialiased: bool):
    b.add(f"{name}.bn", "batchnorm")
    b.add(f"{name}.relu", "relu")
    b.conv(f"{name}.conv", out_channels, kernel=1)
    if antialiased:
        b.blurpool(name)
    else:
        b.add(name, "avgpool", {"kernel": 2, "stride": 2})


def _densenet(name: str, block_layers: tuple[int, ...], antialiased: bool) -> ArchitectureSpec:
    growth = 32
    b = _Builder()
    if antialiased:
        b.conv("conv0.conv", 64, kernel=7, stride=1, padding=3)
        b.blurpool("conv0.blur")
    else:
        b.conv("conv0.conv", 64, kernel=7, stride=2, padding=3)
    b.add("conv0.bn", "batchnorm")
    b.add("conv0", "relu")
    if antialiased:
        b.blurpool("pool1", dense_max_kernel=3, dense_max_padding=1)
    else:
        b.maxpool("pool1", kernel=3, padding=1)
    taps = ["conv0", "pool1"]
    channels = 64
    for block, num_layers in enumerate(block_layers, start=1):
        _dense_block(b, f"denseblk{block}", num_layers, growth)
        channels += num_layers * growth
        taps.append(f"denseblk{block}")
        if block < len(block_layers):
            channels //= 2
            _transition(b, f"transblk{block}", channels, antialiased)
            taps.append(f"transblk{block}")
    b.add("bn1", "batchnorm")
    taps.append("bn1")
    return _finish(name, b, taps, antialiased)


def densenet121(antialiased: bool = False) -> ArchitectureSpec:
    return _densenet("densenet121", (6, 12, 24, 16), antialiased)


def densenet169(antialiased: bool = False) -> ArchitectureSpec:
    return _densenet("densenet169", (6, 12, 32, 32), antialiased)


def _finish(base_name: str, b: _Builder, taps: list[str], antialiased: bool) -> ArchitectureSpec:
    spec = ArchitectureSpec(
        name=base_name + ("_aa" if antialiased else ""),
        layers=b.layers,
        taps=taps,
        input_size=224,
        input_channels=3,
    )
    return validate_spec(spec)


_BUILDERS = {
    "alexnet": lambda aa: alexnet(aa),
    "vgg16": lambda aa: vgg16(batchnorm=False, antialiased=aa),
    "vgg16_bn": lambda aa: vgg16(batchnorm=True, antialiased=aa),
    "resnet18": lambda aa: resnet18(aa),
    "resnet34": lambda aa: resnet34(aa),
    "densenet121": lambda aa: densenet121(aa),
    "densenet169": lambda aa: densenet169(aa),
}


def preset_names() -> list[str]:
    names = []
    for base in _BUILDERS:
        names.append(base)
        names.append(base + "_aa")
    return names


def build_preset(name: str) -> ArchitectureSpec:
    antialiased = name.endswith("_aa")
    base = name[:-3] if antialiased else name
    if base not in _BUILDERS:
        raise ParameterError(f"unknown preset {name!r}; known: {preset_names()}")
    return _BUILDERS[base](antialiased)


def load_config(name_or_path: str) -> ArchitectureSpec:
    """Resolve a preset name or a JSON config file path to a validated spec."""
    from .arch import build_from_config

    path = Path(name_or_path)
    if path.suffix == ".json" or path.exists():
        return build_from_config(path.read_text(encoding="utf-8"))
    config_dir = Path(__file__).parent / "configs"
    packaged = config_dir / f"{name_or_path}.json"
    if packaged.exists():
        return build_from_config(packaged.read_text(encoding="utf-8"))
    return build_preset(name_or_path)


def write_all_configs(out_dir: str | Path) -> list[Path]:
    """Regenerate the shipped JSON config files from the builders."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in preset_names():
        spec = build_preset(name)
        target = out_dir / f"{name}.json"
        target.write_text(
            json.dumps(to_config_dict(spec), indent=1) + "\n", encoding="utf-8"
        )
        written.append(target)
    return written


if __name__ == "__main__":
    for written_path in write_all_configs(Path(__file__).parent / "configs"):
        print(written_path)
