"""Backbone registry: construction, weight sourcing, and activation tap paths."""

from __future__ import annotations

import warnings

import torch
import torchvision.models as tvm

from .blurpool import antialias_module


class ExportError(RuntimeError):
    """Job cannot be set up (unknown model, unresolvable tap, ...)."""


# block-row tap names -> torchvision submodule paths
_ALEXNET_TAPS = {
    "conv0": "features.1",
    "pool1": "features.2",
    "conv1.0": "features.4",
    "pool2": "features.5",
    "conv2.2": "features.11",
    "pool3": "features.12",
}

_VGG16_TAPS = {
    "conv0.1": "features.3",
    "pool1": "features.4",
    "conv1.1": "features.8",
    "pool2": "features.9",
    "conv2.2": "features.15",
    "pool3": "features.16",
    "conv3.2": "features.22",
    "pool4": "features.23",
    "conv4.2": "features.29",
    "pool5": "features.30",
}

_VGG16_BN_TAPS = {
    "conv0.1": "features.5",
    "pool1": "features.6",
    "conv1.1": "features.12",
    "pool2": "features.13",
    "conv2.2": "features.22",
    "pool3": "features.23",
    "conv3.2": "features.32",
    "pool4": "features.33",
    "conv4.2": "features.42",
    "pool5": "features.43",
}

_RESNET18_TAPS = {
    "conv0": "relu",
    "pool1": "maxpool",
    "resblk1.1": "layer1.1",
    "resblk2.0": "layer2.0",
    "resblk2.1": "layer2.1",
    "resblk3.0": "layer3.0",
    "resblk3.1": "layer3.1",
    "resblk4.0": "layer4.0",
    "resblk4.1": "layer4.1",
}

_RESNET34_TAPS = {
    "conv0": "relu",
    "pool1": "maxpool",
    "resblk1.2": "layer1.2",
    "resblk2.0": "layer2.0",
    "resblk2.3": "layer2.3",
    "resblk3.0": "layer3.0",
    "resblk3.5": "layer3.5",
    "resblk4.0": "layer4.0",
    "resblk4.2": "layer4.2",
}

_DENSENET_TAPS = {
    "conv0": "features.relu0",
    "pool1": "features.pool0",
    "denseblk1": "features.denseblock1",
    "transblk1": "features.transition1",
    "denseblk2": "features.denseblock2",
    "transblk2": "features.transition2",
    "denseblk3": "features.denseblock3",
    "transblk3": "features.transition3",
    "denseblk4": "features.denseblock4",
    "bn1": "features.norm5",
}

_REGISTRY = {
    "alexnet": (tvm.alexnet, "AlexNet_Weights", _ALEXNET_TAPS),
    "vgg16": (tvm.vgg16, "VGG16_Weights", _VGG16_TAPS),
    "vgg16_bn": (tvm.vgg16_bn, "VGG16_BN_Weights", _VGG16_BN_TAPS),
    "resnet18": (tvm.resnet18, "ResNet18_Weights", _RESNET18_TAPS),
    "resnet34": (tvm.resnet34, "ResNet34_Weights", _RESNET34_TAPS),
    "densenet121": (tvm.densenet121, "DenseNet121_Weights", _DENSENET_TAPS),
    "densenet169": (tvm.densenet169, "DenseNet169_Weights", _DENSENET_TAPS),
}

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


def model_ids() -> list[str]:
    out = []
    for base in _REGISTRY:
        out.append(base)
        out.append(base + "_aa")
    return out


def tap_table(model_id: str) -> dict[str, str]:
    base = model_id[:-3] if model_id.endswith("_aa") else model_id
    if base not in _REGISTRY:
        raise ExportError(f"unknown model {model_id!r}; known: {model_ids()}")
    return dict(_REGISTRY[base][2])


def build_model(
    model_id: str, weights: str = "random", seed: int = 0
) -> tuple[torch.nn.Module, dict[str, str], str]:
    """Construct an eval-mode backbone; returns (model, taps, weights_origin).

    ``weights='pretrained'`` attempts the published checkpoint and falls
    back to seeded random initialization with a warning when it cannot be
    obtained (anti-aliased variants have no packaged checkpoint here and
    always use the fallback).
    """
    antialiased = model_id.endswith("_aa")
    base = model_id[:-3] if antialiased else model_id
    if base not in _REGISTRY:
        raise ExportError(f"unknown model {model_id!r}; known: {model_ids()}")
    if weights not in ("pretrained", "random"):
        raise ExportError("weights must be 'pretrained' or 'random'")
    ctor, weights_enum_name, taps = _REGISTRY[base]
    origin = "randomized"
    model = None
    if weights == "pretrained" and not antialiased:
        try:
            weights_enum = getattr(tvm, weights_enum_name).IMAGENET1K_V1
            model = ctor(weights=weights_enum)
            origin = "pretrained"
        except Exception as exc:  # download failure, missing cache, ...
            warnings.warn(
                f"pretrained weights for {model_id} unavailable ({exc}); "
                "falling back to random initialization",
                RuntimeWarning,
                stacklevel=2,
            )
            model = None
    elif weights == "pretrained" and antialiased:
        warnings.warn(
            f"no packaged anti-aliased checkpoint for {model_id}; "
            "falling back to random initialization",
            RuntimeWarning,
            stacklevel=2,
        )
    if model is None:
        torch.manual_seed(seed)
        model = ctor(weights=None)
    if antialiased:
        model = antialias_module(model)
    model.eval()
    named = dict(model.named_modules())
    for tap, path in taps.items():
        if path not in named:
            raise ExportError(f"tap {tap!r} resolves to missing module {path!r}")
    return model, dict(taps), origin
