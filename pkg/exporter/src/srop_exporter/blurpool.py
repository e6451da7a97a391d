"""Anti-aliased downsampling: dense pooling followed by a [1,2,1]/4 blur."""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F


class BlurPool2d(nn.Module):
    """Separable [1,2,1]/4 blur at stride 2 with reflection-padded borders.

    Channel-agnostic: the depthwise kernel is expanded to the input's
    channel count at forward time, so one instance can replace any pool.
    """

    _base = torch.tensor([1.0, 2.0, 1.0]) / 4.0

    def __init__(self) -> None:
        super().__init__()
        kernel = torch.outer(self._base, self._base)
        self.register_buffer("kernel", kernel[None, None, :, :])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        channels = x.shape[1]
        weight = self.kernel.expand(channels, 1, 3, 3)
        padded = F.pad(x, (1, 1, 1, 1), mode="reflect")
        return F.conv2d(padded, weight, stride=2, groups=channels)


def antialias_module(module: nn.Module) -> nn.Module:
    """Recursively rewrite downscaling layers into anti-aliased form.

    Strided max pools become dense (stride-1) pools followed by a blur;
    2x average pools become a plain blur (bilinear downsampling); strided
    convolutions keep their receptive field but halve their stride and
    blur afterwards.  Module paths are preserved so activation taps
    resolve unchanged.
    """
    for name, child in module.named_children():
        if isinstance(child, nn.MaxPool2d) and child.stride in (2, (2, 2)):
            dense = nn.MaxPool2d(
                kernel_size=child.kernel_size, stride=1, padding=child.padding
            )
            setattr(module, name, nn.Sequential(dense, BlurPool2d()))
        elif isinstance(child, nn.AvgPool2d) and child.stride in (2, (2, 2)):
            setattr(module, name, BlurPool2d())
        elif isinstance(child, nn.Conv2d) and child.stride[0] > 1:
            child.stride = (child.stride[0] // 2, child.stride[1] // 2)
            setattr(module, name, nn.Sequential(child, BlurPool2d()))
        else:
            antialias_module(child)
    return module
