"""Forward-only layer primitives over (channels, height, width) float32 arrays."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError

BLUR_KERNEL_1D = np.array([1.0, 2.0, 1.0], dtype=np.float32) / 4.0


def _pad_spatial(x: np.ndarray, padding: int, value: float = 0.0) -> np.ndarray:
    if padding == 0:
        return x
    return np.pad(
        x,
        ((0, 0), (padding, padding), (padding, padding)),
        mode="constant",
        constant_values=value,
    )


def conv2d(
    x: np.ndarray, weights: np.ndarray, stride: int = 1, padding: int = 0
) -> np.ndarray:
    """Cross-correlation of (c_in, h, w) with (c_out, c_in, k, k), zero padding, no bias."""
    c_in, h, w = x.shape
    c_out, wc_in, k, k2 = weights.shape
    if wc_in != c_in or k != k2:
        raise ParameterError(
            f"weight shape {weights.shape} incompatible with input {x.shape}"
        )
    xp = _pad_spatial(x, padding)
    h_out = (h + 2 * padding - k) // stride + 1
    w_out = (w + 2 * padding - k) // stride + 1
    if h_out < 1 or w_out < 1:
        raise ParameterError("kernel larger than padded input")
    windows = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(1, 2))
    windows = windows[:, ::stride, ::stride, :, :]  # (c_in, h_out, w_out, k, k)
    col = windows.transpose(1, 2, 0, 3, 4).reshape(h_out * w_out, c_in * k * k)
    flat_w = weights.reshape(c_out, c_in * k * k)
    out = col @ flat_w.T  # (h_out * w_out, c_out)
    return np.ascontiguousarray(out.T.reshape(c_out, h_out, w_out))


def maxpool2d(
    x: np.ndarray, kernel: int, stride: int, padding: int = 0
) -> np.ndarray:
    """Window maximum; padding cells never win (padded with -inf)."""
    xp = _pad_spatial(x, padding, value=-np.inf)
    c, h, w = xp.shape
    if h < kernel or w < kernel:
        raise ParameterError("pool window larger than input")
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kernel, kernel), axis=(1, 2))
    return np.ascontiguousarray(windows[:, ::stride, ::stride].max(axis=(3, 4)))


def avgpool2d(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    c, h, w = x.shape
    if h < kernel or w < kernel:
        raise ParameterError("pool window larger than input")
    windows = np.lib.stride_tricks.sliding_window_view(x, (kernel, kernel), axis=(1, 2))
    return np.ascontiguousarray(
        windows[:, ::stride, ::stride].mean(axis=(3, 4), dtype=np.float32)
    )


def blur_downsample(x: np.ndarray) -> np.ndarray:
    """Separable [1,2,1]/4 blur with stride 2.

    Borders use reflect padding so a constant map stays constant (the kernel
    keeps unit DC gain everywhere); this realizes bilinear 2x downsampling.
    """
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)), mode="reflect")
    k = BLUR_KERNEL_1D
    rows = k[0] * xp[:, :-2, :] + k[1] * xp[:, 1:-1, :] + k[2] * xp[:, 2:, :]
    cols = k[0] * rows[:, :, :-2] + k[1] * rows[:, :, 1:-1] + k[2] * rows[:, :, 2:]
    return np.ascontiguousarray(cols[:, ::2, ::2])


def blurpool(
    x: np.ndarray, dense_max_kernel: int | None = None, dense_max_padding: int = 0
) -> np.ndarray:
    """Anti-aliased downscaling: optional stride-1 dense max, then blur at stride 2."""
    if dense_max_kernel is not None:
        x = maxpool2d(x, dense_max_kernel, stride=1, padding=dense_max_padding)
    return blur_downsample(x)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def batchnorm_identity(x: np.ndarray) -> np.ndarray:
    """BatchNorm at random initialization: gamma=1, beta=0, no statistics."""
    return x


def add(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if x.shape != y.shape:
        raise ParameterError(f"add shapes differ: {x.shape} vs {y.shape}")
    return x + y


def concat(tensors: list[np.ndarray]) -> np.ndarray:
    sizes = {t.shape[1:] for t in tensors}
    if len(sizes) != 1:
        raise ParameterError(f"concat spatial sizes differ: {sizes}")
    return np.concatenate(tensors, axis=0)


def avgpool_global(x: np.ndarray) -> np.ndarray:
    return x.mean(axis=(1, 2), dtype=np.float32).reshape(x.shape[0], 1, 1)


def he_uniform(
    rng: np.random.Generator, c_out: int, c_in: int, kernel: int
) -> np.ndarray:
    """He-uniform weight draw: bound sqrt(6 / fan_in), zero bias convention."""
    fan_in = c_in * kernel * kernel
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=(c_out, c_in, kernel, kernel)).astype(
        np.float32
    )
