"""Bit-exact readers/writers for NPY tensors, MNIST IDX, CIFAR-10 batches, and run manifests.

All readers reject malformed input outright; no loader ever returns a tensor
whose element count disagrees with its declared shape.
"""

from __future__ import annotations

import ast
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    FormatError,
    ManifestError,
    ParameterError,
    ShapeMismatchError,
    UnsupportedDtypeError,
)

_NPY_MAGIC = b"\x93NUMPY"
_HEADER_ALIGN = 64

# canonical dtype tags <-> NPY descr strings
_DTYPE_TO_DESCR = {"f32_le": "<f4", "f64_le": "<f8", "u8": "|u1"}
_DESCR_TO_DTYPE = {v: k for k, v in _DTYPE_TO_DESCR.items()}
_DESCR_TO_NP = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8"), "|u1": np.dtype("u1")}


@dataclass
class NpyTensor:
    """Row-major scalar buffer plus its declared shape and element type."""

    shape: tuple[int, ...]
    dtype: str  # 'f32_le' | 'f64_le' | 'u8'
    data: np.ndarray

    def __post_init__(self) -> None:
        if self.dtype not in _DTYPE_TO_DESCR:
            raise UnsupportedDtypeError(f"unsupported dtype tag {self.dtype!r}")
        self.shape = tuple(int(d) for d in self.shape)
        expected = int(np.prod(self.shape, dtype=np.int64)) if self.shape else 1
        if self.data.size != expected:
            raise ShapeMismatchError(
                f"shape {self.shape} implies {expected} elements, buffer has {self.data.size}"
            )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "NpyTensor":
        arr = np.ascontiguousarray(arr)
        descr = arr.dtype.newbyteorder("<").str if arr.dtype.kind == "f" else arr.dtype.str
        if arr.dtype == np.float32:
            tag = "f32_le"
        elif arr.dtype == np.float64:
            tag = "f64_le"
        elif arr.dtype == np.uint8:
            tag = "u8"
        else:
            raise UnsupportedDtypeError(f"unsupported array dtype {arr.dtype}")
        return cls(shape=arr.shape, dtype=tag, data=arr.reshape(arr.shape))

    def to_array(self) -> np.ndarray:
        return self.data


def _shape_repr(shape: tuple[int, ...]) -> str:
    if len(shape) == 1:
        return f"({shape[0]},)"
    return "(" + ", ".join(str(d) for d in shape) + ")"


def write_npy(t: NpyTensor | np.ndarray) -> bytes:
    """Serialize to NPY v1.0: 64-byte-aligned space-padded header, LE data."""
    if isinstance(t, np.ndarray):
        t = NpyTensor.from_array(t)
    descr = _DTYPE_TO_DESCR[t.dtype]
    header_dict = (
        f"{{'descr': '{descr}', 'fortran_order': False, "
        f"'shape': {_shape_repr(t.shape)}, }}"
    )
    preamble_len = len(_NPY_MAGIC) + 2 + 2  # magic + version + header-length field
    unpadded = preamble_len + len(header_dict) + 1  # trailing newline
    pad = (-unpadded) % _HEADER_ALIGN
    header = header_dict + " " * pad + "\n"
    if len(header) > 0xFFFF:
        raise FormatError("header too large for NPY v1.0")
    out = bytearray()
    out += _NPY_MAGIC
    out += bytes((1, 0))
    out += struct.pack("<H", len(header))
    out += header.encode("latin1")
    arr = np.ascontiguousarray(t.data.reshape(t.shape), dtype=_DESCR_TO_NP[descr])
    out += arr.tobytes(order="C")
    return bytes(out)


def _parse_npy_header(buf: bytes) -> tuple[tuple[int, ...], str, int]:
    """Return (shape, dtype tag, data offset) from an NPY byte buffer."""
    if len(buf) < 10 or buf[:6] != _NPY_MAGIC:
        raise BadMagicError("not an NPY file (bad magic)")
    major, minor = buf[6], buf[7]
    if (major, minor) != (1, 0):
        raise FormatError(f"unsupported NPY version {major}.{minor}")
    (hlen,) = struct.unpack("<H", buf[8:10])
    if len(buf) < 10 + hlen:
        raise FormatError("truncated NPY header")
    header = buf[10 : 10 + hlen].decode("latin1")
    try:
        meta = ast.literal_eval(header)
    except (ValueError, SyntaxError) as exc:
        raise FormatError(f"unparseable NPY header: {exc}") from exc
    if not isinstance(meta, dict) or set(meta) != {"descr", "fortran_order", "shape"}:
        raise FormatError("NPY header must have exactly descr/fortran_order/shape")
    if meta["fortran_order"] is not False:
        raise FormatError("fortran_order=True is not supported")
    descr = meta["descr"]
    if descr not in _DESCR_TO_DTYPE:
        raise UnsupportedDtypeError(f"unsupported NPY descr {descr!r}")
    shape = meta["shape"]
    if not isinstance(shape, tuple) or not all(
        isinstance(d, int) and d >= 0 for d in shape
    ):
        raise FormatError(f"invalid shape {shape!r}")
    return shape, _DESCR_TO_DTYPE[descr], 10 + hlen


def read_npy(buf: bytes) -> NpyTensor:
    """Parse an NPY v1.0 buffer; rejects any shape/byte-count disagreement."""
    shape, tag, offset = _parse_npy_header(buf)
    dt = _DESCR_TO_NP[_DTYPE_TO_DESCR[tag]]
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    expected_bytes = count * dt.itemsize
    payload = buf[offset:]
    if len(payload) != expected_bytes:
        raise ShapeMismatchError(
            f"shape {shape} needs {expected_bytes} data bytes, found {len(payload)}"
        )
    data = np.frombuffer(payload, dtype=dt).reshape(shape)
    return NpyTensor(shape=shape, dtype=tag, data=data)


def read_npy_header(path: str | Path) -> tuple[tuple[int, ...], str]:
    """Shape and dtype tag from a file without loading its payload."""
    with open(path, "rb") as fh:
        head = fh.read(10)
        if len(head) < 10 or head[:6] != _NPY_MAGIC:
            raise BadMagicError(f"{path}: not an NPY file")
        if (head[6], head[7]) != (1, 0):
            raise FormatError(f"{path}: unsupported NPY version")
        (hlen,) = struct.unpack("<H", head[8:10])
        shape, tag, _ = _parse_npy_header(head + fh.read(hlen))
    return shape, tag


def load_npy(path: str | Path) -> np.ndarray:
    return read_npy(Path(path).read_bytes()).to_array()


def save_npy(path: str | Path, arr: np.ndarray | NpyTensor) -> None:
    atomic_write_bytes(path, write_npy(arr))


def atomic_write_bytes(path: str | Path, payload: bytes) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


@dataclass
class LabeledImageSet:
    """Images plus integer class labels, index-aligned."""

    images: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return self.images.shape[0]


_MNIST_IMAGE_MAGIC = 0x00000803
_MNIST_LABEL_MAGIC = 0x00000801


def read_mnist_idx(images_bytes: bytes, labels_bytes: bytes) -> LabeledImageSet:
    """Parse the big-endian IDX image/label pair used by the digit corpus."""
    if len(images_bytes) < 16:
        raise FormatError("IDX image payload shorter than its header")
    magic, count, rows, cols = struct.unpack(">IIII", images_bytes[:16])
    if magic != _MNIST_IMAGE_MAGIC:
        raise BadMagicError(f"IDX image magic 0x{magic:08x} != 0x{_MNIST_IMAGE_MAGIC:08x}")
    expected = 16 + count * rows * cols
    if len(images_bytes) != expected:
        raise ShapeMismatchError(
            f"IDX image payload is {len(images_bytes)} bytes, expected {expected}"
        )
    if len(labels_bytes) < 8:
        raise FormatError("IDX label payload shorter than its header")
    lmagic, lcount = struct.unpack(">II", labels_bytes[:8])
    if lmagic != _MNIST_LABEL_MAGIC:
        raise BadMagicError(f"IDX label magic 0x{lmagic:08x} != 0x{_MNIST_LABEL_MAGIC:08x}")
    if len(labels_bytes) != 8 + lcount:
        raise ShapeMismatchError(
            f"IDX label payload is {len(labels_bytes)} bytes, expected {8 + lcount}"
        )
    if lcount != count:
        raise ShapeMismatchError(f"{count} images but {lcount} labels")
    images = np.frombuffer(images_bytes, dtype=np.uint8, offset=16).reshape(
        count, rows, cols
    )
    labels = np.frombuffer(labels_bytes, dtype=np.uint8, offset=8)
    if labels.size and labels.max() > 9:
        raise FormatError("labels outside 0..9")
    return LabeledImageSet(images=images, labels=labels)


def mnist_to_float(images: np.ndarray) -> np.ndarray:
    """Promote u8 grayscale images to float32 in [0, 1]."""
    return np.asarray(images, dtype=np.float32) / np.float32(255.0)


_CIFAR_RECORD = 1 + 32 * 32 * 3


def read_cifar10_batch(buf: bytes) -> LabeledImageSet:
    """Parse a CIFAR-10 binary batch (1 label byte + 3072 RGB-plane bytes per record)."""
    if len(buf) == 0 or len(buf) % _CIFAR_RECORD != 0:
        raise ShapeMismatchError(
            f"batch length {len(buf)} is not a positive multiple of {_CIFAR_RECORD}"
        )
    count = len(buf) // _CIFAR_RECORD
    raw = np.frombuffer(buf, dtype=np.uint8).reshape(count, _CIFAR_RECORD)
    labels = raw[:, 0].copy()
    if labels.max() > 9:
        raise FormatError("labels outside 0..9")
    planes = raw[:, 1:].reshape(count, 3, 32, 32)
    images = np.transpose(planes, (0, 2, 3, 1)).copy()  # HWC, channels R,G,B
    return LabeledImageSet(images=images, labels=labels)


def filter_by_label(dataset: LabeledImageSet, label: int) -> LabeledImageSet:
    mask = dataset.labels == label
    return LabeledImageSet(images=dataset.images[mask], labels=dataset.labels[mask])


MANIFEST_SCHEMA_VERSION = 1


@dataclass
class ManifestLayer:
    name: str
    file: str
    shape: tuple[int, ...]


@dataclass
class RunManifest:
    """Index of per-layer activation dumps produced by one export/profile run."""

    model_name: str
    weights_origin: str  # 'randomized' | 'pretrained'
    input_desc: str
    seed: int | None
    layers: list[ManifestLayer] = field(default_factory=list)
    schema_version: int = MANIFEST_SCHEMA_VERSION

    def __post_init__(self) -> None:
        if self.weights_origin not in ("randomized", "pretrained"):
            raise ManifestError("weights_origin must be 'randomized' or 'pretrained'")
        names = [layer.name for layer in self.layers]
        if len(set(names)) != len(names):
            raise ManifestError("duplicate layer names in manifest")


def write_manifest(m: RunManifest, path: str | Path) -> None:
    doc = {
        "schema_version": m.schema_version,
        "model_name": m.model_name,
        "weights_origin": m.weights_origin,
        "input_desc": m.input_desc,
        "seed": m.seed,
        "layers": [
            {"name": l.name, "file": l.file, "shape": list(l.shape)} for l in m.layers
        ],
    }
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def read_manifest(path: str | Path, check_files: bool = True) -> RunManifest:
    """Load and validate a manifest; unknown JSON fields are ignored."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    for key in ("schema_version", "model_name", "weights_origin", "layers"):
        if key not in doc:
            raise ManifestError(f"manifest missing required field {key!r}")
    layers = []
    for entry in doc["layers"]:
        for key in ("name", "file", "shape"):
            if key not in entry:
                raise ManifestError(f"layer entry missing {key!r}: {entry!r}")
        layers.append(
            ManifestLayer(
                name=entry["name"],
                file=entry["file"],
                shape=tuple(int(d) for d in entry["shape"]),
            )
        )
    manifest = RunManifest(
        model_name=doc["model_name"],
        weights_origin=doc["weights_origin"],
        input_desc=doc.get("input_desc", ""),
        seed=doc.get("seed"),
        layers=layers,
        schema_version=int(doc["schema_version"]),
    )
    if check_files:
        base = path.parent
        for layer in manifest.layers:
            file_path = base / layer.file
            if not file_path.exists():
                raise ManifestError(f"layer {layer.name!r}: missing file {file_path}")
            try:
                shape, _ = read_npy_header(file_path)
            except FormatError as exc:
                raise ManifestError(f"layer {layer.name!r}: {exc}") from exc
            if tuple(shape) != layer.shape:
                raise ManifestError(
                    f"layer {layer.name!r}: manifest shape {layer.shape} "
                    f"!= file shape {tuple(shape)}"
                )
    return manifest
