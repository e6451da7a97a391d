"""Container formats: NPY round-trips, IDX/CIFAR parsing, manifest validation."""

import numpy as np
import pytest

from sropkit import (
    BadMagicError,
    FormatError,
    ManifestError,
    ShapeMismatchError,
    UnsupportedDtypeError,
)
from sropkit.tensorio import (
    LabeledImageSet,
    ManifestLayer,
    NpyTensor,
    RunManifest,
    filter_by_label,
    load_npy,
    mnist_to_float,
    read_cifar10_batch,
    read_manifest,
    read_mnist_idx,
    read_npy,
    read_npy_header,
    save_npy,
    write_manifest,
    write_npy,
)
from conftest import make_cifar_batch, make_idx_pair


class TestNpy:
    def test_payload_size_for_2x3_f32(self):
        buf = write_npy(np.zeros((2, 3), dtype=np.float32))
        tensor = read_npy(buf)
        header_len = len(buf) - 24
        assert buf[header_len:] == b"\x00" * 24
        assert tensor.shape == (2, 3) and tensor.dtype == "f32_le"

    def test_header_block_aligned_and_newline_terminated(self):
        buf = write_npy(np.zeros(5, dtype=np.float64))
        hlen = int.from_bytes(buf[8:10], "little")
        assert (10 + hlen) % 64 == 0
        assert buf[10 + hlen - 1] == ord("\n")

    def test_round_trip_bit_identical(self):
        rng = np.random.default_rng(0)
        for dtype in (np.float32, np.float64, np.uint8):
            arr = (rng.random((3, 4, 5)) * 100).astype(dtype)
            buf = write_npy(arr)
            again = write_npy(read_npy(buf))
            assert again == buf

    def test_numpy_reads_our_files(self, tmp_path):
        arr = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
        path = tmp_path / "ours.npy"
        save_npy(path, arr)
        loaded = np.load(path)
        np.testing.assert_array_equal(loaded, arr)
        assert loaded.dtype == arr.dtype

    def test_we_read_numpy_files(self, tmp_path):
        rng = np.random.default_rng(1)
        for arr in (
            rng.random((7,)).astype(np.float64),
            rng.random((2, 2)).astype(np.float32),
            (rng.random((4, 1, 3)) * 255).astype(np.uint8),
        ):
            path = tmp_path / "theirs.npy"
            np.save(path, arr)
            tensor = read_npy(path.read_bytes())
            np.testing.assert_array_equal(tensor.to_array(), arr)

    def test_corrupt_magic_rejected(self):
        buf = bytearray(write_npy(np.ones(3, dtype=np.float32)))
        buf[0] ^= 0xFF
        with pytest.raises(BadMagicError):
            read_npy(bytes(buf))

    def test_unsupported_version_rejected(self):
        buf = bytearray(write_npy(np.ones(3, dtype=np.float32)))
        buf[6] = 2
        with pytest.raises(FormatError):
            read_npy(bytes(buf))

    def test_unsupported_dtype_rejected(self, tmp_path):
        path = tmp_path / "i8.npy"
        np.save(path, np.ones(3, dtype=np.int64))
        with pytest.raises(UnsupportedDtypeError):
            read_npy(path.read_bytes())

    def test_truncated_and_padded_payloads_rejected(self):
        buf = write_npy(np.ones((2, 2), dtype=np.float32))
        with pytest.raises(ShapeMismatchError):
            read_npy(buf[:-1])
        with pytest.raises(ShapeMismatchError):
            read_npy(buf + b"\x00")

    def test_fortran_order_rejected(self):
        buf = write_npy(np.ones((2, 2), dtype=np.float32))
        patched = buf.replace(b"'fortran_order': False", b"'fortran_order': True ")
        with pytest.raises(FormatError):
            read_npy(patched)

    def test_header_reader_matches_full_parse(self, tmp_path):
        path = tmp_path / "t.npy"
        save_npy(path, np.zeros((6, 7), dtype=np.float64))
        shape, tag = read_npy_header(path)
        assert shape == (6, 7) and tag == "f64_le"

    def test_fuzz_round_trip(self):
        rng = np.random.default_rng(2)
        dtypes = (np.float32, np.float64, np.uint8)
        for _ in range(50):
            ndim = int(rng.integers(1, 5))
            shape = tuple(int(rng.integers(1, 6)) for _ in range(ndim))
            arr = (rng.random(shape) * 200).astype(dtypes[int(rng.integers(0, 3))])
            buf = write_npy(arr)
            tensor = read_npy(buf)
            np.testing.assert_array_equal(tensor.to_array(), arr)
            assert write_npy(tensor) == buf

    def test_tensor_shape_consistency_enforced(self):
        with pytest.raises(ShapeMismatchError):
            NpyTensor(shape=(2, 3), dtype="f32_le", data=np.zeros(5, dtype=np.float32))


class TestMnistIdx:
    def test_parse_synthetic_pair(self, digit_set, idx_files):
        images, labels = digit_set
        parsed = read_mnist_idx(*idx_files)
        assert len(parsed) == len(images)
        assert parsed.images.shape == (len(images), 28, 28)
        np.testing.assert_array_equal(parsed.images, images)
        np.testing.assert_array_equal(parsed.labels, labels)
        assert parsed.labels.max() <= 9
        assert parsed.images.size == len(images) * 784

    def test_image_magic_rejected(self, idx_files):
        images_bytes, labels_bytes = idx_files
        bad = b"\x00\x00\x08\x04" + images_bytes[4:]
        with pytest.raises(BadMagicError):
            read_mnist_idx(bad, labels_bytes)

    def test_label_magic_rejected(self, idx_files):
        images_bytes, labels_bytes = idx_files
        bad = b"\x00\x00\x08\x02" + labels_bytes[4:]
        with pytest.raises(BadMagicError):
            read_mnist_idx(images_bytes, bad)

    def test_truncation_rejected(self, idx_files):
        images_bytes, labels_bytes = idx_files
        with pytest.raises(ShapeMismatchError):
            read_mnist_idx(images_bytes[:-1], labels_bytes)
        with pytest.raises(ShapeMismatchError):
            read_mnist_idx(images_bytes, labels_bytes[:-1])

    def test_count_mismatch_rejected(self, digit_set):
        images, labels = digit_set
        images_bytes, _ = make_idx_pair(images, labels)
        _, labels_bytes = make_idx_pair(images[:10], labels[:10])
        with pytest.raises(ShapeMismatchError):
            read_mnist_idx(images_bytes, labels_bytes)

    def test_float_promotion(self, digit_set):
        images, _ = digit_set
        floats = mnist_to_float(images)
        assert floats.dtype == np.float32
        assert floats.min() >= 0.0 and floats.max() <= 1.0
        np.testing.assert_allclose(floats, images.astype(np.float32) / 255.0)


class TestCifar:
    def test_parse_synthetic_batch(self, cifar_batch_bytes):
        batch = read_cifar10_batch(cifar_batch_bytes)
        assert batch.images.shape == (30, 32, 32, 3)
        assert len(cifar_batch_bytes) == 30 * 3073

    def test_plane_order_preserved(self):
        # one record with distinct constant R/G/B planes
        img = np.zeros((1, 32, 32, 3), dtype=np.uint8)
        img[0, :, :, 0] = 10
        img[0, :, :, 1] = 20
        img[0, :, :, 2] = 30
        parsed = read_cifar10_batch(make_cifar_batch(img, np.array([6])))
        assert parsed.images[0, 0, 0].tolist() == [10, 20, 30]
        assert parsed.labels[0] == 6

    def test_filter_by_label(self, cifar_batch_bytes):
        batch = read_cifar10_batch(cifar_batch_bytes)
        frogs = filter_by_label(batch, 6)
        assert len(frogs) == 3
        assert set(frogs.labels.tolist()) == {6}

    def test_bad_length_rejected(self, cifar_batch_bytes):
        with pytest.raises(ShapeMismatchError):
            read_cifar10_batch(cifar_batch_bytes[:-1])
        with pytest.raises(ShapeMismatchError):
            read_cifar10_batch(b"")


def _sample_manifest(tmp_path, shapes=((8, 28, 28), (16, 14, 14))):
    rng = np.random.default_rng(3)
    layers = []
    for i, shape in enumerate(shapes):
        name = f"layer{i}"
        save_npy(tmp_path / f"{name}.npy", rng.random(shape).astype(np.float32))
        layers.append(ManifestLayer(name=name, file=f"{name}.npy", shape=shape))
    manifest = RunManifest(
        model_name="toy",
        weights_origin="randomized",
        input_desc="synthetic",
        seed=7,
        layers=layers,
    )
    path = tmp_path / "manifest.json"
    write_manifest(manifest, path)
    return manifest, path


class TestManifest:
    def test_round_trip(self, tmp_path):
        manifest, path = _sample_manifest(tmp_path)
        loaded = read_manifest(path)
        assert loaded.model_name == manifest.model_name
        assert loaded.weights_origin == manifest.weights_origin
        assert loaded.seed == manifest.seed
        assert [(l.name, l.file, l.shape) for l in loaded.layers] == [
            (l.name, l.file, l.shape) for l in manifest.layers
        ]

    def test_duplicate_layer_names_rejected(self, tmp_path):
        with pytest.raises(ManifestError):
            RunManifest(
                model_name="toy",
                weights_origin="randomized",
                input_desc="",
                seed=0,
                layers=[
                    ManifestLayer("a", "a.npy", (1, 3, 3)),
                    ManifestLayer("a", "b.npy", (1, 3, 3)),
                ],
            )

    def test_shape_disagreement_rejected(self, tmp_path):
        import json

        _, path = _sample_manifest(tmp_path)
        doc = json.loads(path.read_text())
        doc["layers"][0]["shape"] = [8, 28, 29]
        path.write_text(json.dumps(doc))
        with pytest.raises(ManifestError):
            read_manifest(path)

    def test_missing_file_rejected(self, tmp_path):
        _, path = _sample_manifest(tmp_path)
        (tmp_path / "layer0.npy").unlink()
        with pytest.raises(ManifestError):
            read_manifest(path)

    def test_missing_required_field_rejected(self, tmp_path):
        import json

        _, path = _sample_manifest(tmp_path)
        doc = json.loads(path.read_text())
        del doc["weights_origin"]
        path.write_text(json.dumps(doc))
        with pytest.raises(ManifestError):
            read_manifest(path)

    def test_unknown_fields_ignored(self, tmp_path):
        import json

        _, path = _sample_manifest(tmp_path)
        doc = json.loads(path.read_text())
        doc["future_extension"] = {"x": 1}
        path.write_text(json.dumps(doc))
        loaded = read_manifest(path)
        assert loaded.model_name == "toy"

    def test_bad_origin_rejected(self):
        with pytest.raises(ManifestError):
            RunManifest(
                model_name="toy", weights_origin="trained", input_desc="", seed=0
            )


class TestLoadSave:
    def test_file_round_trip(self, tmp_path):
        arr = np.random.default_rng(4).random((3, 5)).astype(np.float32)
        path = tmp_path / "x.npy"
        save_npy(path, arr)
        np.testing.assert_array_equal(load_npy(path), arr)

    def test_filter_returns_aligned_sets(self):
        data = LabeledImageSet(
            images=np.arange(12).reshape(4, 3), labels=np.array([1, 6, 6, 2])
        )
        frogs = filter_by_label(data, 6)
        np.testing.assert_array_equal(frogs.images, data.images[1:3])
