"""Command-line interface: every analysis pipeline as a subcommand.

Artifacts land in --out: CSV (authoritative), optional JSON, and SVG figures
(matplotlib).  Every run writes a run.json sidecar capturing the exact
invocation, so `sropkit replay run.json` reproduces the outputs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ParameterError, SropkitError
from .spectral import (
    DEFAULT_KAPPA,
    FeatureMapTensor,
    power_spectrum_1d,
    srop_2d,
    srop_feature_map,
    srop_from_spectrum,
)
from .stats import (
    kde_estimate,
    layer_stats,
    profile_csv_text,
    profile_series,
    sample_scalarize,
)
from .synth import (
    CASE_I,
    CASE_II,
    BlendSpec,
    emit_dataset,
    frog_from_cifar,
    generate_dataset,
    prepare_frog,
)
from .tensorio import (
    atomic_write_bytes,
    atomic_write_text,
    load_npy,
    read_cifar10_batch,
    read_manifest,
    read_mnist_idx,
)

_FORMATS = ("csv", "json", "svg")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kappa", type=float, default=DEFAULT_KAPPA,
                        help="cumulative-energy cut fraction in (0, 1]")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=Path("."),
                        help="output directory for artifacts")
    parser.add_argument("--format", action="append", choices=_FORMATS, default=None,
                        help="emit format (repeatable); default csv")
    parser.add_argument("--exclude-dc", action="store_true",
                        help="drop the zero-frequency bin before the roll-off")
    parser.add_argument("--power-spectrum", action="store_true",
                        help="use squared magnitudes (|F|^2) instead of |F|")
    parser.add_argument("--luminance", action="store_true",
                        help="convert RGB inputs to Rec.601 luminance first")


def _formats(args) -> list[str]:
    return args.format if args.format else ["csv"]


def _check_kappa(args) -> None:
    if not (0.0 < args.kappa <= 1.0):
        raise ParameterError("kappa must lie in (0, 1]")


def _write_run_sidecar(args, argv: list[str]) -> None:
    args.out.mkdir(parents=True, exist_ok=True)
    doc = {"tool": "sropkit", "version": __version__, "argv": list(argv)}
    atomic_write_text(args.out / "run.json", json.dumps(doc, indent=2) + "\n")


def _to_cnn_layout(arr: np.ndarray, luminance: bool) -> np.ndarray:
    """Normalize an image array to (channels, n, n) float32."""
    x = np.asarray(arr, dtype=np.float32)
    if x.ndim == 2:
        x = x[None, :, :]
    if x.ndim != 3:
        raise ParameterError(f"expected (n, n) or (c, n, n) image, got {x.shape}")
    if luminance and x.shape[0] == 3:
        weights = np.array([0.299, 0.587, 0.114], dtype=np.float32)
        x = np.tensordot(weights, x, axes=(0, 0))[None, :, :]
    return x


def _load_image_dir(path: Path, luminance: bool) -> list[np.ndarray]:
    files = sorted(path.glob("*.npy"))
    if not files:
        raise ParameterError(f"no .npy images found in {path}")
    images = [_to_cnn_layout(load_npy(f), luminance) for f in files]
    shapes = {img.shape for img in images}
    if len(shapes) != 1:
        raise ParameterError(f"images in {path} have mixed shapes: {shapes}")
    return images


def _emit_rows(rows: list[dict], args, stem: str, figure=None) -> None:
    for fmt in _formats(args):
        target = args.out / f"{stem}.{fmt}"
        if fmt == "csv":
            atomic_write_text(target, profile_csv_text(rows))
        elif fmt == "json":
            atomic_write_text(target, json.dumps(rows, indent=2) + "\n")
        elif fmt == "svg":
            if figure is None:
                continue
            figure(rows, target)
            if not target.exists():
                continue
        print(f"wrote {target}")


def _emit_table(records: list[dict], header: list[str], args, stem: str) -> None:
    for fmt in _formats(args):
        if fmt == "svg":
            continue
        target = args.out / f"{stem}.{fmt}"
        if fmt == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(header)
            for rec in records:
                writer.writerow([rec[h] for h in header])
            atomic_write_text(target, buf.getvalue())
        else:
            atomic_write_text(target, json.dumps(records, indent=2) + "\n")
        print(f"wrote {target}")


def _cmd_srop1d(args, argv) -> int:
    _check_kappa(args)
    path = Path(args.file)
    if path.suffix == ".npy":
        signal = load_npy(path).ravel()
    else:
        tokens = path.read_text(encoding="utf-8").replace(",", " ").split()
        signal = np.array([float(tok) for tok in tokens])
    spectrum = power_spectrum_1d(signal, squared=args.power_spectrum)
    if args.exclude_dc:
        spectrum = power_spectrum_1d(
            signal, band=(1, signal.size // 2), squared=args.power_spectrum
        )
    value = srop_from_spectrum(spectrum, args.kappa)
    _write_run_sidecar(args, argv)
    record = {
        "file": str(path),
        "bin": value.bin,
        "normalized": value.normalized,
        "kappa": value.kappa,
        "band_lo": spectrum.band_lo,
        "band_hi": spectrum.band_hi,
    }
    _emit_table([record], list(record), args, "srop1d")
    print(f"srop bin={value.bin} normalized={value.normalized:.6f}")
    return 0


def _cmd_sropimg(args, argv) -> int:
    _check_kappa(args)
    image = _to_cnn_layout(load_npy(Path(args.file)), args.luminance)
    records = []
    for channel_index in range(image.shape[0]):
        value = srop_2d(
            image[channel_index],
            args.kappa,
            squared=args.power_spectrum,
            exclude_dc=args.exclude_dc,
        )
        records.append(
            {
                "file": str(args.file),
                "channel": channel_index,
                "bin": value.bin,
                "normalized": value.normalized,
                "kappa": value.kappa,
            }
        )
    _write_run_sidecar(args, argv)
    _emit_table(records, list(records[0]), args, "sropimg")
    for rec in records:
        print(f"channel {rec['channel']}: srop normalized={rec['normalized']:.6f}")
    return 0


def _cmd_sroptensor(args, argv) -> int:
    _check_kappa(args)
    data = load_npy(Path(args.file))
    if data.ndim != 3:
        raise ParameterError(f"expected a (c, n, n) tensor, got shape {data.shape}")
    tensor = FeatureMapTensor(data=data, layer_name=Path(args.file).stem)
    values = srop_feature_map(
        tensor, args.kappa, squared=args.power_spectrum, exclude_dc=args.exclude_dc
    )
    present = [v.normalized for v in values if v is not None]
    skipped = sum(1 for v in values if v is None)
    if not present:
        raise ParameterError("all channels have zero energy")
    report = layer_stats(present, tensor.layer_name, tensor.size, skipped_channels=skipped)
    rows = profile_series([report])
    _write_run_sidecar(args, argv)

    def kde_fig(_rows, target):
        if len(set(present)) >= 2:
            from .plots import kde_figure

            kde_figure(kde_estimate(present), target, title=tensor.layer_name)

    _emit_rows(rows, args, "sroptensor", figure=kde_fig)
    per_channel = [
        {"channel": i, "normalized": (v.normalized if v is not None else ""),
         "missing": v is None}
        for i, v in enumerate(values)
    ]
    _emit_table(per_channel, ["channel", "normalized", "missing"], args, "sroptensor_channels")
    print(f"mean={report.mean:.6f} skipped={skipped}/{tensor.channels}")
    return 0


def _cmd_profile(args, argv) -> int:
    _check_kappa(args)
    manifest_path = Path(args.manifest)
    manifest = read_manifest(manifest_path)
    base = manifest_path.parent
    reports = []
    for layer in manifest.layers:
        data = load_npy(base / layer.file)
        if data.ndim == 3:
            data = data[None, ...]
        if data.ndim != 4:
            raise ParameterError(
                f"layer {layer.name!r}: expected (c, n, n) or (N, c, n, n), got {data.shape}"
            )
        scale = data.shape[-1] / args.input_size
        values: list[float] = []
        skipped = 0
        for sample in data:
            tensor = FeatureMapTensor(
                data=sample, layer_name=layer.name, source=manifest.weights_origin
            )
            for v in srop_feature_map(
                tensor, args.kappa, squared=args.power_spectrum, exclude_dc=args.exclude_dc
            ):
                if v is None:
                    skipped += 1
                else:
                    values.append(v.normalized * scale)
        reports.append(
            layer_stats(values, layer.name, data.shape[-1], skipped_channels=skipped)
        )
    rows = profile_series(reports)
    _write_run_sidecar(args, argv)

    def fig(rows_, target):
        from .plots import profile_figure

        profile_figure(rows_, target, title=f"{manifest.model_name} ({manifest.weights_origin})")

    _emit_rows(rows, args, "profile", figure=fig)
    return 0


def _cmd_baseline(args, argv) -> int:
    from .randnet import benchmark_downscale

    _check_kappa(args)
    images = _load_image_dir(Path(args.images), args.luminance)
    reports = benchmark_downscale(
        images, args.kappa, squared=args.power_spectrum, exclude_dc=args.exclude_dc
    )
    rows = profile_series(reports)
    _write_run_sidecar(args, argv)

    def fig(rows_, target):
        from .plots import ladder_figure

        ladder_figure(rows_, target, title="benchmark downscale ladder")

    _emit_rows(rows, args, "baseline", figure=fig)
    return 0


def _cmd_randnet(args, argv) -> int:
    from .randnet import export_activations, load_config, run_profile

    _check_kappa(args)
    spec = load_config(args.config)
    images = _load_image_dir(Path(args.images), args.luminance)
    if args.dump:
        manifest = export_activations(spec, images, args.seed, args.dump)
        print(f"wrote {manifest}")
    reports = run_profile(
        spec,
        images,
        seed=args.seed,
        kappa=args.kappa,
        squared=args.power_spectrum,
        exclude_dc=args.exclude_dc,
    )
    rows = profile_series(reports)
    _write_run_sidecar(args, argv)

    def fig(rows_, target):
        from .plots import profile_figure

        profile_figure(rows_, target, title=f"{spec.name} (randomized, seed {args.seed})")

    _emit_rows(rows, args, f"randnet_{spec.name}", figure=fig)
    return 0


def _cmd_synth(args, argv) -> int:
    digits = read_mnist_idx(
        Path(args.digits).read_bytes(), Path(args.labels).read_bytes()
    )
    if args.frog_cifar:
        batch = read_cifar10_batch(Path(args.frog_cifar).read_bytes())
        frog, origin = frog_from_cifar(batch, args.frog_index)
    elif args.frog_npy:
        frog = load_npy(Path(args.frog_npy))
        origin = f"npy:{args.frog_npy}"
    else:
        raise ParameterError("provide --frog-cifar or --frog-npy")
    spec = BlendSpec(
        mode=args.mode,
        w=args.w,
        frog_image=frog,
        digit_source=digits,
        seed=args.seed,
        frog_origin=origin,
    )
    dataset, provenance = generate_dataset(spec)
    _write_run_sidecar(args, argv)
    probe = prepare_frog(spec.frog_image, dataset.images.shape[1])
    paths = emit_dataset(dataset, provenance, args.out, frog_probe=probe)
    for value in paths.values():
        print(f"wrote {value}")
    return 0


def _cmd_kde(args, argv) -> int:
    data = load_npy(Path(args.file))
    values = sample_scalarize(data, mode="pooled" if args.pooled else "per_sample_mean")
    curve = kde_estimate(values, grid_points=args.grid_points)
    _write_run_sidecar(args, argv)
    records = [
        {"grid": float(g), "density": float(d)}
        for g, d in zip(curve.grid, curve.density)
    ]
    _emit_table(records, ["grid", "density"], args, "kde")
    if "svg" in _formats(args):
        from .plots import kde_figure

        target = args.out / "kde.svg"
        kde_figure(curve, target)
        print(f"wrote {target}")
    meta = {
        "bandwidth": curve.bandwidth,
        "peaks": [float(p) for p in curve.peaks()],
        "samples": int(values.size),
    }
    atomic_write_text(args.out / "kde_meta.json", json.dumps(meta, indent=2) + "\n")
    print(f"bandwidth={curve.bandwidth:.6f} peaks={meta['peaks']}")
    return 0


def _cmd_corpus(args, argv) -> int:
    from .corpus import write_corpus

    _write_run_sidecar(args, argv)
    paths = write_corpus(args.out, count=args.count, size=args.size, seed=args.seed)
    print(f"wrote {len(paths)} images to {args.out}")
    return 0


def _cmd_replay(args, argv) -> int:
    doc = json.loads(Path(args.run_json).read_text(encoding="utf-8"))
    if "argv" not in doc:
        raise ParameterError("run.json has no argv record")
    print(f"replaying: sropkit {' '.join(doc['argv'])}")
    return dispatch(doc["argv"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sropkit",
        description="Spectral roll-off analysis of signals, images, and CNN feature maps.",
    )
    parser.add_argument("--version", action="version", version=f"sropkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("srop1d", help="roll-off of a 1-D series (.npy or text)")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(handler=_cmd_srop1d)

    p = sub.add_parser("sropimg", help="per-image roll-off of an NPY image")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(handler=_cmd_sropimg)

    p = sub.add_parser("sroptensor", help="per-channel roll-offs + stats of a (c,n,n) NPY")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(handler=_cmd_sroptensor)

    p = sub.add_parser("profile", help="layer-wise report from an activation manifest")
    p.add_argument("manifest")
    p.add_argument("--input-size", type=int, default=224,
                   help="input resolution the layer band is referred to")
    _add_common(p)
    p.set_defaults(handler=_cmd_profile)

    p = sub.add_parser("baseline", help="benchmark max-pool downscale ladder over an image dir")
    p.add_argument("images", help="directory of .npy images")
    _add_common(p)
    p.set_defaults(handler=_cmd_baseline)

    p = sub.add_parser("randnet", help="randomized backbone profile over an image dir")
    p.add_argument("config", help="preset name (e.g. vgg16_bn) or config JSON path")
    p.add_argument("images", help="directory of .npy images")
    p.add_argument("--dump", type=Path, default=None,
                   help="also export tap activations as NPY + manifest to this dir")
    _add_common(p)
    p.set_defaults(handler=_cmd_randnet)

    p = sub.add_parser("synth", help="generate a blended object+digit dataset")
    p.add_argument("mode", choices=[CASE_I, CASE_II])
    p.add_argument("w", type=float)
    p.add_argument("--digits", required=True, help="IDX image file")
    p.add_argument("--labels", required=True, help="IDX label file")
    p.add_argument("--frog-cifar", help="CIFAR-10 binary batch to take the object image from")
    p.add_argument("--frog-index", type=int, default=0)
    p.add_argument("--frog-npy", help="object image as (h, w, 3) u8 NPY")
    _add_common(p)
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("kde", help="density of roll-off values from an NPY")
    p.add_argument("file")
    p.add_argument("--grid-points", type=int, default=256)
    p.add_argument("--pooled", action="store_true",
                   help="pool all kernels instead of per-sample means")
    _add_common(p)
    p.set_defaults(handler=_cmd_kde)

    p = sub.add_parser("corpus", help="write bundled natural-image crops as NPY files")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--size", type=int, default=224)
    _add_common(p)
    p.set_defaults(handler=_cmd_corpus)

    p = sub.add_parser("replay", help="re-run a recorded run.json invocation")
    p.add_argument("run_json")
    p.set_defaults(handler=_cmd_replay)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if hasattr(args, "out"):
            args.out.mkdir(parents=True, exist_ok=True)
        return args.handler(args, argv)
    except (SropkitError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
