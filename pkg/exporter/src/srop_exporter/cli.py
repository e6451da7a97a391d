"""Exporter CLI: activation dumps and CASE-CNN training runs."""

from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

from .export import ExportJob, export_activations
from .models import ExportError, model_ids


def _cmd_export(args) -> int:
    image_dir = Path(args.images)
    paths = sorted(image_dir.glob("*.npy"))
    if not paths:
        raise ExportError(f"no .npy images in {image_dir}")
    taps = None if args.taps == "table1" else [t.strip() for t in args.taps.split(",")]
    job = ExportJob(
        model_id=args.model,
        out_dir=Path(args.out),
        image_paths=paths,
        weights=args.weights,
        seed=args.seed,
        taps=taps,
        batch_size=args.batch_size,
    )
    manifest = export_activations(job)
    print(f"wrote {manifest}")
    return 0


def _cmd_traincase(args) -> int:
    from .casecnn import run_traincase

    metrics = run_traincase(
        args.mode,
        args.w,
        Path(args.out),
        dataset_dir=Path(args.dataset) if args.dataset else None,
        digits=Path(args.digits) if args.digits else None,
        labels=Path(args.labels) if args.labels else None,
        epochs=args.epochs,
        lr=args.lr,
        seed=args.seed,
        max_dump=args.max_dump,
    )
    print(
        f"{metrics['mode']} w={metrics['w']}: "
        f"test accuracy {metrics['test_accuracy']:.4f} "
        f"({metrics['train_samples']} train / {metrics['test_samples']} test)"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srop-exporter",
        description="Dump backbone activations and train the blended-digit CNN "
        "for roll-off analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="dump tap activations as NPY + manifest")
    p.add_argument("--model", required=True, choices=model_ids())
    p.add_argument("--weights", default="pretrained", choices=["pretrained", "random"])
    p.add_argument("--taps", default="table1",
                   help="'table1' for the full block-row set, or comma-separated names")
    p.add_argument("--images", required=True, help="directory of (3,224,224) NPY images")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=8)
    p.set_defaults(handler=_cmd_export)

    p = sub.add_parser("traincase", help="train the CASE CNN and dump its last conv")
    p.add_argument("--mode", required=True, choices=["CASE_I", "CASE_II"])
    p.add_argument("--w", required=True, type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--dataset", help="existing blended dataset dir (from sropkit synth)")
    p.add_argument("--digits", help="IDX digit images (falls back to bundled digits)")
    p.add_argument("--labels", help="IDX digit labels")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-dump", type=int, default=2000)
    p.set_defaults(handler=_cmd_traincase)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except (ExportError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
