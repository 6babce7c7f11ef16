"""Command-line interface.

Machine-readable results go to stdout as ``key=value`` lines; progress and
human-oriented tables go to stderr.  Exit codes: 0 success, 1 usage error,
2 data error (unreadable files, failed validation, and similar).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import manifest as mf
from . import predictions as pr
from . import sizing
from . import training as tr
from .metrics import (
    confusion_matrix,
    one_vs_rest_report,
    read_matrix_csv,
    render_report,
    write_matrix_csv,
)
from .cnn import ConvNet
from .imgio import load_image, write_mask_pgm
from .raster import ensure_grayscale
from .rng import DEFAULT_SEED
from .segmentation import binarize, connected_components, morph_open

PAGE_COVERAGE_MIN = 0.05  # reference page must cover at least 5% of the frame


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this tool reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(key, value):
    print(f"{key}={value}")


def _info(message):
    print(message, file=sys.stderr)


def _page_mm(text: str) -> tuple[float, float]:
    try:
        w_text, h_text = text.lower().split("x")
        width, height = float(w_text), float(h_text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT in mm, got {text!r}") from None
    if width <= 0 or height <= 0:
        raise argparse.ArgumentTypeError("page dimensions must be positive")
    return width, height


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pavesize", description="Pothole sizing and classification toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("calibrate", help="derive a mm^2-per-pixel profile from a reference page photo")
    p.add_argument("--image", required=True, help="photo with the reference page in frame")
    p.add_argument("--height-label", default=sizing.ANY_HEIGHT, help="capture height tag stored in the profile")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--page-mm", type=_page_mm, default=sizing.DEFAULT_PAGE_MM,
                       help="reference page size as WIDTHxHEIGHT in mm (default 210x270)")
    group.add_argument("--true-a4", action="store_true", help="use the true ISO A4 size 210x297 mm")
    p.add_argument("--out", required=True, help="profile JSON to write")

    p = sub.add_parser("measure", help="measure and classify a pothole image against a profile")
    p.add_argument("--image", required=True)
    p.add_argument("--profile", required=True, help="calibration profile JSON")
    p.add_argument("--threshold", type=int, default=None,
                   help="fixed binarization threshold 0..255 (default: Otsu)")
    p.add_argument("--open-radius", type=int, default=1, help="morphological opening radius (default 1)")
    p.add_argument("--largest-region", action="store_true",
                   help="measure only the largest connected region instead of all foreground")
    p.add_argument("--height-label", default=None, help="height tag of the image, checked against the profile")
    p.add_argument("--min-detect-mm2", type=float, default=sizing.DEFAULT_MIN_DETECT_MM2)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--large-cutoff-mm2", type=float, default=None)
    group.add_argument("--contact-shape", choices=sorted(sizing.CONTACT_AREAS),
                       help="pick the Large cutoff from a tire imprint model (default circular)")
    p.add_argument("--mask-out", default=None, help="write the cleaned-up binary mask as PGM")

    p = sub.add_parser("split", help="stratified train/test split of a manifest")
    p.add_argument("--manifest", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--test-count", type=int, default=None, help="test records per class")
    group.add_argument("--test-fraction", type=float, default=None, help="test fraction per class")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)

    p = sub.add_parser("train", help="train the baseline convolutional classifier")
    p.add_argument("--train-manifest", required=True)
    p.add_argument("--val-manifest", default=None)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--width", type=int, default=224)
    p.add_argument("--height", type=int, default=224)
    p.add_argument("--channels", type=int, default=3, choices=(1, 3))
    p.add_argument("--model-out", required=True, help="model file to write (.npz)")
    p.add_argument("--loss-csv", default=None, help="write per-iteration loss trace CSV")
    p.add_argument("--val-csv", default=None, help="write per-epoch validation accuracy CSV")

    p = sub.add_parser("predict", help="run a trained model over a manifest or one image")
    p.add_argument("--model", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--manifest", default=None)
    group.add_argument("--image", default=None)
    p.add_argument("--out", default=None, help="predictions CSV (required with --manifest)")

    p = sub.add_parser("evaluate", help="score predictions against a labeled manifest")
    p.add_argument("--truth", required=True, help="labeled manifest CSV")
    p.add_argument("--predictions", required=True, help="predictions CSV")
    p.add_argument("--matrix-out", default=None, help="write the confusion matrix CSV")
    p.add_argument("--report-out", default=None, help="write the per-class metrics CSV")

    p = sub.add_parser("report", help="render per-class metrics from a confusion matrix CSV")
    p.add_argument("--matrix", required=True)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--paper-table3-layout", action="store_true",
                   help="swap the precision/recall column placement to match the published table layout")
    p.add_argument("--out", default=None, help="write here instead of stdout")

    return parser


def _cmd_calibrate(args) -> int:
    image = ensure_grayscale(load_image(args.image))
    mask = binarize(image, polarity="bright")
    regions = connected_components(mask)
    frame_pixels = image.width * image.height
    if not regions or regions[0].pixel_count < PAGE_COVERAGE_MIN * frame_pixels:
        raise ValueError("reference page not found")
    page_w, page_h = sizing.TRUE_A4_PAGE_MM if args.true_a4 else args.page_mm
    calibration = sizing.CalibrationInput(
        reference_area_mm2=page_w * page_h,
        reference_pixel_count=regions[0].pixel_count,
        height_label=args.height_label,
    )
    scale = sizing.write_profile(calibration, args.out)
    _info(f"page region: {regions[0].pixel_count} px of {frame_pixels} in frame")
    _emit("reference_pixel_count", calibration.reference_pixel_count)
    _emit("mm2_per_pixel", repr(scale.mm2_per_pixel))
    return 0


def _cmd_measure(args) -> int:
    scale, _ = sizing.read_profile(args.profile)
    if args.height_label is not None:
        sizing.ensure_height_match(scale.height_label, args.height_label)
    image = ensure_grayscale(load_image(args.image))
    mask = morph_open(binarize(image, threshold=args.threshold), args.open_radius)
    if args.mask_out:
        write_mask_pgm(mask, args.mask_out)
    mode = "largest_region" if args.largest_region else "all_foreground"
    area = sizing.measure_area(mask, scale, mode=mode)
    cutoff = args.large_cutoff_mm2
    if cutoff is None:
        shape = args.contact_shape or "circular"
        cutoff = sizing.contact_area_lookup(shape).area_mm2
    thresholds = sizing.SizeThresholds(large_cutoff_mm2=cutoff, min_detect_mm2=args.min_detect_mm2)
    _emit("area_mm2", repr(area))
    _emit("class", sizing.classify_area(area, thresholds).name)
    return 0


def _cmd_split(args) -> int:
    source = Path(args.manifest)
    data = mf.read_manifest(source)
    spec = mf.SplitSpec(test_count=args.test_count, test_fraction=args.test_fraction, seed=args.seed)
    train_set, test_set = mf.stratified_split(data, spec)
    for out in (args.out_train, args.out_test):
        if Path(out).resolve().parent != source.resolve().parent:
            _info(f"note: {out} is outside the source manifest directory; "
                  "relative image paths still resolve against the source location")
    mf.write_manifest(train_set, args.out_train)
    mf.write_manifest(test_set, args.out_test)
    _emit("train_count", len(train_set.records))
    _emit("test_count", len(test_set.records))
    return 0


def _cmd_train(args) -> int:
    cfg = tr.TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
        input_width=args.width,
        input_height=args.height,
        input_channels=args.channels,
    )
    train_manifest = mf.read_manifest(args.train_manifest)
    train_pairs = tr.load_labeled_images(train_manifest, Path(args.train_manifest).parent)
    val_pairs = []
    if args.val_manifest:
        val_manifest = mf.read_manifest(args.val_manifest)
        val_pairs = tr.load_labeled_images(val_manifest, Path(args.val_manifest).parent)
    net, trace = tr.train(train_pairs, val_pairs, cfg)
    net.save(args.model_out)
    if args.loss_csv:
        tr.write_loss_csv(trace, args.loss_csv)
    if args.val_csv:
        tr.write_val_csv(trace, args.val_csv)
    _emit("iterations", len(trace.batch_losses))
    _emit("final_loss", repr(trace.batch_losses[-1][2]))
    if trace.val_accuracy:
        _emit("val_accuracy", repr(trace.val_accuracy[-1][1]))
    return 0


def _cmd_predict(args) -> int:
    net = ConvNet.load(args.model)
    if args.image:
        label, scores = tr.predict(net, load_image(args.image))
        _emit("predicted_label", label)
        for name, score in zip(net.class_names, scores):
            _emit(f"score_{name}", repr(float(score)))
        return 0
    if not args.out:
        raise ValueError("--out is required with --manifest")
    data = mf.read_manifest(args.manifest)
    base = Path(args.manifest).parent
    rows = []
    for record in data.records:
        _, scores = tr.predict(net, load_image(base / record.image_path))
        rows.append((record.image_path, scores))
    preds = pr.predictions_from_scores(net.class_names, rows)
    pr.write_predictions_csv(preds, args.out)
    _emit("count", len(preds.predictions))
    return 0


def _cmd_evaluate(args) -> int:
    truth = mf.read_manifest(args.truth)
    preds = pr.read_predictions_csv(args.predictions, class_names=truth.class_names)
    matrix = confusion_matrix(truth, preds)
    rows = one_vs_rest_report(matrix)
    if args.matrix_out:
        write_matrix_csv(matrix, args.matrix_out)
    if args.report_out:
        Path(args.report_out).write_text(render_report(rows, fmt="csv"), encoding="utf-8")
    _info(render_report(rows, fmt="text").rstrip("\n"))
    _emit("accuracy", f"{matrix.overall_accuracy():.4f}")
    return 0


def _cmd_report(args) -> int:
    matrix = read_matrix_csv(args.matrix)
    rows = one_vs_rest_report(matrix)
    document = render_report(rows, fmt=args.format, table3_layout=args.paper_table3_layout)
    if args.out:
        Path(args.out).write_text(document, encoding="utf-8")
    else:
        sys.stdout.write(document)
    return 0


_COMMANDS = {
    "calibrate": _cmd_calibrate,
    "measure": _cmd_measure,
    "split": _cmd_split,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"pavesize {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
