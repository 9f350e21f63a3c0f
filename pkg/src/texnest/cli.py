"""Command line front end.

Subcommands cover the whole pipeline: convert between the container
formats, compute two-point statistics, run the nesting analysis, score a
segmentation, reassemble patch predictions, and generate synthetic weaves.
Every run validates its inputs before writing anything, prints key=value
summary lines on stdout, and exits nonzero with a one-line diagnostic on
failure. Identical invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import h5py
import numpy as np

from . import descriptors, io, metrics, nesting, patching, synth
from .errors import TexnestError
from .grid import (DEFAULT_VOXEL_PITCH_MM, GridGeometry, LabelVolume, OneHotMask,
                   ProbabilityField, argmax_decode, one_hot_encode, softmax_field)


def _parse_int_triple(text: str) -> tuple[int, int, int]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) == 1:
        v = int(parts[0])
        return (v, v, v)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected one or three integers, got {text!r}")
    return tuple(int(p) for p in parts)


def _parse_floats(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not parts:
        raise argparse.ArgumentTypeError("expected a comma-separated float list")
    return tuple(float(p) for p in parts)


def _parse_classes(text: str) -> tuple[int, ...]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not parts:
        raise argparse.ArgumentTypeError("expected a comma-separated class list")
    return tuple(int(p) for p in parts)


def _is_h5(path: Path) -> bool:
    return path.suffix.lower() in (".h5", ".hdf5")


def _is_nrrd(path: Path) -> bool:
    return path.suffix.lower() == ".nrrd"


def _load_labels(path_str: str, pitch_mm: float | None) -> LabelVolume:
    """Read per-voxel labels from an HDF5 bundle or an NRRD grid."""
    path = Path(path_str)
    if not path.exists():
        raise TexnestError(f"input file not found: {path}")
    if _is_h5(path):
        spacing = pitch_mm if pitch_mm is not None else DEFAULT_VOXEL_PITCH_MM
        bundle = io.read_h5_bundle(path, spacing=spacing)
        if bundle.labels is not None:
            return bundle.labels
        if bundle.masks is not None:
            channels = bundle.masks.channels.astype(np.float64)
            field = ProbabilityField(bundle.geometry, channels, kind="logits")
            return argmax_decode(field)
        raise TexnestError(f"{path}: bundle has neither labels nor masks")
    if _is_nrrd(path):
        grid, geometry = io.read_nrrd(path)
        if not np.issubdtype(grid.dtype, np.integer):
            raise TexnestError(f"{path}: labels must be an integer grid, got {grid.dtype}")
        if pitch_mm is not None:
            geometry = GridGeometry.isotropic(geometry.shape, pitch_mm)
        c = max(3, int(grid.max()) + 1 if grid.size else 3)
        return LabelVolume(geometry, grid.astype(np.uint16), num_classes=c)
    raise TexnestError(f"{path}: unsupported input format (use .h5/.hdf5 or .nrrd)")


def _loss_config(args) -> metrics.LossConfig:
    return metrics.LossConfig(
        alpha=args.alpha,
        beta=args.beta,
        class_weights=args.class_weights,
        epsilon=args.epsilon,
    )


def _emit(pairs):
    for key, value in pairs:
        print(f"{key}={value}")


def _fmt(value: float) -> str:
    text = f"{value:.6g}"
    if text and text.replace("-", "").isdigit():
        text += ".0"
    return text


# ---------------------------------------------------------------- convert

def cmd_convert(args) -> int:
    src, dst = Path(args.input), Path(args.output)
    volume = _load_grid_dataset(src, args.dataset, args.pitch_mm)
    grid, geometry = volume
    if _is_nrrd(dst):
        io.write_nrrd(grid.astype(np.uint16), geometry, dst)
    elif _is_h5(dst):
        labels = LabelVolume(geometry, grid.astype(np.uint16),
                             num_classes=max(3, int(grid.max()) + 1))
        if args.dataset == "labels":
            bundle = io.DatasetBundle(geometry=geometry, labels=labels)
        elif args.dataset == "volume":
            bundle = io.DatasetBundle(geometry=geometry, volume=grid.astype(np.uint16))
        else:
            bundle = io.DatasetBundle(geometry=geometry, instances=grid.astype(np.uint16))
        io.write_h5_bundle(bundle, dst)
    else:
        raise TexnestError(f"{dst}: unsupported output format (use .h5/.hdf5 or .nrrd)")
    _emit([("in", src), ("out", dst), ("dataset", args.dataset),
           ("shape", "%d,%d,%d" % geometry.shape)])
    return 0


def _load_grid_dataset(path: Path, dataset: str, pitch_mm: float | None):
    if not path.exists():
        raise TexnestError(f"input file not found: {path}")
    if _is_h5(path):
        spacing = pitch_mm if pitch_mm is not None else DEFAULT_VOXEL_PITCH_MM
        bundle = io.read_h5_bundle(path, spacing=spacing)
        member = {
            "labels": bundle.labels.labels if bundle.labels is not None else None,
            "volume": bundle.volume,
            "instances": bundle.instances,
        }.get(dataset)
        if member is None:
            raise TexnestError(f"{path}: dataset '{dataset}' not present")
        return member, bundle.geometry
    if _is_nrrd(path):
        grid, geometry = io.read_nrrd(path)
        if pitch_mm is not None:
            geometry = GridGeometry.isotropic(geometry.shape, pitch_mm)
        return grid, geometry
    raise TexnestError(f"{path}: unsupported input format (use .h5/.hdf5 or .nrrd)")


# --------------------------------------------------------------------- s2

def cmd_s2(args) -> int:
    labels = _load_labels(args.input, args.pitch_mm)
    if not 0 <= args.cls < labels.num_classes:
        raise TexnestError(f"class {args.cls} out of range for {labels.num_classes} classes")
    mask = one_hot_encode(labels)
    field = descriptors.class_correlation(
        mask, args.cls, periodic=args.periodic, workers=args.threads)
    phi = descriptors.volume_fractions(mask)[args.cls]

    pairs = [("class", args.cls), ("phi", _fmt(float(phi))),
             ("s2_zero", _fmt(field.zero_lag))]
    if args.output:
        out = Path(args.output)
        if not _is_nrrd(out):
            raise TexnestError(f"{out}: s2 output must be .nrrd")
        io.write_nrrd(field.values, field.geometry, out)
        pairs.append(("out", out))
    if args.spectrum_csv:
        spectrum = descriptors.axis_spectrum(field, "z")
        io.write_spectrum_csv(spectrum, args.spectrum_csv)
        pairs.append(("spectrum_csv", args.spectrum_csv))
    _emit(pairs)
    return 0


# ---------------------------------------------------------------- nesting

def _resolve_gap(args) -> float:
    if args.gap_mm is not None:
        return args.gap_mm
    trio = (args.areal_weight, args.fiber_density, args.fvc)
    if all(v is not None for v in trio):
        return nesting.laminate_thickness(args.layers, *trio)
    raise TexnestError(
        "need --gap-mm, or --areal-weight with --fiber-density and --fvc, to fix the gap"
    )


def _nesting_pipeline(labels: LabelVolume, cls: int, periodic: bool,
                      interp_factor: int, workers):
    mask = one_hot_encode(labels)
    field = descriptors.class_correlation(mask, cls, periodic=periodic, workers=workers)
    spectrum = descriptors.axis_spectrum(field, "z")
    refined = nesting.interpolate_spectrum(spectrum, interp_factor)
    peaks = nesting.detect_peaks(refined)
    if not peaks:
        raise TexnestError("no repeat-distance peak found in the stacking spectrum")
    return field, refined, peaks[0]


def cmd_nesting(args) -> int:
    if args.layers is None:
        raise TexnestError("--layers is required")
    gap = _resolve_gap(args)
    labels = _load_labels(args.input, args.pitch_mm)
    if not 0 <= args.cls < labels.num_classes:
        raise TexnestError(f"class {args.cls} out of range for {labels.num_classes} classes")

    field, refined, peak = _nesting_pipeline(
        labels, args.cls, args.periodic, args.interp_factor, args.threads)
    pitch = labels.geometry.spacing[0]
    t, sigma_t = nesting.layer_thickness(peak, pitch)
    spec = nesting.CompactionSpec(layers=args.layers, gap_mm=gap)
    report = nesting.nesting_factor(t, sigma_t, spec, peak=peak)

    pairs = [
        ("class", args.cls),
        ("peak_raw_voxels", _fmt(abs(peak.raw_location_voxels))),
        ("peak_voxels", _fmt(abs(peak.location_voxels))),
        ("peak_sigma_voxels", _fmt(peak.sigma_voxels)),
        ("layer_thickness_mm", _fmt(report.layer_thickness_mm)),
        ("layer_thickness_sigma_mm", _fmt(report.layer_thickness_sigma_mm)),
        ("gap_mm", _fmt(gap)),
        ("layers", args.layers),
        ("nesting_factor", _fmt(report.nesting_factor)),
        ("nesting_sigma", _fmt(report.nesting_sigma)),
    ]
    if args.spectrum_csv:
        io.write_spectrum_csv(refined, args.spectrum_csv)
        pairs.append(("spectrum_csv", args.spectrum_csv))
    _emit(pairs)
    return 0


# ---------------------------------------------------------------- metrics

def _read_scores(path: Path):
    """Full-volume class scores from an HDF5 file, or None if absent."""
    if not _is_h5(path):
        return None
    with h5py.File(path, "r") as f:
        if "scores" not in f:
            return None
        ds = f["scores"]
        if ds.ndim != 4:
            raise TexnestError(f"{path}: scores must be 4-D [c, x, y, z]")
        disk = ds[()]
        kind = ds.attrs.get("kind", "logits")
        if isinstance(kind, bytes):
            kind = kind.decode("ascii")
    return np.ascontiguousarray(np.transpose(disk, (0, 3, 2, 1))), str(kind)


def cmd_metrics(args) -> int:
    pred_path, truth_path = Path(args.pred), Path(args.truth)
    truth = _load_labels(args.truth, args.pitch_mm)
    pred = _load_labels(args.pred, args.pitch_mm)
    cm = metrics.confusion(pred, truth)
    report = metrics.iou_f1(cm, args.classes)

    pairs = []
    for k in args.classes:
        score = report.per_class[k]
        pairs.append((f"iou_{k}", _fmt(score.iou)))
        pairs.append((f"f1_{k}", _fmt(score.f1)))
    pairs.append(("meanIoU", _fmt(report.mean_iou)))
    pairs.append(("meanF1", _fmt(report.mean_f1)))

    scored = _read_scores(pred_path) if pred_path.exists() else None
    if scored is not None:
        channels, kind = scored
        config = _loss_config(args)
        truth_mask = one_hot_encode(truth)
        field = ProbabilityField(truth.geometry, channels, kind=kind)
        if kind == "logits":
            pairs.append(("loss_ce", _fmt(metrics.cross_entropy(field, truth_mask, config))))
            pairs.append(("loss_dice",
                          _fmt(metrics.dice_loss(softmax_field(field), truth_mask, config))))
            pairs.append(("loss_total",
                          _fmt(metrics.composite_loss(field, truth_mask, config))))
        else:
            pairs.append(("loss_dice", _fmt(metrics.dice_loss(field, truth_mask, config))))

    if args.output:
        metrics.write_scores_csv(args.output, report, cm.num_classes,
                                 stage=pred_path.stem, dataset=truth_path.stem)
        pairs.append(("out", args.output))
    _emit(pairs)
    return 0


# ----------------------------------------------------------------- stitch

def _collect_patch_files(folder: Path) -> list[Path]:
    files = sorted(p for p in folder.iterdir()
                   if p.is_file() and p.suffix.lower() in (".h5", ".hdf5"))
    if not files:
        raise TexnestError(f"{folder}: no patch files found")
    return files


def _write_stitched(path: Path, field: ProbabilityField):
    labels = argmax_decode(field)
    bundle = io.DatasetBundle(geometry=field.geometry, labels=labels)
    io.write_h5_bundle(bundle, path)
    with h5py.File(path, "a") as f:
        disk = np.ascontiguousarray(np.transpose(field.channels, (0, 3, 2, 1)))
        ds = f.create_dataset("scores", data=disk, track_times=False)
        ds.attrs["kind"] = field.kind


def cmd_stitch(args) -> int:
    src = Path(args.input)
    out = Path(args.output)
    pitch = args.pitch_mm if args.pitch_mm is not None else DEFAULT_VOXEL_PITCH_MM

    if src.is_dir():
        patches = []
        kinds = set()
        for f in _collect_patch_files(src):
            scores, offset, kind = io.read_patch_scores(f)
            patches.append((offset, scores))
            kinds.add(kind)
        if len(kinds) != 1:
            raise TexnestError(f"patch files disagree on score kind: {sorted(kinds)}")
        kind = kinds.pop()
        pshape = patches[0][1].shape[1:]
        out_shape = tuple(max(o[i] + s.shape[1 + i] for o, s in patches) for i in range(3))
        window = patching.gaussian_window(pshape, args.sigma_scale)
        field = patching.stitch(patches, window, out_shape, kind=kind, spacing=pitch)
    else:
        if not src.exists():
            raise TexnestError(f"input file not found: {src}")
        scored = _read_scores(src)
        if scored is None:
            raise TexnestError(f"{src}: expected an HDF5 file with a 'scores' dataset")
        if args.patch is None or args.stride is None:
            raise TexnestError("single-volume mode needs --patch and --stride")
        channels, kind = scored
        base_shape = channels.shape[1:]
        pad = args.pad
        padded = np.stack([patching.mirror_pad(c, pad) for c in channels])
        grid = patching.patch_grid(padded.shape[1:], args.patch, args.stride)
        window = patching.gaussian_window(args.patch, args.sigma_scale)
        patches = []
        for off in grid.offsets:
            sl = tuple(slice(o, o + p) for o, p in zip(off, grid.patch_shape))
            patches.append((off, padded[(slice(None),) + sl]))
        field = patching.stitch(patches, window, padded.shape[1:], kind=kind, spacing=pitch)
        crop = tuple(slice(pad, pad + n) for n in base_shape)
        geometry = GridGeometry.isotropic(base_shape, pitch)
        field = ProbabilityField(geometry, field.channels[(slice(None),) + crop], kind=kind)
        patches = grid.offsets

    _write_stitched(out, field)
    _emit([
        ("patches", len(patches)),
        ("out_shape", "%d,%d,%d" % field.geometry.shape),
        ("out", out),
    ])
    return 0


# ------------------------------------------------------------------ synth

def cmd_synth(args) -> int:
    spec = synth.WeaveSpec(
        yarn_spacing=args.yarn_spacing,
        layer_thickness=args.layer_thickness,
        yarn_width=args.yarn_width if args.yarn_width is not None else 0.9 * args.yarn_spacing,
        yarn_height=(args.yarn_height if args.yarn_height is not None
                     else 0.5 * args.layer_thickness),
        ondulation_amplitude=(args.amplitude if args.amplitude is not None
                              else 0.25 * args.layer_thickness),
        layers=args.layers,
        interpenetration=args.interpenetration,
        voxel_pitch=args.pitch_mm if args.pitch_mm is not None else DEFAULT_VOXEL_PITCH_MM,
    )
    if args.offset_jitter_mm > 0:
        spec = synth.random_layer_offsets(spec, args.offset_jitter_mm, args.seed)

    labels = synth.generate_plain_weave(spec, args.shape)
    out = Path(args.output)
    if _is_h5(out):
        io.write_h5_bundle(io.DatasetBundle(geometry=labels.geometry, labels=labels), out)
    elif _is_nrrd(out):
        io.write_nrrd(labels.labels.astype(np.uint16), labels.geometry, out)
    else:
        raise TexnestError(f"{out}: unsupported output format (use .h5/.hdf5 or .nrrd)")

    mask = one_hot_encode(labels)
    fractions = descriptors.volume_fractions(mask)
    pairs = [(f"phi_{k}", _fmt(float(f))) for k, f in enumerate(fractions)]
    pairs += [
        ("layers", spec.layers),
        ("layer_pitch_mm", _fmt(spec.layer_pitch)),
        ("stack_extent_mm", _fmt(spec.stack_extent)),
        ("nesting_factor_truth", _fmt(synth.nesting_ground_truth(spec))),
        ("out", out),
    ]
    _emit(pairs)
    return 0


# ---------------------------------------------------------------- analyze

def cmd_analyze(args) -> int:
    labels = _load_labels(args.input, args.pitch_mm)
    mask = one_hot_encode(labels)
    for k in args.classes:
        if not 0 <= k < labels.num_classes:
            raise TexnestError(f"class {k} out of range for {labels.num_classes} classes")
    nest_cls = args.cls if args.cls is not None else args.classes[0]
    if nest_cls not in args.classes:
        raise TexnestError(f"--class {nest_cls} must be among --classes {args.classes}")

    fractions = descriptors.volume_fractions(mask)
    pairs = [(f"phi_{k}", _fmt(float(f))) for k, f in enumerate(fractions)]

    fields = {}
    for k in args.classes:
        fields[k] = descriptors.class_correlation(
            mask, k, periodic=args.periodic, workers=args.threads)
        pairs.append((f"s2_zero_{k}", _fmt(fields[k].zero_lag)))
        if args.spectrum_csv:
            stem = Path(args.spectrum_csv)
            path = stem.with_name(f"{stem.stem}_class{k}{stem.suffix or '.csv'}")
            spectrum = descriptors.axis_spectrum(fields[k], "z")
            io.write_spectrum_csv(nesting.interpolate_spectrum(spectrum, args.interp_factor),
                                  path)
            pairs.append((f"spectrum_csv_{k}", path))

    wants_nesting = args.layers is not None
    if wants_nesting:
        gap = _resolve_gap(args)
        spectrum = descriptors.axis_spectrum(fields[nest_cls], "z")
        refined = nesting.interpolate_spectrum(spectrum, args.interp_factor)
        peaks = nesting.detect_peaks(refined)
        if not peaks:
            raise TexnestError("no repeat-distance peak found in the stacking spectrum")
        peak = peaks[0]
        pitch = labels.geometry.spacing[0]
        t, sigma_t = nesting.layer_thickness(peak, pitch)
        spec = nesting.CompactionSpec(layers=args.layers, gap_mm=gap)
        report = nesting.nesting_factor(t, sigma_t, spec, peak=peak)
        pairs += [
            ("nesting_class", nest_cls),
            ("peak_voxels", _fmt(abs(peak.location_voxels))),
            ("layer_thickness_mm", _fmt(report.layer_thickness_mm)),
            ("layer_thickness_sigma_mm", _fmt(report.layer_thickness_sigma_mm)),
            ("nesting_factor", _fmt(report.nesting_factor)),
            ("nesting_sigma", _fmt(report.nesting_sigma)),
        ]
    _emit(pairs)
    return 0


# ----------------------------------------------------------------- parser

def _add_pitch(p):
    p.add_argument("--pitch-mm", type=float, default=None,
                   help="voxel pitch in mm (default: 0.02022, or the NRRD header)")


def _add_periodic(p):
    group = p.add_mutually_exclusive_group()
    group.add_argument("--periodic", dest="periodic", action="store_true", default=True,
                       help="treat the volume as wrapping (default)")
    group.add_argument("--aperiodic", dest="periodic", action="store_false",
                       help="zero-padded, non-wrapping correlation")


def _add_threads(p):
    p.add_argument("--threads", type=int, default=os.cpu_count(),
                   help="worker threads for the FFTs (default: all cores)")


def _add_loss_flags(p):
    p.add_argument("--alpha", type=float, default=metrics.DEFAULT_ALPHA,
                   help="cross-entropy weight in the composite loss")
    p.add_argument("--beta", type=float, default=metrics.DEFAULT_BETA,
                   help="dice weight in the composite loss")
    p.add_argument("--class-weights", type=_parse_floats,
                   default=metrics.DEFAULT_CLASS_WEIGHTS,
                   help="per-class loss weights, comma separated")
    p.add_argument("--epsilon", type=float, default=metrics.DEFAULT_EPSILON,
                   help="dice denominator stabilizer")


def _add_gap_flags(p):
    p.add_argument("--gap-mm", type=float, default=None,
                   help="mold gap (compacted stack height) in mm")
    p.add_argument("--areal-weight", type=float, default=None,
                   help="fabric areal weight in g/m^2 (with --fiber-density and --fvc)")
    p.add_argument("--fiber-density", type=float, default=None,
                   help="fiber density in g/cm^3")
    p.add_argument("--fvc", type=float, default=None,
                   help="target fiber volume content in (0, 1]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="texnest",
        description="Voxel-volume analysis of layered textile stacks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert between HDF5 bundles and NRRD grids")
    p.add_argument("--in", dest="input", required=True, help="input .h5/.hdf5 or .nrrd")
    p.add_argument("--out", dest="output", required=True, help="output .h5/.hdf5 or .nrrd")
    p.add_argument("--dataset", choices=("labels", "volume", "instances"), default="labels",
                   help="bundle member to convert (default labels)")
    _add_pitch(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("s2", help="two-point statistics of one class")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--class", dest="cls", type=int, required=True,
                   help="class id of the indicator channel")
    p.add_argument("--out", dest="output", default=None,
                   help="write the full correlation field as .nrrd")
    p.add_argument("--spectrum-csv", default=None,
                   help="write the z-axis spectrum as CSV")
    _add_pitch(p)
    _add_periodic(p)
    _add_threads(p)
    p.set_defaults(func=cmd_s2)

    p = sub.add_parser("nesting", help="layer thickness and nesting factor of a stack")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--class", dest="cls", type=int, default=1,
                   help="class whose stacking spectrum is analysed (default 1)")
    p.add_argument("--layers", type=int, default=None, help="number of plies in the stack")
    p.add_argument("--interp-factor", type=int, default=nesting.DEFAULT_INTERP_FACTOR,
                   help="spline refinement factor for the spectrum (default 32)")
    p.add_argument("--spectrum-csv", default=None,
                   help="write the refined z-axis spectrum as CSV")
    _add_gap_flags(p)
    _add_pitch(p)
    _add_periodic(p)
    _add_threads(p)
    p.set_defaults(func=cmd_nesting)

    p = sub.add_parser("metrics", help="segmentation scores of a prediction against truth")
    p.add_argument("--pred", required=True, help="predicted labels (.h5/.nrrd)")
    p.add_argument("--truth", required=True, help="ground-truth labels (.h5/.nrrd)")
    p.add_argument("--classes", type=_parse_classes, default=(1, 2),
                   help="classes entering the means (default 1,2)")
    p.add_argument("--out", dest="output", default=None, help="write scores as CSV")
    _add_pitch(p)
    _add_loss_flags(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("stitch", help="blend per-patch scores into one volume")
    p.add_argument("--in", dest="input", required=True,
                   help="directory of patch files, or one scores .h5 with --patch/--stride")
    p.add_argument("--out", dest="output", required=True, help="output .h5 bundle")
    p.add_argument("--patch", type=_parse_int_triple, default=None,
                   help="patch shape for single-volume mode, e.g. 128 or 64,128,128")
    p.add_argument("--stride", type=_parse_int_triple, default=None,
                   help="stride between patch origins")
    p.add_argument("--pad", type=int, default=patching.DEFAULT_PAD_VOXELS,
                   help="mirror padding applied in single-volume mode (default 16)")
    p.add_argument("--sigma-scale", type=float, default=patching.DEFAULT_SIGMA_SCALE,
                   help="gaussian blend sigma as a fraction of the patch extent")
    _add_pitch(p)
    p.set_defaults(func=cmd_stitch)

    p = sub.add_parser("synth", help="generate a synthetic plain-weave stack")
    p.add_argument("--out", dest="output", required=True, help="output .h5 bundle or .nrrd")
    p.add_argument("--shape", type=_parse_int_triple, default=(128, 128, 128),
                   help="volume shape z,y,x in voxels (default 128,128,128)")
    p.add_argument("--layers", type=int, default=1, help="number of plies (default 1)")
    p.add_argument("--yarn-spacing", type=float, default=synth.DEFAULT_YARN_SPACING_MM,
                   help="yarn centre spacing in mm (default 1.4286)")
    p.add_argument("--layer-thickness", type=float, default=synth.DEFAULT_LAYER_THICKNESS_MM,
                   help="ply thickness in mm (default 0.38)")
    p.add_argument("--yarn-width", type=float, default=None,
                   help="yarn cross-section width in mm (default 0.9 * spacing)")
    p.add_argument("--yarn-height", type=float, default=None,
                   help="yarn cross-section height in mm (default thickness / 2)")
    p.add_argument("--amplitude", type=float, default=None,
                   help="ondulation amplitude in mm (default thickness / 4)")
    p.add_argument("--interpenetration", type=float, default=0.0,
                   help="vertical overlap of neighbouring plies in mm (default 0)")
    p.add_argument("--offset-jitter-mm", type=float, default=0.0,
                   help="random in-plane shift per ply, uniform in +-jitter (default 0)")
    p.add_argument("--seed", type=int, default=0, help="seed for the offset jitter")
    _add_pitch(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="fractions, per-class statistics and nesting in one pass")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--classes", type=_parse_classes, default=(1, 2),
                   help="classes to analyse (default 1,2)")
    p.add_argument("--class", dest="cls", type=int, default=None,
                   help="class for the nesting analysis (default: first of --classes)")
    p.add_argument("--layers", type=int, default=None,
                   help="ply count; enables the nesting block")
    p.add_argument("--interp-factor", type=int, default=nesting.DEFAULT_INTERP_FACTOR)
    p.add_argument("--spectrum-csv", default=None,
                   help="per-class spectrum CSV path stem")
    _add_gap_flags(p)
    _add_pitch(p)
    _add_periodic(p)
    _add_threads(p)
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TexnestError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
