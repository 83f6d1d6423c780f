"""Command-line interface: build style models, stylize frames, render grids.

Exit codes: 0 on success, 2 when inputs or flags fail validation, 3 when
the computation itself fails. Every failure prints one line to stderr of
the form ``ERROR <slug>: detail`` so scripts can parse the reason.

A config file (``--config``) holds flat ``key=value`` lines mirroring the
long flag names; explicit flags win over the file, the file wins over
built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .codec import CODEC_NAMES, get_codec
from .cpd import StyleWeights
from .errors import (
    ClassAbsent,
    CodecNotReady,
    EmptyRegion,
    EmptyStyleSet,
    FormatError,
    GridRequiresFourStyles,
    GwctError,
    IncompleteWeights,
    IntegrityError,
    InvalidAlpha,
    InvalidRank,
    InvalidWeights,
    LevelMismatch,
    ShapeMismatch,
)
from .image_io import list_frames, load_class_table, load_image, load_mask, save_image
from .pipeline import DEFAULT_ALPHA, BlendSpec, stylize_image, stylize_sequence
from .stylemodel import MIN_PIXELS, build_style_model, load_model, save_model

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_COMPUTE = 3


class _CliError(Exception):
    def __init__(self, slug: str, message: str, code: int):
        super().__init__(message)
        self.slug = slug
        self.code = code


def _slug(exc: Exception) -> str:
    # ShapeMismatch -> shape-mismatch
    return re.sub(r"(?<!^)(?=[A-Z])", "-", type(exc).__name__).lower()


# Errors that mean the inputs or flags were wrong (exit 2); anything else
# raised by the library mid-run counts as a compute failure (exit 3).
_VALIDATION_ERRORS = (
    InvalidAlpha,
    InvalidRank,
    InvalidWeights,
    GridRequiresFourStyles,
    EmptyStyleSet,
    ClassAbsent,
    EmptyRegion,
    ShapeMismatch,
    LevelMismatch,
    FormatError,
    IntegrityError,
    IncompleteWeights,
    CodecNotReady,
)


def _fail_validation(exc: Exception, slug: str | None = None):
    raise _CliError(slug or _slug(exc), str(exc), EXIT_VALIDATION)


def _require_file(path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise _CliError("missing-file", f"{what} '{p}' does not exist", EXIT_VALIDATION)
    return p


# ---------------------------------------------------------------------------
# config file merging


def _read_config(path) -> dict:
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise _CliError(
                "config-parse", f"{path}:{lineno}: expected key=value, got '{line}'",
                EXIT_VALIDATION,
            )
        cfg[key.strip()] = value.strip()
    return cfg


# Flag name -> converter for values coming from a config file.
_CONFIG_KEYS = {
    "codec": str,
    "codec-weights": str,
    "depth": int,
    "rank": str,
    "alpha": str,
    "weights": str,
    "seed": int,
    "workers": int,
    "grid": int,
    "min-pixels": int,
    "max-iters": int,
    "tol": float,
    "classes": str,
    "report": str,
}


def _merge_config(args: argparse.Namespace, defaults: dict) -> None:
    """Fill unset flags from the config file, then from defaults."""
    cfg = {}
    if getattr(args, "config", None):
        cfg = _read_config(_require_file(args.config, "config file"))
        unknown = set(cfg) - set(_CONFIG_KEYS)
        if unknown:
            raise _CliError(
                "config-parse",
                "unknown config keys: " + ", ".join(sorted(unknown)),
                EXIT_VALIDATION,
            )
    for key, conv in _CONFIG_KEYS.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            continue
        if getattr(args, attr) is not None:
            continue
        if key in cfg:
            try:
                setattr(args, attr, conv(cfg[key]))
            except ValueError:
                raise _CliError(
                    "config-parse", f"config key '{key}' has invalid value '{cfg[key]}'",
                    EXIT_VALIDATION,
                )
        elif attr in defaults:
            setattr(args, attr, defaults[attr])


# ---------------------------------------------------------------------------
# flag value parsing


def _parse_rank(text: str):
    """'adaptive' | 'full' | positive integer -> (policy, rank)."""
    if text in ("adaptive", "full"):
        return text, None
    try:
        value = int(text)
    except ValueError:
        raise _CliError(
            "invalid-rank", f"rank must be 'adaptive', 'full' or an integer, got '{text}'",
            EXIT_VALIDATION,
        )
    if value < 1:
        raise _CliError("invalid-rank", f"rank must be >= 1, got {value}", EXIT_VALIDATION)
    return "fixed", value


def _resolve_class(token: str, names: dict) -> int:
    token = token.strip()
    if re.fullmatch(r"\d+", token):
        return int(token)
    for cid, name in names.items():
        if name == token:
            return int(cid)
    raise _CliError(
        "unknown-class", f"class '{token}' is not in the class table", EXIT_VALIDATION
    )


def _parse_alpha(text: str, names: dict):
    """Scalar or 'class=value' list -> (default alpha, {class_id: alpha}).

    A bare scalar among the list entries resets the default for unlisted
    classes, e.g. '0.4,iris=0.8'.
    """
    default = DEFAULT_ALPHA
    per_class = {}
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "=" in part:
            cls, _, value = part.partition("=")
            cid = _resolve_class(cls, names)
            per_class[cid] = _parse_alpha_value(value)
        else:
            default = _parse_alpha_value(part)
    return default, per_class


def _parse_alpha_value(text: str) -> float:
    try:
        a = float(text)
    except ValueError:
        raise _CliError("invalid-alpha", f"alpha '{text}' is not a number", EXIT_VALIDATION)
    if not 0.0 <= a <= 1.0:
        raise _CliError("invalid-alpha", f"alpha {a} outside [0, 1]", EXIT_VALIDATION)
    return a


def _parse_weights(text: str, n_styles: int):
    """'by-count' | 'uniform' | comma list -> weights for BlendSpec."""
    if text == "by-count":
        return None
    if text == "uniform":
        return StyleWeights.uniform(n_styles).w
    try:
        values = np.array([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError:
        raise _CliError(
            "invalid-weights",
            f"weights must be 'by-count', 'uniform' or a comma list of numbers, got '{text}'",
            EXIT_VALIDATION,
        )
    if values.shape[0] != n_styles:
        raise _CliError(
            "invalid-weights",
            f"weight list has {values.shape[0]} entries, model holds {n_styles} styles",
            EXIT_VALIDATION,
        )
    if values.min() < 0 or values.sum() <= 0:
        raise _CliError(
            "invalid-weights", "weights must be >= 0 and not all zero", EXIT_VALIDATION
        )
    return values / values.sum()


def _class_names(args, model=None) -> dict:
    if getattr(args, "classes", None):
        return load_class_table(_require_file(args.classes, "class table"))
    if model is not None and model.class_names:
        return model.class_names
    return {}


def _load_codec(name: str, weights_path, model=None):
    if model is not None:
        name = model.codec_name
    if name == "neural" and weights_path is not None:
        _require_file(weights_path, "codec weight file")
    return get_codec(name, weights_path)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_build(args) -> int:
    _merge_config(
        args,
        {
            "codec": "analytic",
            "codec_weights": None,
            "depth": pipeline.DEFAULT_DEPTH,
            "rank": "adaptive",
            "seed": 0,
            "min_pixels": MIN_PIXELS,
            "max_iters": 500,
            "tol": 1e-8,
            "classes": None,
        },
    )
    if len(args.styles) != len(args.masks):
        raise _CliError(
            "shape-mismatch",
            f"{len(args.styles)} style images but {len(args.masks)} masks",
            EXIT_VALIDATION,
        )
    if args.codec not in CODEC_NAMES:
        raise _CliError(
            "invalid-codec", f"codec must be one of {CODEC_NAMES}, got '{args.codec}'",
            EXIT_VALIDATION,
        )
    policy, rank = _parse_rank(args.rank)
    names = _class_names(args)
    images = [load_image(_require_file(p, "style image")) for p in args.styles]
    masks = [load_mask(_require_file(p, "style mask")) for p in args.masks]
    codec = _load_codec(args.codec, args.codec_weights)

    try:
        model, log = build_style_model(
            images,
            masks,
            codec,
            depth=args.depth,
            seed=args.seed,
            rank_policy=policy,
            rank=rank,
            min_pixels=args.min_pixels,
            class_names=names,
            max_iters=args.max_iters,
            tol=args.tol,
        )
        save_model(args.out, model)
    except _VALIDATION_ERRORS as exc:
        _fail_validation(exc)
    except GwctError as exc:
        raise _CliError(_slug(exc), str(exc), EXIT_COMPUTE)

    print(
        f"model written to {args.out} "
        f"(styles={model.n_styles} depth={model.depth} codec={model.codec_name} "
        f"rank={args.rank} seed={model.seed})"
    )
    for row in log:
        label = names.get(row["class_id"], "")
        tag = f" name={label}" if label else ""
        if row.get("skipped"):
            print(f"level={row['level']} class={row['class_id']}{tag} skipped (below min pixels)")
        else:
            print(
                f"level={row['level']} class={row['class_id']}{tag} "
                f"images={row['n_images']} rank={row['rank']} "
                f"rel_error={row['rel_error']:.3e} iters={row['n_iters']}"
            )
    return EXIT_OK


def _report_line(frame_index: int, source, result) -> str:
    if result.error is not None:
        payload = {"frame": frame_index, "file": str(source), "status": "error",
                   "error": result.error}
    else:
        rep = result.report
        payload = {
            "frame": frame_index,
            "file": str(source),
            "status": "ok",
            "total_seconds": rep.total_seconds,
            "level_seconds": {str(k): v for k, v in rep.level_seconds.items()},
            "rows": rep.rows,
            "warnings": rep.warnings,
        }
    return json.dumps(payload, sort_keys=True)


def _emit_report(path, lines) -> None:
    if path is None:
        return
    text = "\n".join(lines) + "\n" if lines else ""
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _cmd_stylize(args) -> int:
    _merge_config(
        args,
        {
            "codec_weights": None,
            "depth": None,
            "alpha": str(DEFAULT_ALPHA),
            "weights": "by-count",
            "workers": os.cpu_count() or 1,
            "classes": None,
            "report": None,
        },
    )
    model = load_model(_require_file(args.model, "model file"))
    names = _class_names(args, model)
    default_alpha, class_alpha = _parse_alpha(args.alpha, names)
    weights = _parse_weights(args.weights, model.n_styles)
    codec = _load_codec(model.codec_name, args.codec_weights, model)
    spec = BlendSpec(
        weights=weights, alpha=default_alpha, class_alpha=class_alpha, depth=args.depth
    )

    content = Path(args.content)
    if content.is_dir():
        frames = list_frames(content)
        mask_dir = Path(args.mask)
        if mask_dir.is_dir():
            mask_paths = [mask_dir / f.name for f in frames]
            for mp in mask_paths:
                _require_file(mp, "mask frame")
        else:
            mask_paths = [_require_file(args.mask, "mask")] * len(frames)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)

        def loader(img_path, msk_path):
            return lambda: (load_image(img_path), load_mask(msk_path))

        results = stylize_sequence(
            [loader(f, m) for f, m in zip(frames, mask_paths)],
            model,
            codec,
            spec,
            workers=args.workers,
        )
        lines = []
        failed = 0
        for frame, result in zip(frames, results):
            if result.error is not None:
                failed += 1
                print(f"frame {frame.name}: {result.error}", file=sys.stderr)
            else:
                save_image(out_dir / frame.name, result.image)
            lines.append(_report_line(result.index, frame, result))
        _emit_report(args.report, lines)
        print(f"{len(results) - failed}/{len(results)} frames written to {out_dir}")
        if failed:
            raise _CliError("frame-failures", f"{failed} frames failed", EXIT_COMPUTE)
        return EXIT_OK

    image = load_image(_require_file(args.content, "content image"))
    mask = load_mask(_require_file(args.mask, "content mask"))
    try:
        out, report = stylize_image(image, mask, model, codec, spec)
    except _VALIDATION_ERRORS as exc:
        _fail_validation(exc)
    except GwctError as exc:
        raise _CliError(_slug(exc), str(exc), EXIT_COMPUTE)
    save_image(args.out, out)
    result = pipeline.FrameResult(index=0, image=out, report=report)
    _emit_report(args.report, [_report_line(0, args.content, result)])
    for message in report.warnings:
        print(f"warning: {message}", file=sys.stderr)
    print(f"stylized image written to {args.out}")
    return EXIT_OK


def _cmd_grid(args) -> int:
    _merge_config(
        args,
        {
            "codec_weights": None,
            "depth": None,
            "alpha": str(DEFAULT_ALPHA),
            "grid": 5,
            "classes": None,
        },
    )
    model = load_model(_require_file(args.model, "model file"))
    names = _class_names(args, model)
    default_alpha, class_alpha = _parse_alpha(args.alpha, names)
    codec = _load_codec(model.codec_name, args.codec_weights, model)
    spec = BlendSpec(alpha=default_alpha, class_alpha=class_alpha, depth=args.depth)
    image = load_image(_require_file(args.content, "content image"))
    mask = load_mask(_require_file(args.mask, "content mask"))

    try:
        cells, manifest = pipeline.interpolation_grid(
            image, mask, model, codec, args.grid, spec
        )
    except _VALIDATION_ERRORS as exc:
        _fail_validation(exc)
    except GwctError as exc:
        raise _CliError(_slug(exc), str(exc), EXIT_COMPUTE)

    rows = [np.concatenate(row, axis=1) for row in cells]
    composite = np.concatenate(rows, axis=0)
    save_image(args.out, composite)
    manifest_path = (
        Path(args.manifest)
        if args.manifest
        else Path(args.out).with_name(Path(args.out).stem + ".manifest.json")
    )
    manifest["cell_height"] = int(cells[0][0].shape[0])
    manifest["cell_width"] = int(cells[0][0].shape[1])
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"grid written to {args.out} ({args.grid}x{args.grid}), manifest {manifest_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gwct",
        description="Label-aware style transfer with reusable multi-style models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="fit a style model from images and masks")
    p_build.add_argument("--styles", nargs="+", required=True, help="style image PNGs")
    p_build.add_argument("--masks", nargs="+", required=True, help="label mask PNGs, one per style")
    p_build.add_argument("--out", required=True, help="output model file")
    p_build.add_argument("--codec", choices=CODEC_NAMES, default=None,
                         help="feature codec (default analytic)")
    p_build.add_argument("--codec-weights", default=None,
                         help="weight container for the neural codec")
    p_build.add_argument("--depth", type=int, default=None, help="codec levels to model (1..5)")
    p_build.add_argument("--rank", default=None,
                         help="'adaptive', 'full' or a fixed integer rank")
    p_build.add_argument("--seed", type=int, default=None, help="decomposition seed")
    p_build.add_argument("--min-pixels", type=int, default=None,
                         help="minimum feature pixels for a class to participate at a level")
    p_build.add_argument("--max-iters", type=int, default=None, help="ALS iteration cap")
    p_build.add_argument("--tol", type=float, default=None, help="ALS relative fit tolerance")
    p_build.add_argument("--classes", default=None, help="class table sidecar (index:name lines)")
    p_build.add_argument("--config", default=None, help="key=value config file")
    p_build.set_defaults(func=_cmd_build)

    p_sty = sub.add_parser("stylize", help="stylize an image or a directory of frames")
    p_sty.add_argument("--model", required=True, help="style model file")
    p_sty.add_argument("--content", required=True, help="content PNG or directory of frames")
    p_sty.add_argument("--mask", required=True,
                       help="label mask PNG, or directory of per-frame masks")
    p_sty.add_argument("--out", required=True, help="output PNG or directory")
    p_sty.add_argument("--codec-weights", default=None,
                       help="weight container when the model uses the neural codec")
    p_sty.add_argument("--alpha", default=None,
                       help="style strength: scalar or 'class=value' list (names or ids)")
    p_sty.add_argument("--weights", default=None,
                       help="style blend: 'by-count', 'uniform' or a comma list")
    p_sty.add_argument("--depth", type=int, default=None, help="levels to run (default: model depth)")
    p_sty.add_argument("--workers", type=int, default=None,
                       help="frame worker count (default: available cores)")
    p_sty.add_argument("--classes", default=None, help="class table sidecar (index:name lines)")
    p_sty.add_argument("--report", default=None,
                       help="write per-frame JSON-lines report to this path ('-' for stdout)")
    p_sty.add_argument("--config", default=None, help="key=value config file")
    p_sty.set_defaults(func=_cmd_stylize)

    p_grid = sub.add_parser("grid", help="render a k x k interpolation grid of four styles")
    p_grid.add_argument("--model", required=True, help="style model file (must hold 4 styles)")
    p_grid.add_argument("--content", required=True, help="content PNG")
    p_grid.add_argument("--mask", required=True, help="label mask PNG")
    p_grid.add_argument("--out", required=True, help="output composite PNG")
    p_grid.add_argument("--grid", type=int, default=None, help="grid side length k (default 5)")
    p_grid.add_argument("--manifest", default=None,
                        help="manifest JSON path (default: alongside --out)")
    p_grid.add_argument("--codec-weights", default=None,
                        help="weight container when the model uses the neural codec")
    p_grid.add_argument("--alpha", default=None,
                        help="style strength: scalar or 'class=value' list")
    p_grid.add_argument("--depth", type=int, default=None, help="levels to run")
    p_grid.add_argument("--classes", default=None, help="class table sidecar")
    p_grid.add_argument("--config", default=None, help="key=value config file")
    p_grid.set_defaults(func=_cmd_grid)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"ERROR {exc.slug}: {exc}", file=sys.stderr)
        return exc.code
    except _VALIDATION_ERRORS as exc:
        print(f"ERROR {_slug(exc)}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except GwctError as exc:
        print(f"ERROR {_slug(exc)}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except OSError as exc:
        print(f"ERROR io: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
