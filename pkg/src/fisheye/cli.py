"""``fisheye`` command line.

Exit codes: 0 success, 1 usage error, 2 I/O or format error,
3 numeric/domain error (e.g. a full-mode canvas larger than 4 R0).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings

import numpy as np

from . import model, synth
from .errors import ConfigError, DomainError, ImageFormatError
from .image import ImageBuffer
from .imageio import load_image, save_image
from .warp import INTERPOLATIONS, MODES, Lut, WarpConfig, build_lut, remap

log = logging.getLogger("fisheye")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DOMAIN = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (np.isfinite(val) and val > 0):
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return val


def _count(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {text}")
    return val


def _size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"size must be at least 1x1, got {text}")
    return w, h


def _points(text: str) -> list[tuple[float, float]]:
    try:
        pts = [tuple(float(v) for v in item.split(",")) for item in text.split(";") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"points must look like 'x1,y1;x2,y2;...', got {text!r}") from None
    if any(len(p) != 2 for p in pts):
        raise argparse.ArgumentTypeError("every point needs exactly two coordinates")
    return pts


def _add_camera(p: argparse.ArgumentParser, required: bool = True) -> None:
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--r0", type=_positive, metavar="PX", help="radius of the 45 deg circle on the source")
    group.add_argument("--big-r0", type=_positive, metavar="PX", help="radius of the 90 deg rim on the source")


def _camera(args) -> model.CameraModel:
    if args.big_r0 is not None:
        return model.CameraModel(args.big_r0)
    return model.CameraModel.from_r0(args.r0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fisheye", description="Equidistant fisheye distortion correction.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("correct", help="rectify a fisheye image")
    p.add_argument("-i", "--input", required=True, metavar="PATH")
    p.add_argument("-o", "--output", required=True, metavar="PATH")
    _add_camera(p, required=False)
    p.add_argument("--mode", choices=MODES, default="full")
    p.add_argument("--scale", type=_positive, help="output side / source side (default: 1 simple, 2 otherwise)")
    p.add_argument("--interp", choices=INTERPOLATIONS, default="bilinear")
    p.add_argument("--lut-out", metavar="PATH", help="also write the lookup table used")
    p.add_argument("--lut-in", metavar="PATH", help="use a saved lookup table instead of building one")

    p = sub.add_parser("generate", help="render a synthetic fisheye target")
    p.add_argument("--pattern", choices=("rings", "checker"), required=True)
    p.add_argument("--size", type=_size, required=True, metavar="WxH")
    p.add_argument("--big-r0", type=_positive, required=True, metavar="PX")
    p.add_argument("-o", "--output", required=True, metavar="PATH")
    p.add_argument("--rings", type=_count, default=8, metavar="N")
    p.add_argument("--checker-cells", type=_count, default=8, metavar="N")
    p.add_argument("--wall-distance", type=_positive, default=1.0)
    p.add_argument("--ring-thickness", type=_positive, default=3.0, metavar="PX")

    p = sub.add_parser("lut", help="build and save a lookup table")
    _add_camera(p)
    p.add_argument("--src-size", type=_size, required=True, metavar="WxH")
    p.add_argument("--out-size", type=_size, required=True, metavar="WxH")
    p.add_argument("--mode", choices=MODES, default="full")
    p.add_argument("-o", "--output", required=True, metavar="PATH")

    p = sub.add_parser("metrics", help="measure an image or point set")
    p.add_argument("-i", "--input", required=True, metavar="PATH")
    p.add_argument("--kind", choices=("straightness",), default="straightness")
    p.add_argument("--points", type=_points, help="'x1,y1;x2,y2;...'; traced from the image if omitted")

    p = sub.add_parser("fov", help="angle of view kept by simple correction")
    p.add_argument("--radius-ratio", type=_positive, required=True)
    return parser


def _cmd_correct(args) -> int:
    src = load_image(args.input)
    if args.lut_in:
        lut = Lut.load(args.lut_in)
        log.info("loaded %dx%d LUT from %s", lut.width, lut.height, args.lut_in)
    else:
        if args.r0 is None and args.big_r0 is None:
            raise UsageError("fisheye correct: one of --r0/--big-r0 is required unless --lut-in is given")
        cfg = WarpConfig.for_source(_camera(args), src.width, src.height, args.mode, args.scale, args.interp)
        lut = build_lut(cfg, src.width, src.height)
        log.info("built %s LUT %dx%d (R0=%g)", cfg.mode, lut.width, lut.height, cfg.cam.big_r0)
    if args.lut_out:
        lut.save(args.lut_out)
    save_image(args.output, remap(src, lut, args.interp))
    return EXIT_OK


def _cmd_generate(args) -> int:
    cam = model.CameraModel(args.big_r0)
    spec = synth.TargetSpec(
        pattern=args.pattern,
        rings=args.rings,
        ring_thickness=args.ring_thickness,
        checker_cells=args.checker_cells,
        wall_distance=args.wall_distance,
    )
    w, h = args.size
    render = synth.render_rings if args.pattern == "rings" else synth.render_checker
    img = render(spec, cam, w, h)
    if args.output.lower().endswith(".ppm"):
        img = ImageBuffer(np.repeat(img.data, 3, axis=2))
    save_image(args.output, img)
    return EXIT_OK


def _cmd_lut(args) -> int:
    (sw, sh), (ow, oh) = args.src_size, args.out_size
    cfg = WarpConfig(mode=args.mode, cam=_camera(args), out_width=ow, out_height=oh, scale=ow / sw)
    build_lut(cfg, sw, sh).save(args.output)
    return EXIT_OK


def _cmd_metrics(args) -> int:
    img = load_image(args.input)
    if args.points is not None:
        if len(args.points) < 3:
            raise UsageError("fisheye metrics: --points needs at least 3 points")
        print(json.dumps({"residual_px": synth.straightness_residual(args.points)}))
        return EXIT_OK
    chains = synth.trace_edge_chains(img, "vertical") + synth.trace_edge_chains(img, "horizontal")
    residuals = [synth.straightness_residual(c) for c in chains]
    print(json.dumps({"residual_px": max(residuals, default=0.0), "chains": len(chains)}))
    return EXIT_OK


def _cmd_fov(args) -> int:
    print(json.dumps({"fov_deg": round(model.fov_of_canvas(args.radius_ratio), 2)}))
    return EXIT_OK


_COMMANDS = {
    "correct": _cmd_correct,
    "generate": _cmd_generate,
    "lut": _cmd_lut,
    "metrics": _cmd_metrics,
    "fov": _cmd_fov,
}


def main(argv=None) -> int:
    warnings.filterwarnings("ignore", message=".*TBB threading layer.*")
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ConfigError) as exc:
        print(f"fisheye: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (OSError, ImageFormatError) as exc:
        print(f"fisheye: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"fisheye: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
