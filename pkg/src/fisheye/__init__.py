"""Equidistant fisheye distortion correction.

Typical use::

    from fisheye import CameraModel, WarpConfig, correct, load_image, save_image

    src = load_image("frame.png")
    cfg = WarpConfig.for_source(CameraModel(500.0), src.width, src.height, mode="full")
    save_image("rectified.png", correct(src, cfg))
"""
from .errors import (
    ConfigError,
    DetectionError,
    DomainError,
    FisheyeError,
    ImageFormatError,
    TruncatedDataError,
)
from .image import ImageBuffer
from .imageio import load_image, save_image
from .model import (
    CameraModel,
    IntermediatePoint,
    PlanePoint,
    SourcePoint,
    eval_f,
    eval_F,
    eval_G,
    eval_S,
    fov_of_canvas,
    forward_equidistant,
    heaviside,
    intermediate_to_source,
    plane_to_intermediate,
    plane_to_source_full,
    plane_to_source_modified,
    plane_to_source_simple,
)
from .synth import TargetSpec, estimate_big_r0, render_checker, render_rings, straightness_residual
from .warp import Lut, WarpConfig, build_lut, correct, interpolate, remap

__version__ = "0.1.0"
