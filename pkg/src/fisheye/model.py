"""Radial mapping functions for equidistant fisheye rectification.

All maps go from the *output* plane (the corrected image) back to the
*source* fisheye image, which is what an inverse-mapping warp needs.
Coordinates are in pixels with the origin at the image center.

Three plane-to-source maps are provided:

``simple``
    Exact equidistant rectification, ``r_s = r_p * f(r_p)`` with
    ``f(r) = (2 R0 / (pi r)) * arctan(pi r / (2 R0))``.  The rim (90 deg)
    is an asymptote, so the field of view shrinks on finite canvases.

``modified``
    ``r_s = r_p * F(r_p)`` where ``F`` bends the arctan so that the
    radius ``2 R0`` lands exactly on the rim.  Keeps 180 deg of view on a
    canvas of half-width ``2 R0`` but leaves barrel distortion at the
    periphery.

``full``
    A circle-to-square deformation (``G`` and ``S`` below) followed by
    the ``modified`` map.  The square canvas ``[-2 R0, 2 R0]^2`` pulls back
    to (approximately) the rim circle, straightening lines near the edges.

The scalar kernels are compiled with numba so the warp engine can call
them per pixel; the public functions wrap them with validation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from numba import njit

from .errors import DomainError

# below this r / R0 the removable singularity at r = 0 is handled by series
SERIES_CUTOFF = 1e-4
# S switches to its p -> 1 limit above this p
S_LIMIT_CUTOFF = 1.0 - 1e-6


@dataclass(frozen=True)
class CameraModel:
    """Equidistant fisheye calibration.

    ``big_r0`` is the source-image radius (pixels) of rays 90 deg off the
    lens axis, i.e. the rim of the image circle.  ``r0 = big_r0 / 2`` is
    the 45 deg radius.
    """

    big_r0: float

    def __post_init__(self):
        if not (math.isfinite(self.big_r0) and self.big_r0 > 0):
            raise DomainError(f"big_r0 must be positive and finite, got {self.big_r0!r}")
        object.__setattr__(self, "big_r0", float(self.big_r0))

    @classmethod
    def from_r0(cls, r0: float) -> CameraModel:
        return cls(2.0 * r0)

    @property
    def r0(self) -> float:
        return self.big_r0 / 2.0


class PlanePoint(NamedTuple):
    """Point on the corrected output plane."""

    x: float
    y: float

    @property
    def r(self) -> float:
        return math.hypot(self.x, self.y)


class IntermediatePoint(NamedTuple):
    """Point after the circle-to-square stage of the full pipeline."""

    x: float
    y: float

    @property
    def r(self) -> float:
        return math.hypot(self.x, self.y)


class SourcePoint(NamedTuple):
    """Point on the source fisheye image."""

    x: float
    y: float

    @property
    def r(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class SquareDeformInputs:
    """Dimensionless arguments fed to ``G`` and ``S`` for one plane point."""

    w: float
    z: float
    h: float
    v: float
    p: float


# --- compiled kernels ------------------------------------------------------
# These take R0 as a bare float and assume validated arguments.


@njit(cache=True)
def _f_scale(r, big_r0):
    x = 0.5 * math.pi * r / big_r0
    if r < SERIES_CUTOFF * big_r0:
        return 1.0 - x * x / 3.0
    return math.atan(x) / x


@njit(cache=True)
def _F_scale(r, big_r0):
    q = 0.5 * r / big_r0
    if q == 1.0:
        # arctan argument has a zero denominator here; 1/2 is the two-sided limit
        return 0.5
    x = math.pi * q
    d = 1.0 - q * q * q
    a = x / d
    if r < SERIES_CUTOFF * big_r0:
        return (1.0 - a * a / 3.0) / d
    val = math.atan(a) / x
    if q > 1.0:
        val += 1.0 / q
    return val


@njit(cache=True)
def _S(h, v, p):
    m = max(h, v)
    if m == 0.0:
        return 1.0
    if p >= S_LIMIT_CUTOFF:
        return 1.0 - m ** 1.5
    e = 1.0 + math.tan(0.5 * math.pi * p)
    # factor out max(h, v) so h**e and v**e cannot both underflow
    n = min(h, v) / m
    return 1.0 - m ** 1.5 * (1.0 + n ** e) ** (1.5 / e)


@njit(cache=True)
def _G(w, z):
    c = math.cos(0.5 * math.pi * z)
    s = math.sin(0.25 * math.pi * z)
    # 1 - u with u = 8wc / (1 + c), written without cancellation:
    # 1 - c = 2 sin^2(pi z / 4)
    one_minus_u = (2.0 * s * s + 2.0 * c * (1.0 - 4.0 * w)) / (1.0 + c)
    if one_minus_u < 0.0:
        one_minus_u = 0.0
    return math.sqrt(0.5 * (1.0 + math.sqrt(one_minus_u)))


@njit(cache=True)
def _square_deform_scale(x, y, big_r0):
    xx = x * x
    yy = y * y
    r2 = xx + yy
    if r2 == 0.0:
        return 1.0
    w = min((xx / r2) * (yy / r2), 0.25)
    four_r0_sq = 4.0 * big_r0 * big_r0
    z = _S(xx / four_r0_sq, yy / four_r0_sq, r2 / (2.0 * four_r0_sq))
    return _G(w, z)


@njit(cache=True)
def _map_simple(x, y, big_r0):
    k = _f_scale(math.hypot(x, y), big_r0)
    return x * k, y * k


@njit(cache=True)
def _map_modified(x, y, big_r0):
    k = _F_scale(math.hypot(x, y), big_r0)
    return x * k, y * k


@njit(cache=True)
def _map_full(x, y, big_r0):
    g = _square_deform_scale(x, y, big_r0)
    xt = x * g
    yt = y * g
    k = _F_scale(math.hypot(xt, yt), big_r0)
    return xt * k, yt * k


# --- public API ------------------------------------------------------------


def _check_radius(r: float) -> float:
    r = float(r)
    if not r >= 0.0:
        raise DomainError(f"radius must be non-negative, got {r!r}")
    return r


def eval_f(r: float, cam: CameraModel) -> float:
    """Exact equidistant mapping factor ``f(r)``; ``f(0) = 1`` by continuity."""
    return _f_scale(_check_radius(r), cam.big_r0)


def heaviside(x: float) -> float:
    return 1.0 if x > 0 else 0.0


def eval_F(r: float, cam: CameraModel) -> float:
    """Modified mapping factor ``F(r)``.

    ``F(2 R0) = 1/2`` exactly; the step term ``(2 R0 / r) * heaviside(r / (2 R0) - 1)``
    cancels the jump of the arctan branch so ``F`` is continuous.
    """
    return _F_scale(_check_radius(r), cam.big_r0)


def eval_S(h: float, v: float, p: float) -> float:
    """Superellipse term of the circle-to-square stage.

    ``S = 1 - (h**e + v**e) ** (1.5 / e)`` with ``e = 1 + tan(pi p / 2)``.
    For ``p`` within 1e-6 of 1 the limit ``1 - max(h, v) ** 1.5`` is used.
    """
    h, v, p = float(h), float(v), float(p)
    for name, val in (("h", h), ("v", v), ("p", p)):
        if not 0.0 <= val <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {val!r}")
    return _S(h, v, p)


def eval_G(w: float, z: float) -> float:
    """Radial scale of the circle-to-square stage, in the stable form
    ``sqrt((1 + sqrt(1 - u)) / 2)`` with ``u = 8 w c / (1 + c)``, ``c = cos(pi z / 2)``.
    """
    w, z = float(w), float(z)
    if not 0.0 <= w <= 0.25:
        raise DomainError(f"w must lie in [0, 1/4], got {w!r}")
    if not (math.isfinite(z) and math.cos(0.5 * math.pi * z) >= 0.0):
        raise DomainError(f"cos(pi z / 2) must be non-negative, got z={z!r}")
    return _G(w, z)


def square_deform_inputs(pt: PlanePoint, cam: CameraModel) -> SquareDeformInputs:
    x, y = float(pt[0]), float(pt[1])
    xx, yy = x * x, y * y
    r2 = xx + yy
    w = 0.0 if r2 == 0.0 else min((xx / r2) * (yy / r2), 0.25)
    four_r0_sq = 4.0 * cam.big_r0 ** 2
    h, v, p = xx / four_r0_sq, yy / four_r0_sq, r2 / (2.0 * four_r0_sq)
    return SquareDeformInputs(w=w, z=_S(h, v, p) if r2 else 1.0, h=h, v=v, p=p)


def _check_canvas(x: float, y: float, cam: CameraModel) -> None:
    lim = 2.0 * cam.big_r0
    if not (abs(x) <= lim and abs(y) <= lim):
        raise DomainError(f"point ({x}, {y}) lies outside the canvas [-{lim}, {lim}]^2")


def plane_to_intermediate(pt: PlanePoint, cam: CameraModel) -> IntermediatePoint:
    """Deform circles toward squares: radial scaling by ``G(w, S(h, v, p))``.

    Points on either axis are fixed and the canvas corners land on the
    circle of radius ``2 R0``.
    """
    x, y = float(pt[0]), float(pt[1])
    _check_canvas(x, y, cam)
    g = _square_deform_scale(x, y, cam.big_r0)
    return IntermediatePoint(x * g, y * g)


def intermediate_to_source(pt: IntermediatePoint, cam: CameraModel) -> SourcePoint:
    x, y = float(pt[0]), float(pt[1])
    k = _F_scale(math.hypot(x, y), cam.big_r0)
    return SourcePoint(x * k, y * k)


def plane_to_source_simple(pt: PlanePoint, cam: CameraModel) -> SourcePoint:
    x, y = float(pt[0]), float(pt[1])
    k = _f_scale(math.hypot(x, y), cam.big_r0)
    return SourcePoint(x * k, y * k)


def plane_to_source_modified(pt: PlanePoint, cam: CameraModel) -> SourcePoint:
    x, y = float(pt[0]), float(pt[1])
    k = _F_scale(math.hypot(x, y), cam.big_r0)
    return SourcePoint(x * k, y * k)


def plane_to_source_full(pt: PlanePoint, cam: CameraModel) -> SourcePoint:
    return intermediate_to_source(plane_to_intermediate(pt, cam), cam)


PLANE_TO_SOURCE = {
    "simple": plane_to_source_simple,
    "modified": plane_to_source_modified,
    "full": plane_to_source_full,
}


def forward_equidistant(theta: float, cam: CameraModel) -> float:
    """Source-image radius of a ray ``theta`` radians off the lens axis."""
    theta = float(theta)
    if not 0.0 <= theta <= 0.5 * math.pi:
        raise DomainError(f"theta must lie in [0, pi/2], got {theta!r}")
    return 2.0 * cam.big_r0 / math.pi * theta


def fov_of_canvas(radius_ratio: float) -> float:
    """Full angle of view (degrees) kept by ``simple`` correction on a canvas
    of radius ``radius_ratio * R0``."""
    radius_ratio = float(radius_ratio)
    if not radius_ratio > 0.0:
        raise DomainError(f"radius_ratio must be positive, got {radius_ratio!r}")
    return math.degrees(2.0 * math.atan(0.5 * math.pi * radius_ratio))
