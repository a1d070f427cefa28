"""Synthetic fisheye targets with known geometry, and measurements on them.

Targets are rendered directly in source (fisheye) image space through the
forward equidistant model ``r_s = (2 R0 / pi) * theta``, so a correct
rectification has an analytically known appearance.
"""
from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DetectionError
from .image import ImageBuffer
from .model import CameraModel

SUPERSAMPLE = 4


@dataclass(frozen=True)
class TargetSpec:
    """Parameters for :func:`render_rings` and :func:`render_checker`.

    ``checker_cells`` counts cells along each half-axis between the
    optical axis and the 45 deg field angle; ``wall_distance`` is the
    checkerboard's distance in units of the rectilinear focal length
    ``2 R0 / pi``.
    """

    pattern: str = "rings"
    rings: int = 8
    ring_thickness: float = 3.0
    checker_cells: int = 8
    wall_distance: float = 1.0

    def __post_init__(self):
        if self.pattern not in ("rings", "checker"):
            raise ValueError(f"unknown pattern {self.pattern!r}")
        if self.rings < 1 or self.checker_cells < 1:
            raise ValueError("ring and cell counts must be at least 1")
        if not self.ring_thickness >= 1:
            raise ValueError(f"ring thickness must be >= 1 px, got {self.ring_thickness!r}")
        if not self.wall_distance > 0:
            raise ValueError(f"wall distance must be positive, got {self.wall_distance!r}")


def _supersample(width: int, height: int, inside, n: int) -> ImageBuffer:
    """Average the boolean ``inside(dx, dy)`` over an n x n grid of subsamples per pixel.

    ``dx, dy`` are centered offsets (pixels) of the subsample positions.
    """
    offsets = (np.arange(n) + 0.5) / n
    cov = np.zeros((height, width), dtype=np.float64)
    for oy in offsets:
        dy = (np.arange(height) + oy - 0.5 * height)[:, None]
        for ox in offsets:
            dx = (np.arange(width) + ox - 0.5 * width)[None, :]
            cov += inside(dx, dy)
    return ImageBuffer(np.floor(cov * (255.0 / (n * n)) + 0.5).astype(np.uint8))


def ring_radii(spec: TargetSpec, cam: CameraModel) -> list[float]:
    return [k * cam.big_r0 / spec.rings for k in range(1, spec.rings + 1)]


def render_rings(spec: TargetSpec, cam: CameraModel, width: int, height: int, supersample: int = SUPERSAMPLE) -> ImageBuffer:
    """White image circle with ``N`` dark rings at radii ``k R0 / N``.

    Equal spacing on the fisheye image means equal angular spacing of the
    viewing cones (the equidistant property), which is what a printed
    concentric-circle target looks like through such a lens when the
    camera axis passes through the circles' center.
    """
    radii = np.array(ring_radii(spec, cam))
    half = 0.5 * spec.ring_thickness

    def inside(dx, dy):
        r = np.sqrt(dx * dx + dy * dy)
        white = r < cam.big_r0
        for rk in radii:
            white &= np.abs(r - rk) >= half
        return white

    return _supersample(width, height, inside, supersample)


def checker_cell_size(spec: TargetSpec) -> float:
    """Cell side on the wall, in rectilinear focal lengths."""
    return spec.wall_distance / spec.checker_cells


def render_checker(spec: TargetSpec, cam: CameraModel, width: int, height: int, supersample: int = SUPERSAMPLE) -> ImageBuffer:
    """Frontal planar checkerboard seen through the equidistant lens.

    Each subsample at source radius ``r_s < R0`` looks along
    ``theta = pi r_s / (2 R0)`` and hits the wall at radius
    ``wall_distance * tan(theta)``; azimuth is preserved.  Cell ``(0, 0)``
    (the one touching the axis from the positive side) is white.
    """
    cell = checker_cell_size(spec)
    theta_max = 0.5 * math.pi * (1.0 - 1e-6)

    def inside(dx, dy):
        r = np.sqrt(dx * dx + dy * dy)
        theta = 0.5 * math.pi * r / cam.big_r0
        seen = theta < theta_max
        rho = spec.wall_distance * np.tan(np.where(seen, theta, 0.0))
        with np.errstate(invalid="ignore", divide="ignore"):
            k = np.where(r > 0, rho / r, 0.0)
        cx = np.floor(dx * k / cell)
        cy = np.floor(dy * k / cell)
        return seen & ((cx + cy) % 2 == 0)

    return _supersample(width, height, inside, supersample)


def straightness_residual(points) -> float:
    """Largest perpendicular distance of ``points`` from their total-least-squares line."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected a sequence of (x, y) pairs, got shape {pts.shape}")
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points, got {len(pts)}")
    centered = pts - pts.mean(axis=0)
    if not np.any(centered):
        return 0.0
    # normal of the TLS line = eigenvector of the smallest covariance eigenvalue
    _, vecs = np.linalg.eigh(centered.T @ centered)
    return float(np.abs(centered @ vecs[:, 0]).max())


def estimate_big_r0(img: ImageBuffer, threshold: float = 127) -> float:
    """Rough image-circle radius from the four axis scans out of the center.

    Each scan reports the distance from the image center to the outer
    edge of the farthest pixel brighter than ``threshold``; the four
    are averaged and capped at half the shorter side.
    """
    lum = img.data.mean(axis=2)
    h, w = lum.shape
    cx, cy = 0.5 * w, 0.5 * h
    row = lum[h // 2] > threshold
    col = lum[:, w // 2] > threshold
    if not (row.any() or col.any()):
        raise DetectionError(f"no pixel brighter than {threshold} on the center row/column")

    def reach(mask, center, forward):
        # distance from center to the outer edge of the last bright pixel
        idx = np.nonzero(mask)[0]
        if forward:
            idx = idx[idx + 0.5 >= center]
            return float(idx.max() + 1 - center) if idx.size else 0.0
        idx = idx[idx + 0.5 <= center]
        return float(center - idx.min()) if idx.size else 0.0

    dists = [reach(row, cx, True), reach(row, cx, False), reach(col, cy, True), reach(col, cy, False)]
    return min(sum(dists) / 4.0, 0.5 * min(w, h))


@njit(cache=True)
def _row_edges(lum, lo, hi, max_half):
    """Sub-pixel positions of clean black/white transitions along each row.

    A transition is kept only if the ramp is monotone, saturates within
    ``max_half`` pixels on both sides, and the two saturated pixels beyond
    each end are saturated in the two rows above and below as well (this
    drops rows running through checker vertices).  The position is the
    area estimate ``a + sum(coverage)`` over the ramp, which is unbiased
    for any symmetric or asymmetric blur of a step.
    """
    h, w = lum.shape
    xs = np.empty(h * w // 2 + 1)
    ys = np.empty(h * w // 2 + 1)
    n = 0
    for y in range(2, h - 2):
        for i in range(w - 1):
            p0 = lum[y, i]
            p1 = lum[y, i + 1]
            if (p0 < 0.5) == (p1 < 0.5):
                continue
            falling = p0 > p1
            a = i
            ok = True
            while (lum[y, a] < hi) if falling else (lum[y, a] > lo):
                a -= 1
                if a < 2 or i - a > max_half:
                    ok = False
                    break
            if not ok:
                continue
            b = i + 1
            while (lum[y, b] > lo) if falling else (lum[y, b] < hi):
                b += 1
                if b > w - 3 or b - i > max_half:
                    ok = False
                    break
            if not ok:
                continue
            for k in range(a + 1, b + 1):
                step = lum[y, k] - lum[y, k - 1]
                if (falling and step > 1e-9) or (not falling and step < -1e-9):
                    ok = False
            for yy in range(y - 2, y + 3):
                for k in (a - 2, a - 1):
                    v = lum[yy, k]
                    if (falling and v < hi) or (not falling and v > lo):
                        ok = False
                for k in (b + 1, b + 2):
                    v = lum[yy, k]
                    if (falling and v > lo) or (not falling and v < hi):
                        ok = False
            if not ok:
                continue
            s = 0.0
            for k in range(a, b + 1):
                s += lum[y, k] if falling else 1.0 - lum[y, k]
            xs[n] = a + s
            ys[n] = y + 0.5
            n += 1
    return xs[:n], ys[:n]


def _link(xs, ys, max_step, max_gap, min_points):
    chains = []
    active = []  # (last_x, last_y, points), sorted by last_x
    for y in np.unique(ys):
        row = np.sort(xs[ys == y])
        active = [c for c in active if y - c[1] <= max_gap + 1]
        active.sort(key=lambda c: c[0])
        keys = [c[0] for c in active]
        taken = set()
        fresh = []
        for x in row:
            k = bisect_left(keys, x)
            best, best_d = None, max_step
            for j in (k - 1, k):
                if 0 <= j < len(active) and j not in taken:
                    d = abs(keys[j] - x)
                    if d < best_d:
                        best, best_d = j, d
            if best is None:
                fresh.append([x, y, [(x, y)]])
            else:
                taken.add(best)
                active[best][0] = x
                active[best][1] = y
                active[best][2].append((x, y))
        active.extend(fresh)
        chains.extend(c for c in fresh)
    return [np.array(c[2]) for c in chains if len(c[2]) >= min_points]


def trace_edge_chains(
    img: ImageBuffer,
    direction: str = "vertical",
    max_gap: int = 3,
    min_points: int = 10,
    max_half: int = 12,
) -> list[np.ndarray]:
    """Trace black/white boundaries of a two-tone image into point chains.

    ``direction="vertical"`` scans rows and so finds boundaries that run
    up/down; ``"horizontal"`` scans columns.  Each chain is an ``(n, 2)``
    array of ``(x, y)`` pixel coordinates, one point per scanned line.
    Chains break where no clean crossing is found for more than
    ``max_gap`` lines, which with the default happens at every checker
    vertex, so each chain is one cell boundary.
    """
    lum = img.data.mean(axis=2) / 255.0
    if direction == "horizontal":
        lum = lum.T
    elif direction != "vertical":
        raise ValueError(f"direction must be 'vertical' or 'horizontal', got {direction!r}")
    xs, ys = _row_edges(np.ascontiguousarray(lum), 0.03, 0.97, max_half)
    chains = _link(xs, ys, 1.5, max_gap, min_points)
    if direction == "horizontal":
        chains = [c[:, ::-1].copy() for c in chains]
    return chains
