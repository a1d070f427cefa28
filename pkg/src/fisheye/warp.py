"""Inverse-mapping warp: per-pixel source-coordinate tables and resampling.

Pixel ``(i, j)`` (column, row) covers the continuous square
``[i, i+1) x [j, j+1)``; its center is ``(i + 0.5, j + 0.5)`` and the
image center is ``(width / 2, height / 2)``.  Output pixels are mapped
to source coordinates once (the LUT) and the LUT is then applied to any
number of frames.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit, prange

from . import model
from .errors import ConfigError, ImageFormatError, TruncatedDataError
from .image import ImageBuffer
from .model import CameraModel

MODES = ("simple", "modified", "full")
INTERPOLATIONS = ("nearest", "bilinear", "bicubic")
DEFAULT_SCALE = {"simple": 1.0, "modified": 2.0, "full": 2.0}

LUT_MAGIC = b"FLUT1\0"
_LUT_HEADER = struct.Struct("<II")


@dataclass(frozen=True)
class WarpConfig:
    mode: str
    cam: CameraModel
    out_width: int
    out_height: int
    interp: str = "bilinear"
    scale: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.interp not in INTERPOLATIONS:
            raise ConfigError(f"unknown interpolation {self.interp!r}; expected one of {INTERPOLATIONS}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ConfigError(f"scale must be positive, got {self.scale!r}")
        if self.out_width < 1 or self.out_height < 1:
            raise ConfigError(f"output size must be at least 1x1, got {self.out_width}x{self.out_height}")
        if self.mode == "full":
            lim = 4.0 * self.cam.big_r0 * (1 + 1e-12)
            if self.out_width > lim or self.out_height > lim:
                raise ConfigError(
                    f"full mode needs the canvas inside [-2R0, 2R0]^2: "
                    f"{self.out_width}x{self.out_height} exceeds {4.0 * self.cam.big_r0:g} px"
                )

    @classmethod
    def for_source(
        cls,
        cam: CameraModel,
        src_width: int,
        src_height: int,
        mode: str = "full",
        scale: float | None = None,
        interp: str = "bilinear",
    ) -> WarpConfig:
        """Config whose output sides are ``scale`` times the source sides."""
        if scale is None:
            scale = DEFAULT_SCALE.get(mode, 1.0)
        if not (math.isfinite(scale) and scale > 0):
            raise ConfigError(f"scale must be positive, got {scale!r}")
        return cls(
            mode=mode,
            cam=cam,
            out_width=max(1, int(round(scale * src_width))),
            out_height=max(1, int(round(scale * src_height))),
            interp=interp,
            scale=float(scale),
        )


@dataclass(eq=False)
class Lut:
    """Source coordinates for every output pixel.

    ``sx`` and ``sy`` are float32 arrays of shape ``(height, width)`` in
    source pixel units; NaN in both marks an output pixel with no source.
    ``src_width``/``src_height`` record the raster the table was built
    for when known (tables read from disk do not carry them).
    """

    sx: np.ndarray
    sy: np.ndarray
    src_width: int | None = None
    src_height: int | None = None

    def __post_init__(self):
        self.sx = np.ascontiguousarray(self.sx, dtype=np.float32)
        self.sy = np.ascontiguousarray(self.sy, dtype=np.float32)
        if self.sx.ndim != 2 or self.sx.shape != self.sy.shape:
            raise ValueError(f"sx and sy must be 2-D and equal in shape, got {self.sx.shape} and {self.sy.shape}")

    @property
    def width(self) -> int:
        return self.sx.shape[1]

    @property
    def height(self) -> int:
        return self.sx.shape[0]

    @property
    def valid(self) -> np.ndarray:
        return ~(np.isnan(self.sx) | np.isnan(self.sy))

    def __eq__(self, other):
        if not isinstance(other, Lut):
            return NotImplemented
        # bitwise so that NaN sentinels compare equal
        return (
            self.sx.shape == other.sx.shape
            and self.sx.tobytes() == other.sx.tobytes()
            and self.sy.tobytes() == other.sy.tobytes()
        )

    @classmethod
    def identity(cls, width: int, height: int) -> Lut:
        jj, ii = np.mgrid[0:height, 0:width]
        return cls(ii + 0.5, jj + 0.5, width, height)

    def save(self, path) -> None:
        write_lut(path, self)

    @classmethod
    def load(cls, path) -> Lut:
        return read_lut(path)


_MODE_IDS = {"simple": 0, "modified": 1, "full": 2}
_INTERP_IDS = {"nearest": 0, "bilinear": 1, "bicubic": 2}


@njit(cache=True)
def _store(sx, sy, j, i, u, v, src_w, src_h):
    if 0.0 <= u <= src_w and 0.0 <= v <= src_h:
        sx[j, i] = u
        sy[j, i] = v
    else:
        sx[j, i] = np.nan
        sy[j, i] = np.nan


@njit(parallel=True, cache=True)
def _build_lut_kernel(mode_id, big_r0, src_w, src_h, sx, sy):
    out_h, out_w = sx.shape
    ocx = 0.5 * out_w
    ocy = 0.5 * out_h
    scx = 0.5 * src_w
    scy = 0.5 * src_h
    # Pixel centers are symmetric about the image center and every map is
    # odd in x and in y (bit-exactly), so one quadrant is evaluated and
    # mirrored into the other three.
    for j in prange((out_h + 1) // 2):
        jb = out_h - 1 - j
        yp = jb + 0.5 - ocy
        for i in range((out_w + 1) // 2):
            ib = out_w - 1 - i
            xp = ib + 0.5 - ocx
            if mode_id == 0:
                xs, ys = model._map_simple(xp, yp, big_r0)
            elif mode_id == 1:
                xs, ys = model._map_modified(xp, yp, big_r0)
            else:
                xs, ys = model._map_full(xp, yp, big_r0)
            _store(sx, sy, jb, ib, scx + xs, scy + ys, src_w, src_h)
            _store(sx, sy, jb, i, scx - xs, scy + ys, src_w, src_h)
            _store(sx, sy, j, ib, scx + xs, scy - ys, src_w, src_h)
            _store(sx, sy, j, i, scx - xs, scy - ys, src_w, src_h)


def build_lut(cfg: WarpConfig, src_width: int, src_height: int) -> Lut:
    """Map every output pixel center through the configured plane-to-source map.

    Entries landing outside the source rectangle ``[0, W] x [0, H]`` are
    sentinels; source corners outside the rim circle stay sampleable.
    """
    if src_width < 1 or src_height < 1:
        raise ConfigError(f"source size must be at least 1x1, got {src_width}x{src_height}")
    sx = np.empty((cfg.out_height, cfg.out_width), dtype=np.float32)
    sy = np.empty_like(sx)
    _build_lut_kernel(_MODE_IDS[cfg.mode], cfg.cam.big_r0, float(src_width), float(src_height), sx, sy)
    return Lut(sx, sy, src_width, src_height)


@njit(cache=True)
def _clampi(i, n):
    if i < 0:
        return 0
    if i >= n:
        return n - 1
    return i


@njit(cache=True)
def _cubic_weight(t):
    # Keys kernel with a = -0.5 (Catmull-Rom)
    t = abs(t)
    if t <= 1.0:
        return (1.5 * t - 2.5) * t * t + 1.0
    if t < 2.0:
        return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0
    return 0.0


@njit(parallel=True, cache=True)
def _remap_kernel(src, sx, sy, interp_id, out):
    h, w, nch = src.shape
    out_h, out_w = sx.shape
    for j in prange(out_h):
        for i in range(out_w):
            u = sx[j, i]
            v = sy[j, i]
            if math.isnan(u) or math.isnan(v):
                for c in range(nch):
                    out[j, i, c] = 0
                continue
            if interp_id == 0:
                x0 = _clampi(int(math.floor(u)), w)
                y0 = _clampi(int(math.floor(v)), h)
                for c in range(nch):
                    out[j, i, c] = src[y0, x0, c]
                continue
            fx = u - 0.5
            fy = v - 0.5
            xf = math.floor(fx)
            yf = math.floor(fy)
            tx = fx - xf
            ty = fy - yf
            x0 = int(xf)
            y0 = int(yf)
            for c in range(nch):
                if interp_id == 1:
                    xa = _clampi(x0, w)
                    xb = _clampi(x0 + 1, w)
                    ya = _clampi(y0, h)
                    yb = _clampi(y0 + 1, h)
                    top = src[ya, xa, c] * (1.0 - tx) + src[ya, xb, c] * tx
                    bot = src[yb, xa, c] * (1.0 - tx) + src[yb, xb, c] * tx
                    val = top * (1.0 - ty) + bot * ty
                else:
                    val = 0.0
                    for m in range(4):
                        wy = _cubic_weight(ty - (m - 1))
                        yy = _clampi(y0 - 1 + m, h)
                        row = 0.0
                        for n in range(4):
                            row += _cubic_weight(tx - (n - 1)) * src[yy, _clampi(x0 - 1 + n, w), c]
                        val += wy * row
                    if val < 0.0:
                        val = 0.0
                    elif val > 255.0:
                        val = 255.0
                out[j, i, c] = np.uint8(math.floor(val + 0.5))


def remap(src: ImageBuffer, lut: Lut, interp: str = "bilinear") -> ImageBuffer:
    """Resample ``src`` at the LUT coordinates; sentinel pixels become 0."""
    if interp not in _INTERP_IDS:
        raise ValueError(f"unknown interpolation {interp!r}; expected one of {INTERPOLATIONS}")
    if lut.src_width is not None and (lut.src_width, lut.src_height) != (src.width, src.height):
        raise ValueError(
            f"LUT was built for a {lut.src_width}x{lut.src_height} source, got {src.width}x{src.height}"
        )
    valid = lut.valid
    if valid.any() and (
        lut.sx[valid].min() < 0 or lut.sy[valid].min() < 0
        or lut.sx[valid].max() > src.width or lut.sy[valid].max() > src.height
    ):
        raise ValueError("LUT addresses coordinates outside the source image")
    out = np.empty((lut.height, lut.width, src.channels), dtype=np.uint8)
    _remap_kernel(src.data, lut.sx, lut.sy, _INTERP_IDS[interp], out)
    return ImageBuffer(out)


def correct(src: ImageBuffer, cfg: WarpConfig) -> ImageBuffer:
    return remap(src, build_lut(cfg, src.width, src.height), cfg.interp)


def catmull_rom_weights(t: float) -> tuple[float, float, float, float]:
    """Weights of the four taps at offsets -1, 0, 1, 2 for fractional position ``t``."""
    return tuple(float(_cubic_weight(t - k)) for k in (-1, 0, 1, 2))


def interpolate(src: ImageBuffer, x: float, y: float, method: str = "bilinear", clamp: bool = True) -> np.ndarray:
    """Sample every channel of ``src`` at continuous position ``(x, y)``.

    Plain-Python reference for the compiled remap kernel: same pixel-center
    convention and edge clamping.  ``clamp=False`` exposes bicubic overshoot.
    """
    x, y = float(x), float(y)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"coordinates must be finite, got ({x}, {y})")
    data = src.data
    h, w = src.height, src.width

    def px(ix, iy):
        return data[min(max(iy, 0), h - 1), min(max(ix, 0), w - 1)].astype(np.float64)

    if method == "nearest":
        return px(math.floor(x), math.floor(y))
    fx, fy = x - 0.5, y - 0.5
    x0, y0 = math.floor(fx), math.floor(fy)
    tx, ty = fx - x0, fy - y0
    if method == "bilinear":
        top = px(x0, y0) * (1 - tx) + px(x0 + 1, y0) * tx
        bot = px(x0, y0 + 1) * (1 - tx) + px(x0 + 1, y0 + 1) * tx
        return top * (1 - ty) + bot * ty
    if method == "bicubic":
        wx = catmull_rom_weights(tx)
        wy = catmull_rom_weights(ty)
        val = sum(
            wy[m] * sum(wx[n] * px(x0 - 1 + n, y0 - 1 + m) for n in range(4))
            for m in range(4)
        )
        return np.clip(val, 0.0, 255.0) if clamp else val
    raise ValueError(f"unknown interpolation {method!r}; expected one of {INTERPOLATIONS}")


def write_lut(path, lut: Lut) -> None:
    """Write ``lut`` as FLUT1: magic, u32 width, u32 height, then (sx, sy) f32 pairs, little-endian."""
    pairs = np.empty((lut.height, lut.width, 2), dtype="<f4")
    pairs[..., 0] = lut.sx
    pairs[..., 1] = lut.sy
    pairs[~lut.valid] = np.nan
    with open(path, "wb") as fh:
        fh.write(LUT_MAGIC)
        fh.write(_LUT_HEADER.pack(lut.width, lut.height))
        fh.write(pairs.tobytes())


def read_lut(path) -> Lut:
    blob = Path(path).read_bytes()
    if blob[: len(LUT_MAGIC)] != LUT_MAGIC:
        raise ImageFormatError(f"{path}: not a FLUT1 file (bad magic)")
    off = len(LUT_MAGIC)
    if len(blob) < off + _LUT_HEADER.size:
        raise TruncatedDataError(f"{path}: truncated FLUT1 header")
    width, height = _LUT_HEADER.unpack_from(blob, off)
    off += _LUT_HEADER.size
    need = width * height * 8
    if len(blob) - off < need:
        raise TruncatedDataError(f"{path}: expected {need} payload bytes, found {len(blob) - off}")
    if len(blob) - off > need:
        raise ImageFormatError(f"{path}: {len(blob) - off - need} trailing bytes after payload")
    pairs = np.frombuffer(blob, dtype="<f4", count=width * height * 2, offset=off).reshape(height, width, 2)
    sx = pairs[..., 0].astype(np.float32)
    sy = pairs[..., 1].astype(np.float32)
    bad = np.isnan(sx) | np.isnan(sy)
    sx[bad] = np.nan
    sy[bad] = np.nan
    return Lut(sx, sy)
