"""Read and write 8-bit PNG and binary PGM/PPM.

Only what the correction pipeline needs: gray and RGB rasters with
8 bits per sample.  PNG reading also accepts gray+alpha and RGBA (the
alpha is composited over black); palette, 16-bit and interlaced PNGs
are rejected.
"""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np
from numba import njit

from .errors import ImageFormatError, TruncatedDataError
from .image import ImageBuffer

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

_EXTENSIONS = {".png": "png", ".pgm": "pnm", ".ppm": "pnm"}
# PNG color type -> samples per pixel
_PNG_SAMPLES = {0: 1, 2: 3, 4: 2, 6: 4}


def image_kind(path) -> str:
    ext = Path(path).suffix.lower()
    try:
        return _EXTENSIONS[ext]
    except KeyError:
        raise ImageFormatError(f"{path}: unsupported extension {ext!r} (use .png, .pgm or .ppm)") from None


def load_image(path) -> ImageBuffer:
    kind = image_kind(path)
    blob = Path(path).read_bytes()
    if kind == "png":
        return decode_png(blob)
    return decode_pnm(blob)


def save_image(path, img: ImageBuffer) -> None:
    kind = image_kind(path)
    if kind == "png":
        blob = encode_png(img)
    else:
        want = 1 if Path(path).suffix.lower() == ".pgm" else 3
        if img.channels != want:
            raise ValueError(f"{path}: {Path(path).suffix} needs {want} channel(s), image has {img.channels}")
        blob = encode_pnm(img)
    Path(path).write_bytes(blob)


# --- PNM -------------------------------------------------------------------


def encode_pnm(img: ImageBuffer) -> bytes:
    magic = b"P5" if img.channels == 1 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
    return header + img.data.tobytes()


def decode_pnm(blob: bytes) -> ImageBuffer:
    magic = blob[:2]
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"not a binary PGM/PPM (magic {magic!r})")
    channels = 1 if magic == b"P5" else 3
    pos = 2
    fields = []
    while len(fields) < 3:
        # skip whitespace and comments between header tokens
        while pos < len(blob) and blob[pos : pos + 1] in b" \t\r\n#":
            if blob[pos : pos + 1] == b"#":
                eol = blob.find(b"\n", pos)
                pos = len(blob) if eol < 0 else eol
            pos += 1
        start = pos
        while pos < len(blob) and blob[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            if pos >= len(blob):
                raise TruncatedDataError("PNM header ends early")
            raise ImageFormatError(f"malformed PNM header at byte {pos}")
        fields.append(int(blob[start:pos]))
    if pos >= len(blob) or blob[pos : pos + 1] not in b" \t\r\n":
        raise TruncatedDataError("PNM header ends early")
    pos += 1
    width, height, maxval = fields
    if maxval != 255:
        raise ImageFormatError(f"only maxval 255 is supported, got {maxval}")
    if width < 1 or height < 1:
        raise ImageFormatError(f"bad PNM size {width}x{height}")
    need = width * height * channels
    if len(blob) - pos < need:
        raise TruncatedDataError(f"PNM payload has {len(blob) - pos} bytes, expected {need}")
    data = np.frombuffer(blob, dtype=np.uint8, count=need, offset=pos)
    return ImageBuffer(data.reshape(height, width, channels).copy())


# --- PNG -------------------------------------------------------------------


def _chunk(kind: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(payload, zlib.crc32(kind))
    return struct.pack(">I", len(payload)) + kind + payload + struct.pack(">I", crc)


def encode_png(img: ImageBuffer) -> bytes:
    color_type = 0 if img.channels == 1 else 2
    ihdr = struct.pack(">IIBBBBB", img.width, img.height, 8, color_type, 0, 0, 0)
    rows = img.data.reshape(img.height, img.width * img.channels)
    # filter type 0 (None) on every row
    raw = np.hstack([np.zeros((img.height, 1), dtype=np.uint8), rows]).tobytes()
    return (
        PNG_SIGNATURE
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", zlib.compress(raw, 6))
        + _chunk(b"IEND", b"")
    )


@njit(cache=True)
def _unfilter(raw, height, stride, bpp):
    out = np.empty((height, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.int32)
    pos = 0
    for y in range(height):
        ftype = raw[pos]
        pos += 1
        if ftype > 4:
            return out, y
        for x in range(stride):
            cur = np.int32(raw[pos + x])
            a = np.int32(out[y, x - bpp]) if x >= bpp else 0
            b = prev[x]
            if ftype == 1:
                cur += a
            elif ftype == 2:
                cur += b
            elif ftype == 3:
                cur += (a + b) >> 1
            elif ftype == 4:
                c = prev[x - bpp] if x >= bpp else 0
                p = a + b - c
                pa = abs(p - a)
                pb = abs(p - b)
                pc = abs(p - c)
                if pa <= pb and pa <= pc:
                    cur += a
                elif pb <= pc:
                    cur += b
                else:
                    cur += c
            out[y, x] = np.uint8(cur & 0xFF)
        for x in range(stride):
            prev[x] = out[y, x]
        pos += stride
    return out, -1


def decode_png(blob: bytes) -> ImageBuffer:
    if blob[:8] != PNG_SIGNATURE:
        raise ImageFormatError("not a PNG file (bad signature)")
    pos = 8
    header = None
    idat = []
    while True:
        if pos + 8 > len(blob):
            raise TruncatedDataError("PNG ends before IEND")
        length, kind = struct.unpack_from(">I4s", blob, pos)
        end = pos + 8 + length + 4
        if end > len(blob):
            raise TruncatedDataError(f"PNG chunk {kind!r} is truncated")
        payload = blob[pos + 8 : pos + 8 + length]
        (crc,) = struct.unpack_from(">I", blob, pos + 8 + length)
        if zlib.crc32(payload, zlib.crc32(kind)) != crc:
            raise ImageFormatError(f"PNG chunk {kind!r} fails its CRC check")
        pos = end
        if kind == b"IHDR":
            header = struct.unpack(">IIBBBBB", payload)
        elif kind == b"IDAT":
            idat.append(payload)
        elif kind == b"IEND":
            break
        elif not kind[0] & 0x20:
            raise ImageFormatError(f"unsupported critical PNG chunk {kind!r}")
    if header is None:
        raise ImageFormatError("PNG has no IHDR chunk")
    width, height, depth, color_type, _compression, _filter, interlace = header
    if depth != 8:
        raise ImageFormatError(f"only 8-bit PNG is supported, got bit depth {depth}")
    if color_type not in _PNG_SAMPLES:
        raise ImageFormatError(f"unsupported PNG color type {color_type}")
    if interlace:
        raise ImageFormatError("interlaced PNG is not supported")
    bpp = _PNG_SAMPLES[color_type]
    stride = width * bpp
    try:
        raw = zlib.decompress(b"".join(idat))
    except zlib.error as exc:
        raise TruncatedDataError(f"PNG image data is corrupt or truncated: {exc}") from None
    if len(raw) < height * (stride + 1):
        raise TruncatedDataError(f"PNG image data has {len(raw)} bytes, expected {height * (stride + 1)}")
    rows, bad_row = _unfilter(np.frombuffer(raw, dtype=np.uint8), height, stride, bpp)
    if bad_row >= 0:
        raise ImageFormatError(f"bad PNG filter type in row {bad_row}")
    pixels = rows.reshape(height, width, bpp)
    if color_type in (4, 6):
        alpha = pixels[..., -1:].astype(np.uint32)
        color = pixels[..., :-1].astype(np.uint32)
        pixels = ((color * alpha + 127) // 255).astype(np.uint8)
    return ImageBuffer(pixels)
