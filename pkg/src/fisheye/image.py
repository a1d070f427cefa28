"""In-memory 8-bit raster."""
from __future__ import annotations

import numpy as np


class ImageBuffer:
    """Row-major 8-bit image with 1 (gray) or 3 (RGB) channels.

    ``data`` always has shape ``(height, width, channels)``; a 2-D array
    passed to the constructor is treated as single-channel.
    """

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.asarray(data)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected (H, W), (H, W, 1) or (H, W, 3) array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            raise TypeError(f"expected uint8 samples, got {arr.dtype}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        self.data = np.ascontiguousarray(arr)

    @classmethod
    def blank(cls, width: int, height: int, channels: int = 1, fill: int = 0) -> ImageBuffer:
        return cls(np.full((height, width, channels), fill, dtype=np.uint8))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def __eq__(self, other):
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self):
        return f"ImageBuffer({self.width}x{self.height}x{self.channels})"
