"""Exception types shared across the package."""


class FisheyeError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FisheyeError, ValueError):
    """An argument lies outside the domain of a mapping function."""


class ConfigError(FisheyeError, ValueError):
    """A warp configuration is inconsistent (e.g. canvas too large for full mode)."""


class ImageFormatError(FisheyeError, ValueError):
    """A file is not in a supported image or LUT format."""


class TruncatedDataError(FisheyeError, OSError):
    """A file ended before its declared payload was complete."""


class DetectionError(FisheyeError, RuntimeError):
    """A measurement could not find what it was looking for in an image."""
