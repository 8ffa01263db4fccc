"""Binary PGM (P5) emission and reading of 28x28 grayscale images."""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np
import numpy.typing as npt

from config import IMAGE_PIXELS, IMAGE_SIDE
from handling_errors import ConfigurationError, FormatError
from mnist.idx import ImageSet

PGM_HEADER = f"P5\n{IMAGE_SIDE} {IMAGE_SIDE}\n255\n".encode("ascii")
_HEADER_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def to_bytes(image: npt.ArrayLike) -> npt.NDArray[np.uint8]:
    """Quantize [0, 1] pixels to bytes, rounding half up."""
    pixels = np.asarray(image, dtype=np.float64)
    if pixels.shape != (IMAGE_PIXELS,):
        raise ConfigurationError(f"PGM images must have {IMAGE_PIXELS} pixels, got shape {pixels.shape}")
    if np.any((pixels < 0.0) | (pixels > 1.0)):
        raise ConfigurationError("PGM pixels must lie in [0, 1]")
    return np.floor(pixels * 255 + 0.5).astype(np.uint8)


def write_pgm(image: npt.ArrayLike, path: str | Path) -> None:
    Path(path).write_bytes(PGM_HEADER + to_bytes(image).tobytes())


def read_pgm(path: str | Path) -> npt.NDArray[np.float64]:
    """Read a 28x28 P5 file (comments allowed in the header) as [0, 1] pixels."""
    path = Path(path)
    data = path.read_bytes()
    tokens = []
    position = 0
    for _ in range(4):
        match = _HEADER_TOKEN.match(data, position)
        if match is None:
            raise FormatError(f"{path}: truncated PGM header", offset=position)
        tokens.append(match.group(1))
        position = match.end()
    magic, width, height, maxval = tokens
    if magic != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {magic!r})", offset=0)
    if not (width.isdigit() and height.isdigit() and maxval.isdigit()):
        raise FormatError(f"{path}: non-numeric PGM header field", offset=0)
    if (int(width), int(height)) != (IMAGE_SIDE, IMAGE_SIDE) or int(maxval) != 255:
        raise FormatError(f"{path}: expected {IMAGE_SIDE}x{IMAGE_SIDE} maxval 255, got {width!r}x{height!r} {maxval!r}")
    # a single whitespace byte separates the header from the raster
    position += 1
    raster = data[position : position + IMAGE_PIXELS]
    if len(raster) != IMAGE_PIXELS:
        raise FormatError(f"{path}: truncated raster", offset=len(data))
    return np.frombuffer(raster, dtype=np.uint8).astype(np.float64) / 255.0


def read_pgm_dir(directory: str | Path) -> ImageSet:
    """Every ``*.pgm`` in ``directory``, sorted by file name."""
    paths = sorted(Path(directory).glob("*.pgm"))
    if not paths:
        return ImageSet(np.zeros((0, IMAGE_PIXELS)))
    return ImageSet(np.stack([read_pgm(p) for p in paths]))
