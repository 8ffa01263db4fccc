"""IDX containers (MNIST, Fashion-MNIST): images, labels and class filtering.

    [offset] [type]          [value]          [description]
    0000     32 bit integer  0x00000803(2051) magic number (images)
    0004     32 bit integer  N                number of images
    0008     32 bit integer  28               number of rows
    0012     32 bit integer  28               number of columns
    0016     unsigned byte   ??               pixels, row-wise

Label files carry magic 0x00000801(2049), N, then one byte per label.
Everything is big-endian; only uncompressed files are read.
"""
from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt

from config import IMAGE_PIXELS, IMAGE_SIDE
from handling_errors import ConfigurationError, FormatError

logger = logging.getLogger(__name__)

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
N_CLASSES = 10


@dataclass(frozen=True, eq=False)
class ImageSet:
    images: npt.NDArray[np.float64]  # N x 784, pixels in [0, 1]
    labels: npt.NDArray[np.int64] | None = None

    def __post_init__(self):
        if self.images.ndim != 2 or self.images.shape[1] != IMAGE_PIXELS:
            raise ConfigurationError(f"Images must be N x {IMAGE_PIXELS}, got {self.images.shape}")
        if self.labels is not None and len(self.labels) != len(self.images):
            raise ConfigurationError(f"{len(self.labels)} labels for {len(self.images)} images")

    def __len__(self) -> int:
        return len(self.images)


def _read_header(data: bytes, fields: int, path: Path) -> tuple[int, ...]:
    size = 4 * fields
    if len(data) < size:
        raise FormatError(f"{path}: truncated IDX header", offset=len(data))
    return struct.unpack(f">{fields}I", data[:size])


def read_idx_images(path: str | Path) -> ImageSet:
    path = Path(path)
    data = path.read_bytes()
    magic, = _read_header(data, 1, path)
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(f"{path}: magic 0x{magic:08x} is not an IDX image file (0x{IDX_IMAGE_MAGIC:08x})", offset=0)
    _, count, rows, cols = _read_header(data, 4, path)
    if (rows, cols) != (IMAGE_SIDE, IMAGE_SIDE):
        raise FormatError(f"{path}: images are {rows}x{cols}, expected {IMAGE_SIDE}x{IMAGE_SIDE}", offset=8)
    expected = 16 + count * rows * cols
    if len(data) < expected:
        raise FormatError(f"{path}: truncated pixel data ({len(data)} of {expected} bytes)", offset=len(data))

    pixels = np.frombuffer(data, dtype=np.uint8, count=count * rows * cols, offset=16)
    images = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0
    logger.debug("Read %d images from %s", count, path)
    return ImageSet(images)


def read_idx_labels(path: str | Path) -> npt.NDArray[np.int64]:
    path = Path(path)
    data = path.read_bytes()
    magic, = _read_header(data, 1, path)
    if magic != IDX_LABEL_MAGIC:
        raise FormatError(f"{path}: magic 0x{magic:08x} is not an IDX label file (0x{IDX_LABEL_MAGIC:08x})", offset=0)
    _, count = _read_header(data, 2, path)
    if len(data) < 8 + count:
        raise FormatError(f"{path}: truncated label data ({len(data)} of {8 + count} bytes)", offset=len(data))

    labels = np.frombuffer(data, dtype=np.uint8, count=count, offset=8).astype(np.int64)
    bad = np.flatnonzero(labels >= N_CLASSES)
    if len(bad):
        raise FormatError(f"{path}: label {labels[bad[0]]} out of range 0-{N_CLASSES - 1}", offset=8 + int(bad[0]))
    return labels


def read_idx_pair(images_path: str | Path, labels_path: str | Path) -> ImageSet:
    """Images with their labels; the two files must agree on the count."""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if len(labels) != len(images):
        raise FormatError(f"{labels_path}: {len(labels)} labels for {len(images)} images in {images_path}", offset=4)
    return ImageSet(images.images, labels)


def filter_class(image_set: ImageSet, class_id: int) -> ImageSet:
    """Images of one class, in file order."""
    if image_set.labels is None:
        raise ConfigurationError("Class filtering needs labels")
    if not 0 <= class_id < N_CLASSES:
        raise ConfigurationError(f"class_id must be in 0-{N_CLASSES - 1}, got {class_id}")
    mask = image_set.labels == class_id
    return ImageSet(image_set.images[mask], image_set.labels[mask])


def write_idx(path: str | Path, images: npt.ArrayLike | None = None, labels: npt.ArrayLike | None = None) -> None:
    """Write an uncompressed IDX image or label file (pixels in [0, 1])."""
    path = Path(path)
    if (images is None) == (labels is None):
        raise ConfigurationError("Pass exactly one of images or labels")
    if images is not None:
        pixels = np.floor(np.clip(np.asarray(images, dtype=np.float64), 0.0, 1.0) * 255 + 0.5).astype(np.uint8)
        header = struct.pack(">IIII", IDX_IMAGE_MAGIC, len(pixels), IMAGE_SIDE, IMAGE_SIDE)
        path.write_bytes(header + pixels.reshape(len(pixels), -1).tobytes())
    else:
        values = np.asarray(labels, dtype=np.uint8)
        path.write_bytes(struct.pack(">II", IDX_LABEL_MAGIC, len(values)) + values.tobytes())
