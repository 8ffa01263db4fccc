import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

from mnist import write_idx  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="run full reference-configuration trainings")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def make_class_images(rng: np.random.Generator, count: int, rank: int = 8) -> np.ndarray:
    """28x28 images in [0, 1] built from a handful of shared patterns."""
    base = rng.uniform(0.2, 0.8, 784)
    patterns = rng.normal(0.0, 1.0, (rank, 784))
    coefficients = rng.normal(0.0, 1.0, (count, rank))
    return np.clip(base + 0.05 * coefficients @ patterns, 0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def class_images():
    return make_class_images(np.random.default_rng(7), 40)


@pytest.fixture
def idx_files(tmp_path):
    """Tiny IDX pair: 30 images of class 0 followed by 30 of class 1, interleaved."""
    generator = np.random.default_rng(11)
    zeros = make_class_images(generator, 30)
    ones = make_class_images(generator, 30)
    images = np.empty((60, 784))
    images[0::2], images[1::2] = zeros, ones
    labels = np.tile([0, 1], 30)
    images_path, labels_path = tmp_path / "images-idx3-ubyte", tmp_path / "labels-idx1-ubyte"
    write_idx(images_path, images=images)
    write_idx(labels_path, labels=labels)
    return images_path, labels_path
