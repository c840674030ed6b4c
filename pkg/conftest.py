"""
Shared pytest fixtures.
"""
import numpy as np
import pytest

from image_io import save_image
from image_synth import make_test_image
from patch_jacobian import make_gaussian_kernel
from weights import WeightField


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def clean_image():
    return make_test_image('shapes', 32)


@pytest.fixture
def noisy_image(clean_image):
    noise = np.random.default_rng(99).standard_normal(clean_image.shape)
    return clean_image + 0.1 * noise


@pytest.fixture
def gaussian_kernel():
    return make_gaussian_kernel(1, 0.5)


def random_weights(rng, height, width, low=0.1):
    return WeightField(rng.uniform(low, 1.0, (height, width)), rng.uniform(low, 1.0, (height, width)))


@pytest.fixture
def write_image(tmp_path):
    """Save an array under tmp_path and return the file path."""
    def _write(image, name):
        path = tmp_path / name
        save_image(image, path)
        return path
    return _write
