"""
Noise synthesis and procedurally generated test images.
"""
from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from wstv_core import ValidationError

RNG_ALGORITHM = "numpy.random.default_rng (PCG64), standard_normal"


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise with standard deviation ``sigma`` (intensity units)."""
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValidationError(f"Noise sigma must be a finite value >= 0, got {self.sigma}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ValidationError(f"Noise seed must be an unsigned 64-bit integer, got {self.seed}")


def add_gaussian_noise(image: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """
    Return ``image + e`` with e i.i.d. N(0, sigma^2), drawn from a generator
    seeded with ``spec.seed``. The result is not clamped.
    """
    image = np.asarray(image, dtype=np.float64)
    if spec.sigma == 0:
        return image.copy()
    rng = np.random.default_rng(spec.seed)
    return image + spec.sigma * rng.standard_normal(image.shape)


def _grid(size: int):
    coords = (np.arange(size) + 0.5) / size
    return np.meshgrid(coords, coords, indexing='ij')


def _cameraman(size: int) -> np.ndarray:
    """Dark figure with tripod on a graded sky over a lighter lawn."""
    y, x = _grid(size)
    image = 0.75 + 0.15 * (1.0 - y)
    lawn = y > 0.72
    image[lawn] = 0.55 + 0.05 * np.sin(40 * x[lawn]) * np.cos(23 * y[lawn])

    head = (x - 0.42) ** 2 + (y - 0.22) ** 2 < 0.065 ** 2
    coat = (np.abs(x - 0.42) < 0.05 + 0.25 * (y - 0.28)) & (y > 0.28) & (y < 0.78)
    arm = (np.abs(y - 0.38) < 0.025) & (x > 0.42) & (x < 0.62)
    camera = (np.abs(x - 0.63) < 0.05) & (np.abs(y - 0.36) < 0.035)
    image[coat] = 0.12
    image[head] = 0.18
    image[arm] = 0.1
    image[camera] = 0.05

    for foot in (0.52, 0.62, 0.72):
        top_x = 0.63
        t = np.clip((y - 0.4) / 0.5, 0.0, 1.0)
        leg = (np.abs(x - (top_x + (foot - top_x) * t)) < 0.006) & (y > 0.4) & (y < 0.9)
        image[leg] = 0.08

    building = (x > 0.82) & (x < 0.9) & (y > 0.45) & (y < 0.72)
    image[building] = 0.62
    return image


def _shapes(size: int) -> np.ndarray:
    y, x = _grid(size)
    image = np.full((size, size), 0.3)
    image[(x > 0.1) & (x < 0.45) & (y > 0.15) & (y < 0.6)] = 0.8
    image[(x - 0.7) ** 2 + (y - 0.35) ** 2 < 0.18 ** 2] = 0.55
    image[(y > 0.7) & (x > 0.2) & (x < 0.9) & (y < 0.2 + x)] = 0.95
    image += 0.1 * x
    return np.clip(image, 0.0, 1.0)


def _texture(size: int) -> np.ndarray:
    y, x = _grid(size)
    stripes = 0.5 + 0.3 * np.sin(2 * np.pi * 12 * (x + 0.3 * y))
    checker = ((np.floor(8 * x) + np.floor(8 * y)) % 2) * 0.2
    return np.clip(0.7 * stripes + checker, 0.0, 1.0)


def _color(size: int) -> np.ndarray:
    return np.stack([_shapes(size), _cameraman(size), _texture(size)], axis=2)


TEST_IMAGES: Dict[str, Callable[[int], np.ndarray]] = {
    'cameraman': _cameraman,
    'shapes': _shapes,
    'texture': _texture,
    'color': _color,
}


def make_test_image(kind: str, size: int = 256) -> np.ndarray:
    """Build a deterministic (size, size, M) test image with values in [0, 1]."""
    if kind not in TEST_IMAGES:
        raise ValidationError(f"Unknown test image '{kind}'. Available: {', '.join(TEST_IMAGES)}")
    if size < 16:
        raise ValidationError(f"Test images must be at least 16 pixels wide, got {size}")
    image = TEST_IMAGES[kind](size)
    if image.ndim == 2:
        image = image[:, :, np.newaxis]
    return image
