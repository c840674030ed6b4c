import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from metrics import PSNR_INFINITE, MetricReport, compare, psnr, ssim
from wstv_core import ShapeError


def reference_ssim(x, y, sigma=1.5, radius=5, k1=0.01, k2=0.03):
    """Mean SSIM over every fully contained 11x11 Gaussian window."""
    offsets = np.arange(-radius, radius + 1)
    g = np.exp(-offsets ** 2 / (2.0 * sigma ** 2))
    g /= g.sum()
    window = np.outer(g, g)
    c1, c2 = k1 ** 2, k2 ** 2

    values = []
    height, width = x.shape
    for i in range(radius, height - radius):
        for j in range(radius, width - radius):
            px = x[i - radius:i + radius + 1, j - radius:j + radius + 1]
            py = y[i - radius:i + radius + 1, j - radius:j + radius + 1]
            mx = np.sum(window * px)
            my = np.sum(window * py)
            vx = np.sum(window * px * px) - mx * mx
            vy = np.sum(window * py * py) - my * my
            cov = np.sum(window * px * py) - mx * my
            values.append(((2 * mx * my + c1) * (2 * cov + c2))
                          / ((mx * mx + my * my + c1) * (vx + vy + c2)))
    return float(np.mean(values))


def test_psnr_of_constant_offset_is_20db():
    ref = np.full((32, 32), 0.5)
    assert psnr(ref, ref + 0.1) == pytest.approx(20.0, abs=1e-6)


def test_psnr_identical_is_infinite():
    image = np.random.default_rng(0).random((16, 16, 3))
    assert psnr(image, image) == PSNR_INFINITE
    assert math.isinf(PSNR_INFINITE)


def test_psnr_uses_joint_mse_over_channels():
    ref = np.zeros((16, 16, 3))
    test = ref.copy()
    test[:, :, 1] = 0.3
    assert psnr(ref, test) == pytest.approx(10.0 * math.log10(1.0 / 0.03))


def test_psnr_shape_mismatch():
    with pytest.raises(ShapeError):
        psnr(np.zeros((8, 8)), np.zeros((8, 9)))


def test_psnr_is_symmetric_and_shift_invariant(rng):
    ref = rng.random((16, 16, 3))
    test = np.clip(ref + 0.05 * rng.standard_normal(ref.shape), 0.0, 1.0)
    assert psnr(ref, test) == psnr(test, ref)
    assert psnr(ref + 0.25, test + 0.25) == pytest.approx(psnr(ref, test), rel=1e-12)


def test_ssim_of_identical_images_is_one(rng):
    image = rng.random((32, 32))
    assert ssim(image, image) == pytest.approx(1.0, abs=1e-12)


def test_ssim_matches_sliding_window_reference():
    rng = np.random.default_rng(2024)
    for _ in range(10):
        x = rng.random((20, 23))
        y = np.clip(x + 0.2 * rng.standard_normal(x.shape), 0, 1)
        assert_allclose(ssim(x, y), reference_ssim(x, y), rtol=0, atol=1e-8)


def test_ssim_is_channel_mean(rng):
    ref = rng.random((24, 24, 3))
    test = np.clip(ref + 0.1 * rng.standard_normal(ref.shape), 0, 1)
    per_channel = [ssim(ref[:, :, m], test[:, :, m]) for m in range(3)]
    assert_allclose(ssim(ref, test), np.mean(per_channel), rtol=1e-12)


def test_ssim_requires_window_sized_images():
    with pytest.raises(ShapeError):
        ssim(np.zeros((10, 30)), np.zeros((10, 30)))


def test_ssim_drops_with_noise(rng):
    ref = rng.random((32, 32))
    light = ref + 0.02 * rng.standard_normal(ref.shape)
    heavy = ref + 0.2 * rng.standard_normal(ref.shape)
    assert ssim(ref, heavy) < ssim(ref, light) < 1.0


def test_compare_bundles_both_metrics(rng):
    ref = rng.random((16, 16))
    test = ref + 0.05
    report = compare(ref, test)
    assert isinstance(report, MetricReport)
    assert report.psnr == pytest.approx(psnr(ref, test))
    assert report.ssim == pytest.approx(ssim(ref, test))
