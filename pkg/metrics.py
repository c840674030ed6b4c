"""
Image quality metrics: PSNR with peak 1 and Gaussian-window SSIM.
"""
import math
from dataclasses import dataclass

import numpy as np
from skimage.metrics import structural_similarity

from wstv_core import ShapeError, as_image, check_same_shape

PSNR_INFINITE = math.inf

SSIM_SIGMA = 1.5
SSIM_WINDOW = 11
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DATA_RANGE = 1.0

PSNR_CONVENTION = "joint MSE over all pixels and channels, peak 1"
SSIM_CONVENTION = "mean local SSIM, 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03, range 1; mean over channels"


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float


def psnr(ref, test) -> float:
    """
    Peak signal-to-noise ratio in dB for intensities in [0, 1].

    Returns PSNR_INFINITE when the images are identical.
    """
    ref, test = as_image(ref), as_image(test)
    check_same_shape(ref, test)
    mse = float(np.mean((ref - test) ** 2))
    if mse == 0.0:
        return PSNR_INFINITE
    return 10.0 * math.log10(DATA_RANGE ** 2 / mse)


def ssim(ref, test) -> float:
    """Structural similarity, averaged over channels for multichannel input."""
    ref, test = as_image(ref), as_image(test)
    check_same_shape(ref, test)
    height, width, channels = ref.shape
    if height < SSIM_WINDOW or width < SSIM_WINDOW:
        raise ShapeError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {height}x{width}")

    options = dict(
        data_range=DATA_RANGE,
        gaussian_weights=True,
        sigma=SSIM_SIGMA,
        use_sample_covariance=False,
        K1=SSIM_K1,
        K2=SSIM_K2,
    )
    if channels == 1:
        return float(structural_similarity(ref[:, :, 0], test[:, :, 0], **options))
    return float(structural_similarity(ref, test, channel_axis=-1, **options))


def compare(ref, test) -> MetricReport:
    return MetricReport(psnr=psnr(ref, test), ssim=ssim(ref, test))
