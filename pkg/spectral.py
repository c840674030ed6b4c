"""
Per-pixel spectral computations on (R x 2) blocks of a patch-Jacobian field.

Singular values come from the closed-form eigenvalues of the 2x2 Gram matrix
B^T B. The Gram determinant is evaluated by Gram-Schmidt on the two columns
so that rank-deficient blocks keep an accurate (near zero) small singular value.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from patch_jacobian import ConvKernel, jacobian_apply
from weights import WeightField
from wstv_core import ShapeError, UnsupportedOrderError

RANK_TOL = 1e-12


@dataclass(frozen=True)
class SingularPair:
    sigma_plus: float
    sigma_minus: float


def _check_blocks(blocks: np.ndarray) -> np.ndarray:
    blocks = np.asarray(blocks, dtype=np.float64)
    if blocks.ndim < 2 or blocks.shape[-1] != 2:
        raise ShapeError(f"Expected blocks of shape (..., R, 2), got {blocks.shape}")
    return blocks


def gram_entries(blocks: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return (a, c, d, det) of the Gram matrix [[a, c], [c, d]] of every block."""
    col0 = blocks[..., 0]
    col1 = blocks[..., 1]
    a = np.sum(col0 * col0, axis=-1)
    d = np.sum(col1 * col1, axis=-1)
    c = np.sum(col0 * col1, axis=-1)

    # det = |long|^2 * |short - proj_long(short)|^2
    first_longer = (a >= d)[..., np.newaxis]
    long_col = np.where(first_longer, col0, col1)
    short_col = np.where(first_longer, col1, col0)
    long_sq = np.maximum(a, d)
    ratio = np.divide(c, long_sq, out=np.zeros_like(c), where=long_sq > 0)
    residual = short_col - ratio[..., np.newaxis] * long_col
    det = long_sq * np.sum(residual * residual, axis=-1)
    return a, c, d, det


def gram_eigenvalues(a, c, d, det) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (lambda_plus, lambda_minus) of [[a, c], [c, d]], both >= 0."""
    root = np.sqrt((a - d) ** 2 + 4.0 * c * c)
    lam_plus = 0.5 * (a + d + root)
    lam_minus = np.divide(det, lam_plus, out=np.zeros_like(lam_plus), where=lam_plus > 0)
    return lam_plus, np.maximum(lam_minus, 0.0)


def singular_values(blocks: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised (sigma_plus, sigma_minus) over the leading axes of ``blocks``."""
    blocks = _check_blocks(blocks)
    lam_plus, lam_minus = gram_eigenvalues(*gram_entries(blocks))
    return np.sqrt(lam_plus), np.sqrt(lam_minus)


def singular_pair(block: np.ndarray) -> SingularPair:
    block = _check_blocks(block)
    if block.ndim != 2:
        raise ShapeError(f"Expected a single (R, 2) block, got {block.shape}")
    sigma_plus, sigma_minus = singular_values(block)
    return SingularPair(float(sigma_plus), float(sigma_minus))


def schatten_norm(sigma_plus: np.ndarray, sigma_minus: np.ndarray, p: float) -> np.ndarray:
    """Schatten-p norm of each block from its two singular values."""
    if p == np.inf:
        return np.maximum(sigma_plus, sigma_minus)
    if p < 1:
        raise UnsupportedOrderError(f"Schatten order must be >= 1, got {p}")
    if p == 1:
        return sigma_plus + sigma_minus
    return (sigma_plus ** p + sigma_minus ** p) ** (1.0 / p)


def nuclear_norm_sum(field: np.ndarray) -> float:
    """Sum over pixels of the nuclear norm of each block."""
    sigma_plus, sigma_minus = singular_values(field)
    return float(np.sum(sigma_plus + sigma_minus))


def wstv_value(u, kernel: ConvKernel, weights: WeightField, p: float = 1) -> float:
    """The regularizer: sum of per-pixel Schatten-1 norms of J_K u."""
    if p != 1:
        raise UnsupportedOrderError(f"Only the nuclear norm (p = 1) is supported, got p = {p}")
    return nuclear_norm_sum(jacobian_apply(u, kernel, weights))


def _leading_eigenvector(a, c, d, lam_plus) -> np.ndarray:
    first = np.stack([lam_plus - d, c], axis=-1)
    second = np.stack([c, lam_plus - a], axis=-1)
    first_norm = np.linalg.norm(first, axis=-1)
    second_norm = np.linalg.norm(second, axis=-1)
    use_first = (first_norm >= second_norm)[..., np.newaxis]
    vec = np.where(use_first, first, second)
    norm = np.maximum(first_norm, second_norm)[..., np.newaxis]
    fallback = np.broadcast_to(np.array([1.0, 0.0]), vec.shape)
    return np.where(norm > 0, vec / np.where(norm > 0, norm, 1.0), fallback)


def project_binf_sinf(phi: np.ndarray) -> np.ndarray:
    """
    Project every (R x 2) block onto the spectral-norm unit ball.

    Each block B becomes B V diag(f) V^T with f_k = min(sigma_k, 1) / sigma_k;
    directions with sigma_k <= RANK_TOL * max(1, sigma_plus) keep f_k = 1.
    Blocks whose singular values are all <= 1 are returned unchanged.
    """
    phi = _check_blocks(phi)
    out = phi.copy()
    flat = out.reshape((-1,) + phi.shape[-2:])

    a, c, d, det = gram_entries(flat)
    lam_plus, lam_minus = gram_eigenvalues(a, c, d, det)
    sigma_plus = np.sqrt(lam_plus)
    active = sigma_plus > 1.0
    if not np.any(active):
        return out

    a, c, d = a[active], c[active], d[active]
    sigma_plus = sigma_plus[active]
    sigma_minus = np.sqrt(lam_minus[active])

    v_plus = _leading_eigenvector(a, c, d, lam_plus[active])
    v_minus = np.stack([-v_plus[:, 1], v_plus[:, 0]], axis=-1)

    rank_tol = RANK_TOL * np.maximum(1.0, sigma_plus)
    f_plus = 1.0 / sigma_plus
    f_minus = np.where(sigma_minus > np.maximum(1.0, rank_tol),
                       1.0 / np.where(sigma_minus > 0, sigma_minus, 1.0), 1.0)

    shrink = (f_plus[:, None, None] * v_plus[:, :, None] * v_plus[:, None, :]
              + f_minus[:, None, None] * v_minus[:, :, None] * v_minus[:, None, :])
    flat[active] = flat[active] @ shrink
    return out
