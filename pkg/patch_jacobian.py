"""
Weighted patch-based Jacobian and its exact adjoint.

A patch-Jacobian field has shape (H, W, L*M, 2). For pixel i, row
h = m*L + l holds sqrt(K[g_l]) * (W grad u_m)(x_i - g_l), where the source
position is mirrored back into the image when it falls outside.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterator, Tuple

import numpy as np
from scipy import sparse

from diff_ops import divergence, forward_gradient
from weights import WeightField
from wstv_core import LinearOperatorInterface, ShapeError, ValidationError, as_image

logger = logging.getLogger(__name__)

DEFAULT_KERNEL_RADIUS = 1
DEFAULT_KERNEL_SIGMA = 0.5
KERNEL_MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ConvKernel:
    """
    Nonnegative (2r+1) x (2r+1) mask of mass 1; entry [r + gy, r + gx] weights shift (gy, gx).

    The mask must be symmetric under flipping either axis. With mirrored
    shifts that makes sum_l K_l S_l^T S_l the identity, so ||J_K||^2 <= 8 sqrt(2).
    """
    weights: np.ndarray

    def __post_init__(self):
        rows, cols = self.weights.shape
        if rows != cols or rows % 2 != 1:
            raise ShapeError(f"Kernel must be square with odd size, got {self.weights.shape}")
        if np.any(self.weights < 0):
            raise ValidationError("Kernel weights must be nonnegative")
        mass = float(self.weights.sum())
        if abs(mass - 1.0) > KERNEL_MASS_TOL:
            raise ValidationError(f"Kernel weights must sum to 1, got {mass!r}")
        for flipped in (self.weights[::-1, :], self.weights[:, ::-1]):
            if not np.allclose(self.weights, flipped, rtol=0.0, atol=KERNEL_MASS_TOL):
                raise ValidationError("Kernel weights must be symmetric under flipping either axis")

    @classmethod
    def delta(cls) -> 'ConvKernel':
        return cls(np.ones((1, 1)))

    @property
    def radius(self) -> int:
        return self.weights.shape[0] // 2

    @property
    def size(self) -> int:
        """L, the number of translations."""
        return self.weights.size

    def taps(self) -> Iterator[Tuple[int, int, int, float]]:
        """Yield (l, gy, gx, weight) in row-major order."""
        r = self.radius
        for l, (iy, ix) in enumerate(np.ndindex(*self.weights.shape)):
            yield l, iy - r, ix - r, float(self.weights[iy, ix])


def make_gaussian_kernel(radius: int, sigma: float) -> ConvKernel:
    """Sampled 2-D Gaussian on the (2r+1)^2 grid, normalized to sum 1."""
    if radius < 0:
        raise ValidationError(f"Kernel radius must be >= 0, got {radius}")
    if radius == 0:
        return ConvKernel.delta()
    if not sigma > 0:
        raise ValidationError(f"Kernel sigma must be > 0, got {sigma}")

    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    gy, gx = np.meshgrid(offsets, offsets, indexing='ij')
    weights = np.exp(-(gx ** 2 + gy ** 2) / (2.0 * sigma ** 2))
    return ConvKernel(weights / weights.sum())


def mirror_index(index: np.ndarray, n: int) -> np.ndarray:
    """Fold indices into [0, n) with half-sample symmetric extension."""
    folded = np.mod(index, 2 * n)
    return np.where(folded >= n, 2 * n - 1 - folded, folded)


class PatchJacobian(LinearOperatorInterface):
    """
    The weighted patch-based Jacobian for images of a fixed shape.

    Shifts are realised by gathering along mirrored index maps; the adjoint
    uses the transposed selection matrices so every output pixel sums its
    own contributions.
    """

    def __init__(self, shape: Tuple[int, int, int], kernel: ConvKernel, weights: WeightField):
        height, width, channels = shape
        if (weights.height, weights.width) != (height, width):
            raise ShapeError(
                f"Weight field is {weights.height}x{weights.width}, image is {height}x{width}")
        self._shape = (height, width, channels)
        self.kernel = kernel
        self.weights = weights

        self._row_maps: Dict[int, np.ndarray] = {}
        self._col_maps: Dict[int, np.ndarray] = {}
        self._row_adjoints: Dict[int, sparse.csr_matrix] = {}
        self._col_adjoints: Dict[int, sparse.csr_matrix] = {}
        for shift in range(-kernel.radius, kernel.radius + 1):
            self._row_maps[shift] = mirror_index(np.arange(height) - shift, height)
            self._col_maps[shift] = mirror_index(np.arange(width) - shift, width)
            self._row_adjoints[shift] = _selection_transpose(self._row_maps[shift], height)
            self._col_adjoints[shift] = _selection_transpose(self._col_maps[shift], width)

    @property
    def input_shape(self) -> Tuple[int, ...]:
        return self._shape

    @property
    def output_shape(self) -> Tuple[int, ...]:
        height, width, channels = self._shape
        return (height, width, self.kernel.size * channels, 2)

    def apply(self, u: np.ndarray) -> np.ndarray:
        u = as_image(u)
        if u.shape != self._shape:
            raise ShapeError(f"Operator expects images of shape {self._shape}, got {u.shape}")

        weighted = self.weights.apply(forward_gradient(u))
        size = self.kernel.size
        out = np.empty(self.output_shape)
        for l, gy, gx, weight in self.kernel.taps():
            shifted = weighted[self._row_maps[gy]][:, self._col_maps[gx]]
            out[:, :, l::size, :] = np.sqrt(weight) * shifted
        return out

    def adjoint(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.output_shape:
            raise ShapeError(f"Operator expects fields of shape {self.output_shape}, got {x.shape}")

        height, width, channels = self._shape
        size = self.kernel.size
        acc = np.zeros((height, width, channels, 2))
        for l, gy, gx, weight in self.kernel.taps():
            block = np.sqrt(weight) * x[:, :, l::size, :]
            acc += self._unshift(block, gy, gx)
        return -divergence(self.weights.apply(acc))

    def _unshift(self, block: np.ndarray, gy: int, gx: int) -> np.ndarray:
        height, width = block.shape[:2]
        tail = block.shape[2:]
        rows = self._row_adjoints[gy] @ block.reshape(height, -1)
        rows = rows.reshape((height, width) + tail)
        cols = self._col_adjoints[gx] @ np.moveaxis(rows, 1, 0).reshape(width, -1)
        return np.moveaxis(cols.reshape((width, height) + tail), 0, 1)


def _selection_transpose(index_map: np.ndarray, n: int) -> sparse.csr_matrix:
    """Transpose of the n x n selection matrix S with S[i, index_map[i]] = 1."""
    selection = sparse.csr_matrix(
        (np.ones(n), (np.arange(n), index_map)), shape=(n, n))
    return selection.T.tocsr()


def jacobian_apply(u, kernel: ConvKernel, weights: WeightField) -> np.ndarray:
    u = as_image(u)
    return PatchJacobian(u.shape, kernel, weights).apply(u)


def jacobian_adjoint(x: np.ndarray, kernel: ConvKernel, weights: WeightField) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or x.shape[2] % kernel.size != 0:
        raise ShapeError(f"Field shape {x.shape} does not match a kernel with L = {kernel.size}")
    shape = (x.shape[0], x.shape[1], x.shape[2] // kernel.size)
    return PatchJacobian(shape, kernel, weights).adjoint(x)


def operator_norm_sq_estimate(kernel: ConvKernel, weights: WeightField, iters: int,
                              channels: int = 1, seed: int = 0) -> float:
    """Power-iteration estimate of ||J_K||^2 on the image grid of ``weights``."""
    operator = PatchJacobian((weights.height, weights.width, channels), kernel, weights)
    estimate = operator.norm_sq_estimate(iters, seed=seed)
    logger.debug("||J_K||^2 estimate after %d iterations: %.6f", iters, estimate)
    return estimate
