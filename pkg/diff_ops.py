"""
Forward-difference gradient and backward-difference divergence, per channel.

Gradient fields have shape (H, W, M, 2) with (d_x, d_y) on the last axis;
d_x runs along columns and d_y along rows.
"""
from typing import Tuple

import numpy as np

from wstv_core import LinearOperatorInterface, ShapeError, as_image


def forward_gradient(image) -> np.ndarray:
    """Forward differences with a zero difference on the last column/row."""
    u = as_image(image)
    grad = np.zeros(u.shape + (2,))
    grad[:, :-1, :, 0] = u[:, 1:, :] - u[:, :-1, :]
    grad[:-1, :, :, 1] = u[1:, :, :] - u[:-1, :, :]
    return grad


def divergence(field: np.ndarray) -> np.ndarray:
    """Backward-difference divergence, the negative adjoint of forward_gradient."""
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 4 or field.shape[-1] != 2:
        raise ShapeError(f"Expected a (H, W, M, 2) gradient field, got shape {field.shape}")

    px = field[..., 0]
    py = field[..., 1]
    div = np.zeros(field.shape[:-1])
    div[:, :-1] += px[:, :-1]
    div[:, 1:] -= px[:, :-1]
    div[:-1, :] += py[:-1, :]
    div[1:, :] -= py[:-1, :]
    return div


class GradientOperator(LinearOperatorInterface):
    """The discrete gradient as a linear operator, adjoint = -div."""

    def __init__(self, shape: Tuple[int, int, int]):
        self._shape = tuple(shape)

    @property
    def input_shape(self) -> Tuple[int, ...]:
        return self._shape

    @property
    def output_shape(self) -> Tuple[int, ...]:
        return self._shape + (2,)

    def apply(self, u: np.ndarray) -> np.ndarray:
        return forward_gradient(u)

    def adjoint(self, x: np.ndarray) -> np.ndarray:
        return -divergence(x)
