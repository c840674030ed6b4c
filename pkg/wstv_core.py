"""
Core types, interfaces and errors for the WSTV denoising system.
"""
from abc import ABC, abstractmethod
from enum import Enum
from typing import Optional, Tuple

import numpy as np


class ModelKind(Enum):
    """Regularizers supported by the dual solver.

    Every kind is a parameterization of the same weighted patch-Jacobian
    path: the kind only decides which kernel and which weights are built.
    """
    TV = 'tv'
    ATV = 'atv'
    VTV = 'vtv'
    STV = 'stv'
    WSTV = 'wstv'

    @property
    def uses_kernel(self) -> bool:
        """True when the model aggregates a Gaussian neighbourhood (K != delta)."""
        return self in (ModelKind.STV, ModelKind.WSTV)

    @property
    def uses_weights(self) -> bool:
        """True when the anisotropic weights are computed from the data."""
        return self in (ModelKind.ATV, ModelKind.WSTV)

    @property
    def is_single_scale(self) -> bool:
        return not self.uses_kernel

    @classmethod
    def from_name(cls, name: str) -> 'ModelKind':
        try:
            return cls(name.strip().lower())
        except ValueError:
            available = ', '.join(kind.value for kind in cls)
            raise ValidationError(f"Unknown model '{name}'. Available: {available}")


class LinearOperatorInterface(ABC):
    """Abstract base class for the linear operators of the model.

    Subclasses map images of shape ``input_shape`` to fields of shape
    ``output_shape`` and must implement the exact adjoint.
    """

    @property
    @abstractmethod
    def input_shape(self) -> Tuple[int, ...]:
        pass

    @property
    @abstractmethod
    def output_shape(self) -> Tuple[int, ...]:
        pass

    @abstractmethod
    def apply(self, u: np.ndarray) -> np.ndarray:
        """Apply the operator to an image."""
        pass

    @abstractmethod
    def adjoint(self, x: np.ndarray) -> np.ndarray:
        """Apply the adjoint operator to a field."""
        pass

    def norm_sq_estimate(self, iters: int = 50, seed: int = 0) -> float:
        """
        Power-iteration estimate of ||A||^2, the largest eigenvalue of A*A.

        The Rayleigh quotient of successive power iterates of a positive
        semidefinite operator never decreases, so the estimate is
        nondecreasing in ``iters`` for a fixed seed.
        """
        if iters < 1:
            raise ValidationError("Power iteration needs at least one iteration")

        rng = np.random.default_rng(seed)
        x = rng.standard_normal(self.input_shape)
        x /= np.linalg.norm(x)

        estimate = 0.0
        for _ in range(iters):
            y = self.adjoint(self.apply(x))
            estimate = float(np.vdot(x, y))
            norm = np.linalg.norm(y)
            if norm == 0.0:
                return 0.0
            x = y / norm
        return estimate


def as_image(data) -> np.ndarray:
    """Return ``data`` as a float64 (H, W, M) array; 2-D input gets M = 1."""
    image = np.asarray(data, dtype=np.float64)
    if image.ndim == 2:
        image = image[:, :, np.newaxis]
    if image.ndim != 3:
        raise ShapeError(f"Expected an (H, W) or (H, W, M) image, got shape {image.shape}")
    if min(image.shape) < 1:
        raise ShapeError(f"Image dimensions must be positive, got {image.shape}")
    return image


def check_same_shape(ref: np.ndarray, test: np.ndarray, what: str = "images") -> None:
    """Raise ShapeError unless both arrays have identical shapes."""
    if ref.shape != test.shape:
        raise ShapeError(f"Shape mismatch between {what}: {ref.shape} vs {test.shape}")


class WSTVError(Exception):
    """Base exception for denoising-related errors."""
    pass


class ImageFormatError(WSTVError):
    """Exception raised for malformed or unsupported image files."""

    def __init__(self, field: str, message: str, path: Optional[str] = None):
        text = f"{field}: {message}"
        super().__init__(f"{path}: {text}" if path else text)
        self.field = field
        self.detail = message
        self.path = path


class ShapeError(WSTVError, ValueError):
    """Exception raised when array dimensions do not agree."""
    pass


class UnsupportedOrderError(WSTVError, ValueError):
    """Exception raised for a Schatten order the regularizer does not support."""
    pass


class DivergenceError(WSTVError):
    """Exception raised when the solver produces non-finite values."""

    def __init__(self, iteration: int, message: Optional[str] = None):
        super().__init__(message or f"Non-finite values encountered at iteration {iteration}")
        self.iteration = iteration


class ValidationError(WSTVError, ValueError):
    """Exception raised during parameter or configuration validation."""
    pass
