"""
Fast gradient projection (FGP) on the dual of the box-constrained WSTV model.

    min_{u in C} 1/2 ||u - f||^2 + tau * sum_i ||(J_K u)(i)||_S1

The dual variable Phi lives in the product of spectral-norm unit balls; the
primal reconstruction is u = P_C(f - tau J_K^* Phi).
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from patch_jacobian import ConvKernel, PatchJacobian, make_gaussian_kernel
from spectral import nuclear_norm_sum, project_binf_sinf
from weights import SmoothSpec, WeightField, compute_weights
from wstv_core import DivergenceError, ModelKind, ShapeError, ValidationError, as_image

logger = logging.getLogger(__name__)

NORM_BOUND_SQ = 8.0 * math.sqrt(2.0)
ESTIMATE_MARGIN = 1.01
ESTIMATE_ITERS = 30

DEFAULT_MAX_ITER = 100
DEFAULT_MAX_ITER_SINGLE_SCALE = 500
DEFAULT_REL_TOL = 1e-5


@dataclass(frozen=True)
class SolverConfig:
    tau: float
    max_iter: int = DEFAULT_MAX_ITER
    rel_tol: float = DEFAULT_REL_TOL
    box_low: float = 0.0
    box_high: float = 1.0
    record_trace: bool = True
    use_estimated_lipschitz: bool = False
    check_every: int = 10

    @classmethod
    def for_model(cls, kind: ModelKind, tau: float, **overrides) -> 'SolverConfig':
        """Config with the iteration cap of ``kind`` unless ``max_iter`` is given."""
        overrides.setdefault(
            'max_iter', DEFAULT_MAX_ITER_SINGLE_SCALE if kind.is_single_scale else DEFAULT_MAX_ITER)
        return cls(tau=tau, **overrides)

    def validate(self) -> None:
        """Raise ValidationError listing every invalid field."""
        errors = []
        if not (np.isfinite(self.tau) and self.tau > 0):
            errors.append(f"tau must be > 0, got {self.tau}")
        if self.max_iter < 1:
            errors.append(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.rel_tol >= 0:
            errors.append(f"rel_tol must be >= 0, got {self.rel_tol}")
        if not self.box_low < self.box_high:
            errors.append(f"box_low must be < box_high, got [{self.box_low}, {self.box_high}]")
        if self.check_every < 1:
            errors.append(f"check_every must be >= 1, got {self.check_every}")
        if errors:
            raise ValidationError("; ".join(errors))

    def with_tau(self, tau: float) -> 'SolverConfig':
        return replace(self, tau=tau)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    primal: float
    dual: float
    gap: float
    rel_change: float
    t: float


@dataclass
class SolverTrace:
    records: List[IterationRecord] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    lipschitz: float = 0.0

    def append(self, record: IterationRecord) -> None:
        self.records.append(record)

    @property
    def final_gap(self) -> Optional[float]:
        return self.records[-1].gap if self.records else None


def lipschitz_constant(tau: float) -> float:
    """L(d) = 8 sqrt(2) tau^2, the dual gradient's Lipschitz bound."""
    return NORM_BOUND_SQ * tau ** 2


def momentum_step(t: float) -> float:
    return (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0


def project_box(u: np.ndarray, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    if not low < high:
        raise ValidationError(f"Box bounds must satisfy low < high, got [{low}, {high}]")
    return np.clip(u, low, high)


def _operator(f: np.ndarray, kernel: ConvKernel, weights: WeightField) -> PatchJacobian:
    return PatchJacobian(f.shape, kernel, weights)


def _dual_residual(op: PatchJacobian, phi: np.ndarray, f: np.ndarray, tau: float) -> np.ndarray:
    """s = f - tau J_K^* Phi."""
    return f - tau * op.adjoint(phi)


def _dual_value(s: np.ndarray, f: np.ndarray, cfg: SolverConfig) -> float:
    projected = project_box(s, cfg.box_low, cfg.box_high)
    return 0.5 * (float(np.sum((s - projected) ** 2)) + float(np.sum(f * f)) - float(np.sum(s * s)))


def _primal_value(op: PatchJacobian, u: np.ndarray, f: np.ndarray, tau: float) -> float:
    return 0.5 * float(np.sum((u - f) ** 2)) + tau * nuclear_norm_sum(op.apply(u))


def dual_gradient(phi: np.ndarray, f, cfg: SolverConfig, kernel: ConvKernel,
                  weights: WeightField) -> np.ndarray:
    """grad d(Phi) = tau J_K P_C(f - tau J_K^* Phi)."""
    f = as_image(f)
    op = _operator(f, kernel, weights)
    z = project_box(_dual_residual(op, phi, f, cfg.tau), cfg.box_low, cfg.box_high)
    return cfg.tau * op.apply(z)


def dual_objective(phi: np.ndarray, f, cfg: SolverConfig, kernel: ConvKernel,
                   weights: WeightField) -> float:
    """d(Phi) = 1/2 ||s - P_C(s)||^2 + 1/2 ||f||^2 - 1/2 ||s||^2 with s = f - tau J_K^* Phi."""
    f = as_image(f)
    op = _operator(f, kernel, weights)
    return _dual_value(_dual_residual(op, phi, f, cfg.tau), f, cfg)


def primal_objective(u, f, cfg: SolverConfig, kernel: ConvKernel, weights: WeightField) -> float:
    """1/2 ||u - f||^2 + tau * WSTV(u)."""
    u, f = as_image(u), as_image(f)
    return _primal_value(_operator(f, kernel, weights), u, f, cfg.tau)


def _relative_change(current: np.ndarray, previous: np.ndarray) -> float:
    diff = float(np.linalg.norm(current - previous))
    base = float(np.linalg.norm(previous))
    if base > 0:
        return diff / base
    return 0.0 if diff == 0 else math.inf


class FGPSolver:
    """
    FISTA-accelerated projected gradient ascent on the dual problem.

    Keeps the two-sequence form: Phi_i is the projected iterate and Y_i the
    extrapolated point the gradient is evaluated at.
    """

    def __init__(self, kernel: ConvKernel, weights: WeightField, cfg: SolverConfig):
        cfg.validate()
        self.kernel = kernel
        self.weights = weights
        self.cfg = cfg

    def step_size(self, op: PatchJacobian) -> Tuple[float, float]:
        """Return (1 / L(d), L(d)) for the configured Lipschitz rule."""
        tau = self.cfg.tau
        lipschitz = lipschitz_constant(tau)
        if self.cfg.use_estimated_lipschitz:
            estimate = ESTIMATE_MARGIN * op.norm_sq_estimate(ESTIMATE_ITERS) * tau ** 2
            if 0 < estimate < lipschitz:
                lipschitz = estimate
        return 1.0 / lipschitz, lipschitz

    def solve(self, f, phi0: Optional[np.ndarray] = None) -> Tuple[np.ndarray, SolverTrace, np.ndarray]:
        """
        Denoise ``f``.

        Returns:
            Tuple of (restored image, trace, final dual field)

        Raises:
            DivergenceError: non-finite values in the iterates
        """
        f = as_image(f)
        cfg = self.cfg
        tau = cfg.tau
        op = _operator(f, self.kernel, self.weights)
        step, lipschitz = self.step_size(op)
        trace = SolverTrace(lipschitz=lipschitz)

        if phi0 is None:
            phi = np.zeros(op.output_shape)
        else:
            if phi0.shape != op.output_shape:
                raise ShapeError(f"Initial dual field has shape {phi0.shape}, expected {op.output_shape}")
            phi = project_binf_sinf(phi0)
        extrapolated = phi
        t = 1.0

        u_prev = project_box(_dual_residual(op, phi, f, tau), cfg.box_low, cfg.box_high)
        u = u_prev
        for iteration in range(1, cfg.max_iter + 1):
            z = project_box(_dual_residual(op, extrapolated, f, tau), cfg.box_low, cfg.box_high)
            gradient = tau * op.apply(z)
            phi_next = project_binf_sinf(extrapolated + step * gradient)

            t_next = momentum_step(t)
            extrapolated = phi_next + ((t - 1.0) / t_next) * (phi_next - phi)
            phi = phi_next

            s = _dual_residual(op, phi, f, tau)
            u = project_box(s, cfg.box_low, cfg.box_high)
            rel_change = _relative_change(u, u_prev)

            if iteration % cfg.check_every == 0 and not np.all(np.isfinite(phi)):
                raise DivergenceError(iteration)

            if cfg.record_trace:
                primal = _primal_value(op, u, f, tau)
                dual = _dual_value(s, f, cfg)
                trace.append(IterationRecord(iteration, primal, dual, primal - dual, rel_change, t))
                logger.debug("iter %d primal=%.6e dual=%.6e gap=%.3e rel=%.3e",
                             iteration, primal, dual, primal - dual, rel_change)

            t = t_next
            u_prev = u
            trace.iterations = iteration
            if rel_change <= cfg.rel_tol:
                trace.converged = True
                break

        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(u))):
            raise DivergenceError(trace.iterations)

        logger.info("FGP finished: tau=%.4g iterations=%d converged=%s",
                    tau, trace.iterations, trace.converged)
        return u, trace, phi


def fgp_denoise(f, cfg: SolverConfig, kernel: ConvKernel, weights: WeightField,
                phi0: Optional[np.ndarray] = None) -> Tuple[np.ndarray, SolverTrace]:
    """Run the FGP solver and return (restored image, trace)."""
    restored, trace, _ = FGPSolver(kernel, weights, cfg).solve(f, phi0=phi0)
    return restored, trace


def model_setup(kind: ModelKind, f, smooth: SmoothSpec = SmoothSpec(),
                kernel_radius: int = 1, kernel_sigma: float = 0.5) -> Tuple[ConvKernel, WeightField]:
    """
    Build the kernel and weights that parameterize ``kind``.

    TV/VTV use K = delta and W = 1, ATV adds the weights, STV uses the Gaussian
    kernel with W = 1 and WSTV uses both. Weights depend on the observed data
    only and are computed once.
    """
    f = as_image(f)
    height, width = f.shape[:2]
    kernel = make_gaussian_kernel(kernel_radius, kernel_sigma) if kind.uses_kernel else ConvKernel.delta()
    weights = compute_weights(f, smooth) if kind.uses_weights else WeightField.ones(height, width)
    return kernel, weights
