"""
Experiment harness: noisy realizations, per-model tau sweeps and result tables.

Each (image, sigma, model) cell is an independent job. The noise seed depends on
the image id, sigma and the master seed only, so every model in a cell group
denoises the identical noisy image.
"""
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from image_io import load_image, save_image
from image_synth import RNG_ALGORITHM, NoiseSpec, add_gaussian_noise, make_test_image
from metrics import PSNR_CONVENTION, SSIM_CONVENTION, psnr, ssim
from patch_jacobian import DEFAULT_KERNEL_RADIUS, DEFAULT_KERNEL_SIGMA
from reporting import BenchExporter, emit_difference_image
from solvers import DEFAULT_REL_TOL, FGPSolver, SolverConfig, model_setup
from weights import SmoothSpec
from wstv_core import ModelKind, ValidationError, as_image

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DEFAULT_NOISE_LEVELS = (0.01, 0.05, 0.1, 0.15)
DEFAULT_MODELS = (ModelKind.TV, ModelKind.STV, ModelKind.WSTV)
DEFAULT_TAU_MIN = 0.005
DEFAULT_TAU_MAX = 0.5
DEFAULT_TAU_COUNT = 15

CSV_NAME = 'results.csv'
MARKDOWN_NAME = 'results.md'
META_NAME = 'bench_meta.json'


def default_tau_grid(tau_min: float = DEFAULT_TAU_MIN, tau_max: float = DEFAULT_TAU_MAX,
                     count: int = DEFAULT_TAU_COUNT) -> Tuple[float, ...]:
    """Logarithmically spaced tau values from tau_min to tau_max inclusive."""
    if not 0 < tau_min <= tau_max:
        raise ValidationError(f"Tau range must satisfy 0 < min <= max, got [{tau_min}, {tau_max}]")
    if count < 1:
        raise ValidationError(f"Tau grid needs at least one value, got {count}")
    if count == 1:
        return (float(tau_min),)
    return tuple(float(tau) for tau in np.geomspace(tau_min, tau_max, count))


def derive_seed(image_id: str, sigma: float, master_seed: int) -> int:
    """Unsigned 64-bit noise seed from (image id, sigma, master seed)."""
    digest = hashlib.sha256(f"{image_id}|{sigma!r}|{master_seed}".encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'big')


@dataclass(frozen=True, eq=False)
class ImageSource:
    image_id: str
    image: np.ndarray

    @classmethod
    def from_path(cls, path: PathLike) -> 'ImageSource':
        path = Path(path)
        return cls(path.stem, load_image(path))

    @classmethod
    def synthetic(cls, kind: str, size: int = 256) -> 'ImageSource':
        return cls(kind, make_test_image(kind, size))


def load_sources(paths: Sequence[PathLike]) -> List[ImageSource]:
    """Read every image up front; the first unreadable file aborts the run."""
    sources = []
    for path in paths:
        try:
            sources.append(ImageSource.from_path(path))
        except OSError as exc:
            raise OSError(f"Cannot read image {path}: {exc.strerror or exc}") from exc
    return sources


@dataclass
class ExperimentPlan:
    sources: List[ImageSource]
    noise_levels: Tuple[float, ...] = DEFAULT_NOISE_LEVELS
    models: Tuple[ModelKind, ...] = DEFAULT_MODELS
    tau_grid: Tuple[float, ...] = field(default_factory=default_tau_grid)
    tau_overrides: Mapping[ModelKind, Tuple[float, ...]] = field(default_factory=dict)
    master_seed: int = 0
    output_dir: Optional[Path] = None
    smooth: SmoothSpec = SmoothSpec()
    kernel_radius: int = DEFAULT_KERNEL_RADIUS
    kernel_sigma: float = DEFAULT_KERNEL_SIGMA
    max_iter: Optional[int] = None
    rel_tol: float = DEFAULT_REL_TOL
    use_estimated_lipschitz: bool = False
    warm_start: bool = False
    difference_images: bool = True
    jobs: int = 1

    def grid_for(self, kind: ModelKind) -> Tuple[float, ...]:
        """The tau grid of ``kind``, sorted ascending."""
        return tuple(sorted(self.tau_overrides.get(kind, self.tau_grid)))

    def validate(self) -> None:
        errors = []
        if not self.sources:
            errors.append("at least one image is required")
        ids = [source.image_id for source in self.sources]
        if len(set(ids)) != len(ids):
            errors.append(f"image ids must be unique, got {ids}")
        if not self.noise_levels:
            errors.append("at least one noise level is required")
        for sigma in self.noise_levels:
            if not (math.isfinite(sigma) and sigma >= 0):
                errors.append(f"noise levels must be finite and >= 0, got {sigma}")
        if not self.models:
            errors.append("at least one model is required")
        for kind in self.models:
            grid = self.grid_for(kind)
            if not grid:
                errors.append(f"tau grid for {kind.value} is empty")
            elif not all(math.isfinite(tau) and tau > 0 for tau in grid):
                errors.append(f"tau values for {kind.value} must be finite and > 0")
        if self.max_iter is not None and self.max_iter < 1:
            errors.append(f"max_iter must be >= 1, got {self.max_iter}")
        if self.jobs < 1:
            errors.append(f"jobs must be >= 1, got {self.jobs}")
        if not 0 <= self.master_seed < 2 ** 64:
            errors.append(f"master seed must be an unsigned 64-bit integer, got {self.master_seed}")
        if errors:
            raise ValidationError("Invalid experiment plan: " + "; ".join(errors))

    def solver_config(self, kind: ModelKind, tau: float) -> SolverConfig:
        overrides = dict(rel_tol=self.rel_tol, record_trace=False,
                         use_estimated_lipschitz=self.use_estimated_lipschitz)
        if self.max_iter is not None:
            overrides['max_iter'] = self.max_iter
        return SolverConfig.for_model(kind, tau, **overrides)


@dataclass(frozen=True)
class BenchRow:
    image: str
    model: str
    sigma: float
    tau: float
    psnr: float
    ssim: float
    iters: int
    wall_ms: float


@dataclass(frozen=True)
class _Cell:
    index: int
    image_id: str
    clean: np.ndarray
    sigma: float
    seed: int
    kind: ModelKind
    grid: Tuple[float, ...]
    plan_settings: dict


@dataclass(frozen=True)
class CellResult:
    row: BenchRow
    noisy: np.ndarray
    restored: np.ndarray


def build_cells(plan: ExperimentPlan) -> List[_Cell]:
    """Cells in plan order: image, then sigma, then model."""
    settings = dict(
        smooth=plan.smooth,
        kernel_radius=plan.kernel_radius,
        kernel_sigma=plan.kernel_sigma,
        configs={kind: plan.solver_config(kind, 1.0) for kind in plan.models},
        warm_start=plan.warm_start,
    )
    cells = []
    for source in plan.sources:
        clean = as_image(source.image)
        for sigma in plan.noise_levels:
            seed = derive_seed(source.image_id, sigma, plan.master_seed)
            for kind in plan.models:
                cells.append(_Cell(len(cells), source.image_id, clean, float(sigma), seed,
                                   kind, plan.grid_for(kind), settings))
    return cells


def _run_cell(cell: _Cell) -> CellResult:
    """Sweep the tau grid of one cell and keep the PSNR-maximizing restoration."""
    settings = cell.plan_settings
    started = time.perf_counter()
    noisy = add_gaussian_noise(cell.clean, NoiseSpec(cell.sigma, cell.seed))

    if cell.sigma == 0:
        row = BenchRow(cell.image_id, cell.kind.value, cell.sigma, cell.grid[0],
                       psnr(cell.clean, noisy), ssim(cell.clean, noisy), 0,
                       (time.perf_counter() - started) * 1000.0)
        return CellResult(row, noisy, noisy)

    kernel, weights = model_setup(cell.kind, noisy, settings['smooth'],
                                  settings['kernel_radius'], settings['kernel_sigma'])
    base = settings['configs'][cell.kind]

    best = None
    phi = None
    for tau in cell.grid:
        solver = FGPSolver(kernel, weights, base.with_tau(tau))
        restored, trace, phi_next = solver.solve(noisy, phi0=phi if settings['warm_start'] else None)
        phi = phi_next
        score = psnr(cell.clean, restored)
        logger.debug("%s sigma=%g %s tau=%.4g psnr=%.4f iters=%d",
                     cell.image_id, cell.sigma, cell.kind.value, tau, score, trace.iterations)
        if best is None or score > best[0]:
            best = (score, tau, restored, trace.iterations)

    score, tau, restored, iterations = best
    wall_ms = (time.perf_counter() - started) * 1000.0
    row = BenchRow(cell.image_id, cell.kind.value, cell.sigma, tau, score,
                   ssim(cell.clean, restored), iterations, wall_ms)
    logger.info("%s sigma=%g %s: best tau=%.4g psnr=%.4f ssim=%.4f (%.0f ms)",
                cell.image_id, cell.sigma, cell.kind.value, tau, score, row.ssim, wall_ms)
    return CellResult(row, noisy, restored)


def _image_suffix(image: np.ndarray) -> str:
    return '.pgm' if image.shape[2] == 1 else '.ppm'


def _write_cell_images(plan: ExperimentPlan, cell: _Cell, result: CellResult, written: set) -> None:
    out_dir = Path(plan.output_dir)
    stem = f"{cell.image_id}_s{cell.sigma:g}"
    suffix = _image_suffix(result.restored)

    noisy_path = out_dir / f"{stem}_noisy{suffix}"
    if noisy_path not in written:
        save_image(result.noisy, noisy_path)
        written.add(noisy_path)

    save_image(result.restored, out_dir / f"{stem}_{cell.kind.value}{suffix}")
    if plan.difference_images:
        emit_difference_image(cell.clean, result.restored, out_dir / f"{stem}_{cell.kind.value}_diff{suffix}")


def bench_metadata(plan: ExperimentPlan) -> Dict:
    return {
        'master_seed': plan.master_seed,
        'rng': RNG_ALGORITHM,
        'psnr': PSNR_CONVENTION,
        'ssim': SSIM_CONVENTION,
        'tau_selection': 'argmax PSNR over the ascending grid, ties to the smaller tau',
        'noise_levels': list(plan.noise_levels),
        'models': [kind.value for kind in plan.models],
        'tau_grids': {kind.value: list(plan.grid_for(kind)) for kind in plan.models},
        'seeds': {
            source.image_id: {f"{sigma:g}": derive_seed(source.image_id, sigma, plan.master_seed)
                              for sigma in plan.noise_levels}
            for source in plan.sources
        },
        'settings': {
            'kappa': plan.smooth.kappa,
            'sigma_smooth': plan.smooth.sigma_hat,
            'smooth_radius': plan.smooth.effective_radius,
            'kernel_radius': plan.kernel_radius,
            'kernel_sigma': plan.kernel_sigma,
            'max_iter': plan.max_iter,
            'rel_tol': plan.rel_tol,
            'use_estimated_lipschitz': plan.use_estimated_lipschitz,
            'warm_start': plan.warm_start,
        },
    }


def run_bench(plan: ExperimentPlan) -> List[BenchRow]:
    """
    Run every (image, sigma, model) cell and return the rows in plan order.

    When ``plan.output_dir`` is set, also writes the CSV and Markdown tables,
    the run metadata, the noisy and restored images and, optionally, the
    difference images.
    """
    plan.validate()
    cells = build_cells(plan)
    logger.info("Bench: %d cell(s) on %d job(s)", len(cells), plan.jobs)

    if plan.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=plan.jobs) as executor:
            results = list(executor.map(_run_cell, cells))
    else:
        results = [_run_cell(cell) for cell in cells]

    rows = [result.row for result in results]
    if plan.output_dir is not None:
        out_dir = Path(plan.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = set()
        for cell, result in zip(cells, results):
            _write_cell_images(plan, cell, result, written)
        BenchExporter.to_csv(rows, out_dir / CSV_NAME)
        BenchExporter.to_markdown(rows, out_dir / MARKDOWN_NAME)
        (out_dir / META_NAME).write_text(json.dumps(bench_metadata(plan), indent=2, sort_keys=True),
                                         encoding='utf-8')
        logger.info("Bench results written to %s", out_dir)
    return rows
