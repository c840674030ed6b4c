"""
Configuration management for the denoising tools.
"""
import copy
import json
import logging
from pathlib import Path
from typing import Any, Dict, List

from wstv_core import ModelKind, ValidationError

logger = logging.getLogger(__name__)


class DenoiseConfig:
    """Sectioned JSON configuration merged over built-in defaults."""

    DEFAULT_CONFIG = {
        "weights": {
            "kappa": 10.0,
            "sigma_smooth": 1.0,
            "smooth_radius": None
        },
        "kernel": {
            "radius": 1,
            "sigma": 0.5
        },
        "solver": {
            "max_iter": 100,
            "max_iter_single_scale": 500,
            "rel_tol": 1e-5,
            "box": [0.0, 1.0],
            "use_estimated_lipschitz": False,
            "check_every": 10
        },
        "bench": {
            "noise_levels": [0.01, 0.05, 0.1, 0.15],
            "models": ["tv", "stv", "wstv"],
            "tau_min": 0.005,
            "tau_max": 0.5,
            "tau_count": 15,
            "master_seed": 0,
            "jobs": 1,
            "difference_images": True
        },
        "output": {
            "color": True,
            "default_directory": "results"
        }
    }

    def __init__(self, config_file: str = "wstv_config.json"):
        self.config_file = Path(config_file)
        self.config = copy.deepcopy(self.DEFAULT_CONFIG)
        self.load_config()

    def load_config(self) -> None:
        """Load configuration from file if it exists."""
        if not self.config_file.exists():
            return
        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                file_config = json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f"Could not parse config file {self.config_file}: {e}")
        if not isinstance(file_config, dict):
            raise ValidationError(f"Config file {self.config_file} must contain a JSON object")
        self._merge_config(file_config)
        logger.info("Configuration loaded from %s", self.config_file)

    def _merge_config(self, file_config: Dict[str, Any]) -> None:
        """Merge file configuration with defaults."""
        for section, values in file_config.items():
            if section in self.config and isinstance(values, dict):
                self.config[section].update(values)
            else:
                self.config[section] = values

    def get(self, section: str, key: str, default: Any = None) -> Any:
        return self.config.get(section, {}).get(key, default)

    def get_section(self, section: str) -> Dict[str, Any]:
        return self.config.get(section, {})

    def validate_config(self) -> None:
        """
        Validate configuration values.

        Raises:
            ValidationError: listing every invalid entry
        """
        errors: List[str] = []

        kappa = self.get("weights", "kappa")
        if not _is_number(kappa) or kappa < 0:
            errors.append(f"weights.kappa must be >= 0: {kappa}")
        sigma_smooth = self.get("weights", "sigma_smooth")
        if not _is_number(sigma_smooth) or sigma_smooth < 0:
            errors.append(f"weights.sigma_smooth must be >= 0: {sigma_smooth}")
        smooth_radius = self.get("weights", "smooth_radius")
        if smooth_radius is not None and (not isinstance(smooth_radius, int) or smooth_radius < 0):
            errors.append(f"weights.smooth_radius must be null or an integer >= 0: {smooth_radius}")

        radius = self.get("kernel", "radius")
        if not isinstance(radius, int) or radius < 0:
            errors.append(f"kernel.radius must be an integer >= 0: {radius}")
        kernel_sigma = self.get("kernel", "sigma")
        if not _is_number(kernel_sigma) or kernel_sigma <= 0:
            errors.append(f"kernel.sigma must be > 0: {kernel_sigma}")

        for key in ("max_iter", "max_iter_single_scale", "check_every"):
            value = self.get("solver", key)
            if not isinstance(value, int) or value < 1:
                errors.append(f"solver.{key} must be an integer >= 1: {value}")
        rel_tol = self.get("solver", "rel_tol")
        if not _is_number(rel_tol) or rel_tol < 0:
            errors.append(f"solver.rel_tol must be >= 0: {rel_tol}")
        box = self.get("solver", "box")
        if (not isinstance(box, list) or len(box) != 2 or not all(_is_number(v) for v in box)
                or box[0] >= box[1]):
            errors.append(f"solver.box must be [low, high] with low < high: {box}")

        noise_levels = self.get("bench", "noise_levels")
        if not isinstance(noise_levels, list) or not noise_levels:
            errors.append(f"bench.noise_levels must be a nonempty list: {noise_levels}")
        elif not all(_is_number(s) and s >= 0 for s in noise_levels):
            errors.append(f"bench.noise_levels must all be >= 0: {noise_levels}")
        models = self.get("bench", "models")
        known = {kind.value for kind in ModelKind}
        if not isinstance(models, list) or not models or not set(models) <= known:
            errors.append(f"bench.models must be a nonempty subset of {sorted(known)}: {models}")
        tau_min, tau_max = self.get("bench", "tau_min"), self.get("bench", "tau_max")
        if not (_is_number(tau_min) and _is_number(tau_max) and 0 < tau_min <= tau_max):
            errors.append(f"bench tau range must satisfy 0 < tau_min <= tau_max: [{tau_min}, {tau_max}]")
        for key in ("tau_count", "jobs"):
            value = self.get("bench", key)
            if not isinstance(value, int) or value < 1:
                errors.append(f"bench.{key} must be an integer >= 1: {value}")
        seed = self.get("bench", "master_seed")
        if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            errors.append(f"bench.master_seed must be an unsigned 64-bit integer: {seed}")

        if errors:
            raise ValidationError("Configuration validation errors: " + "; ".join(errors))


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)
