"""
Input validation and error reporting for the command-line tools.
"""
import argparse
import math
from pathlib import Path
from typing import Callable, List, Sequence

from reporting import ConsoleReporter
from wstv_core import DivergenceError, ImageFormatError, ShapeError, ValidationError


class InputValidator:
    """Parses and checks user-supplied values."""

    @classmethod
    def validate_tau(cls, value: str) -> float:
        """
        Parse a regularization weight.

        Raises:
            ValidationError: non-numeric, non-finite or not strictly positive
        """
        tau = cls._parse_float(value, "tau")
        if tau <= 0:
            raise ValidationError(f"tau must be > 0, got {tau:g}")
        return tau

    @classmethod
    def validate_nonnegative(cls, value: str, name: str = "value") -> float:
        number = cls._parse_float(value, name)
        if number < 0:
            raise ValidationError(f"{name} must be >= 0, got {number:g}")
        return number

    @classmethod
    def validate_positive(cls, value: str, name: str = "value") -> float:
        number = cls._parse_float(value, name)
        if number <= 0:
            raise ValidationError(f"{name} must be > 0, got {number:g}")
        return number

    @classmethod
    def validate_count(cls, value: str, name: str = "value", minimum: int = 1) -> int:
        try:
            number = int(value)
        except (TypeError, ValueError):
            raise ValidationError(f"{name} must be an integer, got '{value}'")
        if number < minimum:
            raise ValidationError(f"{name} must be >= {minimum}, got {number}")
        return number

    @classmethod
    def validate_seed(cls, value: str) -> int:
        seed = cls.validate_count(value, "seed", minimum=0)
        if seed >= 2 ** 64:
            raise ValidationError(f"seed must fit in 64 bits, got {seed}")
        return seed

    @classmethod
    def validate_float_list(cls, values: Sequence[str], name: str = "values") -> List[float]:
        """Parse floats from tokens that may themselves be comma separated."""
        numbers = []
        for token in values:
            for part in str(token).split(','):
                if part.strip():
                    numbers.append(cls._parse_float(part, name))
        if not numbers:
            raise ValidationError(f"{name} cannot be empty")
        return numbers

    @classmethod
    def validate_model_choice(cls, user_input: str, available_models: Sequence[str]) -> str:
        """
        Resolve a model name, accepting unambiguous prefixes.

        Raises:
            ValidationError: empty, unknown or ambiguous choice
        """
        if not user_input or not user_input.strip():
            raise ValidationError("Model choice cannot be empty")

        user_input = user_input.strip().lower()
        for model in available_models:
            if model.lower() == user_input:
                return model

        matches = [model for model in available_models if model.lower().startswith(user_input)]
        if len(matches) == 1:
            return matches[0]
        elif len(matches) > 1:
            raise ValidationError(f"Ambiguous model '{user_input}'. Could be: {', '.join(matches)}")
        raise ValidationError(f"Unknown model '{user_input}'. Available: {', '.join(available_models)}")

    @classmethod
    def validate_input_file(cls, file_path: str) -> Path:
        if not file_path or not file_path.strip():
            raise ValidationError("File path cannot be empty")
        path = Path(file_path.strip())
        if not path.is_file():
            raise ValidationError(f"Input file not found: {path}")
        return path

    @classmethod
    def validate_output_file(cls, file_path: str) -> Path:
        """Check an output path and create its parent directory if needed."""
        if not file_path or not file_path.strip():
            raise ValidationError("File path cannot be empty")
        path = Path(file_path.strip())
        if path.exists() and path.is_dir():
            raise ValidationError(f"Output path is a directory: {path}")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ValidationError(f"Cannot create directory: {e}")
        return path

    @staticmethod
    def _parse_float(value: str, name: str) -> float:
        try:
            number = float(value)
        except (TypeError, ValueError):
            raise ValidationError(f"{name} must be a number, got '{value}'")
        if not math.isfinite(number):
            raise ValidationError(f"{name} must be finite, got '{value}'")
        return number


def argparse_type(validator: Callable, *args) -> Callable[[str], object]:
    """Wrap a validator so argparse reports its ValidationError as a usage error."""
    def convert(value: str):
        try:
            return validator(value, *args)
        except ValidationError as e:
            raise argparse.ArgumentTypeError(str(e))
    convert.__name__ = getattr(validator, '__name__', 'value')
    return convert


class ErrorHandler:
    """Formats failures for the console and maps them to exit codes."""

    EXIT_OK = 0
    EXIT_FAILURE = 1
    EXIT_USAGE = 2

    def __init__(self, reporter: ConsoleReporter):
        self.reporter = reporter

    def handle_validation_error(self, error: ValidationError) -> int:
        self.reporter.error(f"Validation Error: {error}")
        return self.EXIT_USAGE

    def handle_format_error(self, error: ImageFormatError) -> int:
        self.reporter.error(f"Image Format Error: {error}",
                            hint="Only binary 8-bit PGM (P5) and PPM (P6) files are supported")
        return self.EXIT_FAILURE

    def handle_shape_error(self, error: ShapeError) -> int:
        self.reporter.error(f"Shape Error: {error}")
        return self.EXIT_FAILURE

    def handle_divergence_error(self, error: DivergenceError) -> int:
        self.reporter.error(f"Solver Error: {error}", hint="Try a smaller tau or fewer iterations")
        return self.EXIT_FAILURE

    def handle_file_error(self, error: OSError, operation: str) -> int:
        self.reporter.error(f"File {operation} Error: {error}",
                            hint="Check the path, file permissions and disk space")
        return self.EXIT_FAILURE

    def handle_general_error(self, error: Exception) -> int:
        self.reporter.error(f"Unexpected Error: {error}")
        return self.EXIT_FAILURE
