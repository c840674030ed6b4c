import argparse
import io

import pytest

from input_validation import ErrorHandler, InputValidator, argparse_type
from reporting import ConsoleReporter
from wstv_core import DivergenceError, ImageFormatError, ValidationError

MODELS = ['tv', 'atv', 'vtv', 'stv', 'wstv']


def test_tau_parsing():
    assert InputValidator.validate_tau("0.05") == 0.05
    for bad in ("0", "-1", "abc", "inf", "nan"):
        with pytest.raises(ValidationError):
            InputValidator.validate_tau(bad)


def test_counts_and_seeds():
    assert InputValidator.validate_count("3") == 3
    assert InputValidator.validate_count("0", "radius", 0) == 0
    with pytest.raises(ValidationError):
        InputValidator.validate_count("0")
    with pytest.raises(ValidationError):
        InputValidator.validate_count("1.5")
    assert InputValidator.validate_seed(str(2 ** 64 - 1)) == 2 ** 64 - 1
    with pytest.raises(ValidationError):
        InputValidator.validate_seed(str(2 ** 64))


def test_float_lists_accept_commas_and_spaces():
    assert InputValidator.validate_float_list(["0.01,0.05", "0.1"]) == [0.01, 0.05, 0.1]
    with pytest.raises(ValidationError):
        InputValidator.validate_float_list([","])


@pytest.mark.parametrize("choice, expected", [("WSTV", "wstv"), ("ws", "wstv"), ("v", "vtv"), ("tv", "tv")])
def test_model_choice(choice, expected):
    assert InputValidator.validate_model_choice(choice, MODELS) == expected


@pytest.mark.parametrize("choice, message", [("", "empty"), ("bm3d", "Unknown"), ("xyz", "Unknown")])
def test_bad_model_choice(choice, message):
    with pytest.raises(ValidationError, match=message):
        InputValidator.validate_model_choice(choice, MODELS)


def test_ambiguous_model_choice():
    with pytest.raises(ValidationError, match="Ambiguous"):
        InputValidator.validate_model_choice("a", ['atv', 'aniso'])


def test_file_paths(tmp_path):
    existing = tmp_path / "in.pgm"
    existing.write_bytes(b"")
    assert InputValidator.validate_input_file(str(existing)) == existing
    with pytest.raises(ValidationError):
        InputValidator.validate_input_file(str(tmp_path / "missing.pgm"))

    output = InputValidator.validate_output_file(str(tmp_path / "new" / "out.pgm"))
    assert output.parent.is_dir()
    with pytest.raises(ValidationError):
        InputValidator.validate_output_file(str(tmp_path))


def test_argparse_type_reports_usage_errors():
    convert = argparse_type(InputValidator.validate_tau)
    assert convert("0.5") == 0.5
    with pytest.raises(argparse.ArgumentTypeError, match="tau must be > 0"):
        convert("-2")


def test_error_handler_exit_codes():
    stream = io.StringIO()
    handler = ErrorHandler(ConsoleReporter(use_color=False, stream=stream))
    assert handler.handle_validation_error(ValidationError("bad tau")) == ErrorHandler.EXIT_USAGE
    assert handler.handle_format_error(ImageFormatError('maxval', 'unsupported')) == ErrorHandler.EXIT_FAILURE
    assert handler.handle_divergence_error(DivergenceError(10)) == ErrorHandler.EXIT_FAILURE
    assert handler.handle_file_error(OSError("disk full"), "write") == ErrorHandler.EXIT_FAILURE
    output = stream.getvalue()
    assert "Validation Error: bad tau" in output
    assert "maxval: unsupported" in output
    assert "iteration 10" in output
