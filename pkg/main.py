#!/usr/bin/env python3
"""
Command-line front end: denoise, add-noise, metrics, diff-image and bench.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from bench import ExperimentPlan, ImageSource, default_tau_grid, load_sources, run_bench
from config import DenoiseConfig
from image_io import load_image, save_image
from image_synth import TEST_IMAGES, NoiseSpec, add_gaussian_noise
from input_validation import ErrorHandler, InputValidator, argparse_type
from metrics import compare
from reporting import BenchExporter, ConsoleReporter, emit_difference_image, write_trace_csv
from solvers import SolverConfig, fgp_denoise, model_setup
from weights import SmoothSpec
from wstv_core import (DivergenceError, ImageFormatError, ModelKind, ShapeError,
                       ValidationError, WSTVError)

logger = logging.getLogger(__name__)

MODEL_NAMES = [kind.value for kind in ModelKind]


class DenoiseApplication:
    """Runs one parsed command against a configuration and a console reporter."""

    def __init__(self, config: DenoiseConfig, reporter: ConsoleReporter):
        self.config = config
        self.reporter = reporter
        self.errors = ErrorHandler(reporter)
        self.commands = {
            "denoise": self.run_denoise,
            "add-noise": self.run_add_noise,
            "metrics": self.run_metrics,
            "diff-image": self.run_diff_image,
            "bench": self.run_bench,
        }

    def dispatch(self, args: argparse.Namespace) -> int:
        """Run the selected command and map failures to exit codes."""
        try:
            self.commands[args.command](args)
            return ErrorHandler.EXIT_OK
        except ValidationError as e:
            return self.errors.handle_validation_error(e)
        except ImageFormatError as e:
            return self.errors.handle_format_error(e)
        except ShapeError as e:
            return self.errors.handle_shape_error(e)
        except DivergenceError as e:
            return self.errors.handle_divergence_error(e)
        except OSError as e:
            return self.errors.handle_file_error(e, "I/O")
        except WSTVError as e:
            return self.errors.handle_general_error(e)

    # Settings shared by denoise and bench: flag > config file > defaults

    def smooth_spec(self, args: argparse.Namespace) -> SmoothSpec:
        return SmoothSpec(
            kappa=_pick(args.kappa, self.config.get("weights", "kappa")),
            sigma_hat=_pick(args.sigma_smooth, self.config.get("weights", "sigma_smooth")),
            radius=_pick(args.smooth_radius, self.config.get("weights", "smooth_radius")),
        )

    def kernel_settings(self, args: argparse.Namespace) -> Tuple[int, float]:
        return (_pick(args.kernel_radius, self.config.get("kernel", "radius")),
                _pick(args.kernel_sigma, self.config.get("kernel", "sigma")))

    def max_iter_for(self, kind: ModelKind, args: argparse.Namespace) -> int:
        if args.max_iter is not None:
            return args.max_iter
        key = "max_iter_single_scale" if kind.is_single_scale else "max_iter"
        return self.config.get("solver", key)

    def solver_config(self, kind: ModelKind, tau: float, args: argparse.Namespace,
                      record_trace: bool) -> SolverConfig:
        box_low, box_high = self.config.get("solver", "box")
        return SolverConfig.for_model(
            kind, tau,
            max_iter=self.max_iter_for(kind, args),
            rel_tol=_pick(args.tol, self.config.get("solver", "rel_tol")),
            box_low=box_low,
            box_high=box_high,
            record_trace=record_trace,
            use_estimated_lipschitz=(args.tight_lipschitz
                                     or self.config.get("solver", "use_estimated_lipschitz")),
            check_every=self.config.get("solver", "check_every"),
        )

    def run_denoise(self, args: argparse.Namespace) -> None:
        kind = ModelKind.from_name(args.model)
        f = load_image(args.input)
        kernel_radius, kernel_sigma = self.kernel_settings(args)
        kernel, weights = model_setup(kind, f, self.smooth_spec(args), kernel_radius, kernel_sigma)
        cfg = self.solver_config(kind, args.tau, args, record_trace=args.trace is not None)

        self.reporter.info(f"Denoising {args.input} with {kind.value.upper()} (tau={args.tau:g})")
        restored, trace = fgp_denoise(f, cfg, kernel, weights)
        save_image(restored, args.out)
        self.reporter.success(f"Wrote {args.out} ({trace.iterations} iterations)")
        if not trace.converged:
            self.reporter.warning(
                f"Stopped at max_iter={cfg.max_iter} before the relative change fell below {cfg.rel_tol:g}")

        if args.trace:
            write_trace_csv(trace, args.trace)
            self.reporter.info(f"Trace written to {args.trace}")
        if args.ref:
            report = compare(load_image(args.ref), restored)
            self.reporter.metrics(report.psnr, report.ssim)

    def run_add_noise(self, args: argparse.Namespace) -> None:
        image = load_image(args.input)
        noisy = add_gaussian_noise(image, NoiseSpec(args.sigma, args.seed))
        save_image(noisy, args.out)
        self.reporter.success(f"Wrote {args.out} (sigma={args.sigma:g}, seed={args.seed})")

    def run_metrics(self, args: argparse.Namespace) -> None:
        report = compare(load_image(args.ref), load_image(args.input))
        self.reporter.metrics(report.psnr, report.ssim)

    def run_diff_image(self, args: argparse.Namespace) -> None:
        scale = emit_difference_image(load_image(args.ref), load_image(args.input), args.out)
        self.reporter.success(f"Wrote {args.out} (scale={scale:g})")

    def run_bench(self, args: argparse.Namespace) -> None:
        bench_cfg = self.config.get_section("bench")
        if args.images:
            sources: List[ImageSource] = load_sources(args.images)
        else:
            sources = [ImageSource.synthetic(args.synthetic, args.size)]

        if args.taus:
            tau_grid = tuple(sorted(args.taus))
        else:
            tau_grid = default_tau_grid(bench_cfg["tau_min"], bench_cfg["tau_max"], bench_cfg["tau_count"])
        models = args.models or bench_cfg["models"]
        kernel_radius, kernel_sigma = self.kernel_settings(args)
        out_dir = Path(args.out_dir or self.config.get("output", "default_directory"))

        plan = ExperimentPlan(
            sources=sources,
            noise_levels=tuple(args.sigmas or bench_cfg["noise_levels"]),
            models=tuple(ModelKind.from_name(name) for name in models),
            tau_grid=tau_grid,
            master_seed=_pick(args.seed, bench_cfg["master_seed"]),
            output_dir=out_dir,
            smooth=self.smooth_spec(args),
            kernel_radius=kernel_radius,
            kernel_sigma=kernel_sigma,
            max_iter=args.max_iter,
            rel_tol=_pick(args.tol, self.config.get("solver", "rel_tol")),
            use_estimated_lipschitz=(args.tight_lipschitz
                                     or self.config.get("solver", "use_estimated_lipschitz")),
            warm_start=args.warm_start,
            difference_images=bench_cfg["difference_images"] and not args.no_diff,
            jobs=_pick(args.jobs, bench_cfg["jobs"]),
        )

        self.reporter.heading("WSTV bench")
        rows = run_bench(plan)
        if args.table == "md":
            self.reporter.table(BenchExporter.to_markdown_text(rows))
        else:
            self.reporter.table(BenchExporter.to_csv_text(rows))
        self.reporter.success(f"Results written to {out_dir}")


def _pick(flag_value, config_value):
    return config_value if flag_value is None else flag_value


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    nonneg = argparse_type(InputValidator.validate_nonnegative)
    positive = argparse_type(InputValidator.validate_positive)
    count = argparse_type(InputValidator.validate_count)
    radius = argparse_type(InputValidator.validate_count, "radius", 0)

    group = parser.add_argument_group("model settings")
    group.add_argument("--kappa", type=nonneg, help="Edge sensitivity of the weights (0 disables them)")
    group.add_argument("--sigma-smooth", type=nonneg, help="Presmoothing scale of the weight gradients")
    group.add_argument("--smooth-radius", type=radius, help="Presmoothing radius (default ceil(3*sigma))")
    group.add_argument("--kernel-radius", type=radius, help="Radius of the structure-tensor kernel")
    group.add_argument("--kernel-sigma", type=positive, help="Scale of the structure-tensor kernel")
    group.add_argument("--max-iter", type=count, help="Iteration cap (default depends on the model)")
    group.add_argument("--tol", type=nonneg, help="Relative-change stopping tolerance")
    group.add_argument("--tight-lipschitz", action="store_true",
                       help="Use a power-iteration estimate of the operator norm for the step size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wstv",
        description="Weighted structure tensor total variation denoising",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  wstv add-noise --in clean.pgm --out noisy.pgm --sigma 0.1 --seed 7
  wstv denoise --model wstv --tau 0.05 --in noisy.pgm --out out.pgm --ref clean.pgm
  wstv bench --synthetic cameraman --out-dir results --models stv,wstv --table md
        """
    )
    parser.add_argument("--config", metavar="PATH", help="JSON configuration file")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="More log output (-v info, -vv debug)")
    parser.add_argument("--quiet", action="store_true", help="Only print results and errors")
    parser.add_argument("--no-color", action="store_true", help="Disable coloured output")

    subparsers = parser.add_subparsers(dest="command", metavar="<command>")
    subparsers.required = True

    model_type = argparse_type(InputValidator.validate_model_choice, MODEL_NAMES)
    tau_type = argparse_type(InputValidator.validate_tau)

    denoise = subparsers.add_parser("denoise", help="Denoise one image")
    denoise.add_argument("--in", dest="input", required=True, metavar="PATH", help="Noisy input image")
    denoise.add_argument("--out", required=True, metavar="PATH", help="Restored output image")
    denoise.add_argument("--tau", type=tau_type, required=True, help="Regularization weight (> 0)")
    denoise.add_argument("--model", type=model_type, default="wstv", help=f"One of {', '.join(MODEL_NAMES)}")
    denoise.add_argument("--ref", metavar="PATH", help="Clean reference for PSNR/SSIM")
    denoise.add_argument("--trace", metavar="PATH", help="Write per-iteration objectives as CSV")
    _add_model_flags(denoise)

    add_noise = subparsers.add_parser("add-noise", help="Add seeded Gaussian noise")
    add_noise.add_argument("--in", dest="input", required=True, metavar="PATH")
    add_noise.add_argument("--out", required=True, metavar="PATH")
    add_noise.add_argument("--sigma", type=argparse_type(InputValidator.validate_nonnegative, "sigma"),
                           required=True, help="Noise standard deviation in [0, 1] intensity units")
    add_noise.add_argument("--seed", type=argparse_type(InputValidator.validate_seed), default=0)

    metrics = subparsers.add_parser("metrics", help="PSNR and SSIM of an image against a reference")
    metrics.add_argument("--ref", required=True, metavar="PATH")
    metrics.add_argument("--in", dest="input", required=True, metavar="PATH")

    diff = subparsers.add_parser("diff-image", help="Write the rescaled |in - ref| image")
    diff.add_argument("--ref", required=True, metavar="PATH")
    diff.add_argument("--in", dest="input", required=True, metavar="PATH")
    diff.add_argument("--out", required=True, metavar="PATH")

    bench = subparsers.add_parser("bench", help="Tau-tuned model comparison over noise levels")
    sources = bench.add_mutually_exclusive_group(required=True)
    sources.add_argument("--images", nargs="+", metavar="PATH", help="PGM/PPM test images")
    sources.add_argument("--synthetic", choices=sorted(TEST_IMAGES), help="Procedural test image")
    bench.add_argument("--size", type=argparse_type(InputValidator.validate_count, "size", 16), default=256,
                       help="Side length of the synthetic image")
    bench.add_argument("--out-dir", metavar="DIR", help="Output directory for tables and images")
    bench.add_argument("--sigmas", nargs="+", help="Noise levels (space or comma separated)")
    bench.add_argument("--models", nargs="+", help="Models to compare (space or comma separated)")
    bench.add_argument("--taus", nargs="+", help="Tau grid (default: 15 log-spaced values in [0.005, 0.5])")
    bench.add_argument("--seed", type=argparse_type(InputValidator.validate_seed), help="Master noise seed")
    bench.add_argument("--table", choices=["csv", "md"], default="csv", help="Console table format")
    bench.add_argument("--jobs", type=argparse_type(InputValidator.validate_count, "jobs"),
                       help="Worker processes")
    bench.add_argument("--no-diff", action="store_true", help="Skip difference images")
    bench.add_argument("--warm-start", action="store_true",
                       help="Start each tau from the previous dual solution")
    _add_model_flags(bench)
    return parser


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse and normalise command line arguments."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "bench":
        try:
            if args.sigmas:
                args.sigmas = InputValidator.validate_float_list(args.sigmas, "sigmas")
                if min(args.sigmas) < 0:
                    raise ValidationError("sigmas must be >= 0")
            if args.taus:
                args.taus = InputValidator.validate_float_list(args.taus, "taus")
                if min(args.taus) <= 0:
                    raise ValidationError("taus must be > 0")
            if args.models:
                names = [part for token in args.models for part in token.split(",") if part.strip()]
                args.models = [InputValidator.validate_model_choice(name, MODEL_NAMES) for name in names]
        except ValidationError as e:
            parser.error(str(e))
    return args


def configure_logging(verbosity: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    else:
        level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def run_denoise_command(args: argparse.Namespace) -> int:
    """Execute a parsed command and return its exit status."""
    use_color = not getattr(args, "no_color", False)
    reporter = ConsoleReporter(use_color=use_color, quiet=getattr(args, "quiet", False))
    try:
        if args.config:
            InputValidator.validate_input_file(args.config)
            config = DenoiseConfig(args.config)
        else:
            config = DenoiseConfig()
        config.validate_config()
    except ValidationError as e:
        return ErrorHandler(reporter).handle_validation_error(e)

    reporter.use_color = reporter.use_color and config.get("output", "color")
    return DenoiseApplication(config, reporter).dispatch(args)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    try:
        args = parse_arguments(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else ErrorHandler.EXIT_OK

    configure_logging(args.verbose, args.quiet)
    try:
        return run_denoise_command(args)
    except KeyboardInterrupt:
        print("\n👋 Interrupted by user")
        return ErrorHandler.EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
