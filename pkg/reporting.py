"""
Console output, result tables, solver traces and difference images.
"""
import csv
import io
import math
import sys
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, List, Optional, Sequence, Union

import numpy as np

from image_io import save_image
from wstv_core import as_image, check_same_shape

if TYPE_CHECKING:
    from bench import BenchRow
    from solvers import SolverTrace

PathLike = Union[str, Path]

BENCH_COLUMNS = ('image', 'model', 'sigma', 'tau', 'psnr', 'ssim', 'iters', 'wall_ms')
TRACE_COLUMNS = ('iteration', 'primal', 'dual', 'gap', 'rel_change', 't')


class ColorScheme:
    """ANSI color codes for terminal output."""

    RESET = '\033[0m'

    YELLOW = '\033[33m'

    BRIGHT_RED = '\033[91m'
    BRIGHT_GREEN = '\033[92m'
    BRIGHT_CYAN = '\033[96m'


class ConsoleReporter:
    """User-facing status lines for the command-line front end."""

    def __init__(self, use_color: bool = True, quiet: bool = False, stream=None):
        self.stream = stream or sys.stdout
        self.use_color = use_color and getattr(self.stream, 'isatty', lambda: False)()
        self.quiet = quiet

    def _paint(self, color: str, text: str) -> str:
        if not self.use_color:
            return text
        return f"{color}{text}{ColorScheme.RESET}"

    def _emit(self, text: str, force: bool = False) -> None:
        if self.quiet and not force:
            return
        print(text, file=self.stream)

    def heading(self, title: str) -> None:
        self._emit(self._paint(ColorScheme.BRIGHT_CYAN, f"=== {title} ==="))

    def info(self, message: str) -> None:
        self._emit(message)

    def success(self, message: str) -> None:
        self._emit(self._paint(ColorScheme.BRIGHT_GREEN, f"✅ {message}"))

    def warning(self, message: str) -> None:
        self._emit(self._paint(ColorScheme.YELLOW, f"⚠️  {message}"), force=True)

    def error(self, message: str, hint: Optional[str] = None) -> None:
        self._emit(self._paint(ColorScheme.BRIGHT_RED, f"❌ {message}"), force=True)
        if hint:
            self._emit(self._paint(ColorScheme.YELLOW, f"💡 {hint}"), force=True)

    def metrics(self, psnr_db: float, ssim_value: float) -> None:
        self._emit(f"PSNR: {format_psnr(psnr_db)} dB", force=True)
        self._emit(f"SSIM: {ssim_value:.6f}", force=True)

    def table(self, text: str) -> None:
        self._emit(text.rstrip('\n'), force=True)


def format_psnr(value: float) -> str:
    return 'inf' if math.isinf(value) else f"{value:.4f}"


def _format_float(value: float, digits: int = 6) -> str:
    if math.isinf(value):
        return 'inf'
    return f"{value:.{digits}f}"


class BenchExporter:
    """Export bench rows to CSV and Markdown."""

    @staticmethod
    def csv_rows(rows: Iterable['BenchRow'], include_wall_time: bool = True) -> List[List[str]]:
        table = []
        for row in rows:
            record = [
                row.image,
                row.model,
                f"{row.sigma:g}",
                f"{row.tau:.6g}",
                _format_float(row.psnr),
                _format_float(row.ssim),
                str(row.iters),
            ]
            if include_wall_time:
                record.append(f"{row.wall_ms:.1f}")
            table.append(record)
        return table

    @staticmethod
    def to_csv_text(rows: Sequence['BenchRow'], include_wall_time: bool = True) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        columns = BENCH_COLUMNS if include_wall_time else BENCH_COLUMNS[:-1]
        writer.writerow(columns)
        writer.writerows(BenchExporter.csv_rows(rows, include_wall_time))
        return buffer.getvalue()

    @staticmethod
    def to_markdown_text(rows: Sequence['BenchRow']) -> str:
        """One (model x sigma) -> PSNR / SSIM table per image."""
        lines = []
        images = list(dict.fromkeys(row.image for row in rows))
        for image in images:
            image_rows = [row for row in rows if row.image == image]
            sigmas = list(dict.fromkeys(row.sigma for row in image_rows))
            models = list(dict.fromkeys(row.model for row in image_rows))
            lookup = {(row.model, row.sigma): row for row in image_rows}

            lines.append(f"### {image}")
            lines.append("")
            lines.append("| Model | " + " | ".join(f"σ={sigma:g} PSNR / SSIM" for sigma in sigmas) + " |")
            lines.append("|---" * (len(sigmas) + 1) + "|")
            for model in models:
                cells = []
                for sigma in sigmas:
                    row = lookup.get((model, sigma))
                    cells.append("—" if row is None else f"{format_psnr(row.psnr)} / {row.ssim:.4f}")
                lines.append(f"| {model.upper()} | " + " | ".join(cells) + " |")
            lines.append("")
        return "\n".join(lines)

    @staticmethod
    def to_csv(rows: Sequence['BenchRow'], path: PathLike) -> None:
        Path(path).write_text(BenchExporter.to_csv_text(rows), encoding='utf-8')

    @staticmethod
    def to_markdown(rows: Sequence['BenchRow'], path: PathLike) -> None:
        Path(path).write_text(BenchExporter.to_markdown_text(rows), encoding='utf-8')


def write_trace_csv(trace: 'SolverTrace', path: PathLike) -> None:
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(TRACE_COLUMNS)
        for record in trace.records:
            writer.writerow([record.iteration, repr(record.primal), repr(record.dual),
                             repr(record.gap), repr(record.rel_change), repr(record.t)])


def difference_image(original, restored):
    """Return (|restored - original| rescaled so its maximum is 1, scale factor)."""
    original, restored = as_image(original), as_image(restored)
    check_same_shape(original, restored)
    diff = np.abs(restored - original)
    peak = float(diff.max())
    scale = 1.0 / peak if peak > 0 else 0.0
    return diff * scale, scale


def emit_difference_image(original, restored, path: PathLike) -> float:
    """Write the rescaled difference image and a ``<path>.txt`` sidecar with the scale factor."""
    scaled, scale = difference_image(original, restored)
    path = Path(path)
    save_image(scaled, path)
    sidecar = path.with_name(path.name + '.txt')
    sidecar.write_text(f"scale={scale!r}\n", encoding='utf-8')
    return scale
