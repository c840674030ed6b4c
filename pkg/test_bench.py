import json
import math
import os

import numpy as np
import pytest
from numpy.testing import assert_array_equal

import bench
from bench import (ExperimentPlan, ImageSource, build_cells, default_tau_grid, derive_seed,
                   load_sources, run_bench)
from image_io import load_image
from image_synth import make_test_image
from reporting import BenchExporter
from wstv_core import ModelKind, ValidationError

SMALL_GRID = (0.02, 0.08)


def small_plan(**overrides):
    settings = dict(
        sources=[ImageSource.synthetic('shapes', 24)],
        noise_levels=(0.05,),
        models=(ModelKind.TV, ModelKind.WSTV),
        tau_grid=SMALL_GRID,
        max_iter=15,
    )
    settings.update(overrides)
    return ExperimentPlan(**settings)


def test_default_tau_grid():
    grid = default_tau_grid()
    assert len(grid) == 15
    assert grid[0] == pytest.approx(0.005, rel=1e-12)
    assert grid[-1] == pytest.approx(0.5, rel=1e-12)
    ratios = np.array(grid[1:]) / np.array(grid[:-1])
    assert np.allclose(ratios, ratios[0])


@pytest.mark.parametrize("args", [(0.0, 0.5, 15), (0.5, 0.1, 15), (0.01, 0.5, 0)])
def test_invalid_tau_grid(args):
    with pytest.raises(ValidationError):
        default_tau_grid(*args)


def test_seed_derivation():
    seed = derive_seed('cameraman', 0.1, 0)
    assert seed == derive_seed('cameraman', 0.1, 0)
    assert 0 <= seed < 2 ** 64
    assert seed != derive_seed('cameraman', 0.05, 0)
    assert seed != derive_seed('cameraman', 0.1, 1)
    assert seed != derive_seed('house', 0.1, 0)


def test_models_share_the_noisy_realization():
    plan = small_plan(models=(ModelKind.TV, ModelKind.STV, ModelKind.WSTV))
    cells = build_cells(plan)
    assert len({cell.seed for cell in cells}) == 1
    results = [bench._run_cell(cell) for cell in cells]
    assert_array_equal(results[0].noisy, results[1].noisy)
    assert_array_equal(results[0].noisy, results[2].noisy)


def test_rows_follow_plan_order_and_contract():
    plan = small_plan(noise_levels=(0.05, 0.1))
    rows = run_bench(plan)
    assert [(row.sigma, row.model) for row in rows] == [
        (0.05, 'tv'), (0.05, 'wstv'), (0.1, 'tv'), (0.1, 'wstv')]
    for row in rows:
        assert row.tau in SMALL_GRID
        assert 1 <= row.iters <= 15
        assert math.isfinite(row.psnr) and 0.0 < row.ssim <= 1.0


def test_zero_noise_rows():
    rows = run_bench(small_plan(noise_levels=(0.0,), tau_grid=(0.3, 0.01, 0.1)))
    for row in rows:
        assert math.isinf(row.psnr)
        assert row.tau == 0.01
        assert row.iters == 0
        assert row.ssim == pytest.approx(1.0)


def test_ties_go_to_the_smaller_tau(monkeypatch):
    monkeypatch.setattr(bench, 'psnr', lambda ref, test: 30.0)
    rows = run_bench(small_plan(tau_grid=(0.2, 0.01, 0.05)))
    assert all(row.tau == 0.01 for row in rows)


def test_tau_overrides_per_model():
    plan = small_plan(tau_overrides={ModelKind.WSTV: (0.03,)})
    rows = run_bench(plan)
    assert rows[1].tau == 0.03
    assert rows[0].tau in SMALL_GRID


def test_outputs_and_determinism(tmp_path):
    first = run_bench(small_plan(output_dir=tmp_path / 'a'))
    second = run_bench(small_plan(output_dir=tmp_path / 'b'))
    assert (BenchExporter.to_csv_text(first, include_wall_time=False)
            == BenchExporter.to_csv_text(second, include_wall_time=False))

    names = sorted(path.name for path in (tmp_path / 'a').iterdir())
    assert names == sorted(path.name for path in (tmp_path / 'b').iterdir())
    assert 'shapes_s0.05_noisy.pgm' in names
    assert 'shapes_s0.05_wstv.pgm' in names
    assert 'shapes_s0.05_wstv_diff.pgm' in names
    assert 'shapes_s0.05_wstv_diff.pgm.txt' in names
    for name in names:
        if name != 'results.csv':
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()

    header = (tmp_path / 'a' / 'results.csv').read_text().splitlines()[0]
    assert header == 'image,model,sigma,tau,psnr,ssim,iters,wall_ms'
    meta = json.loads((tmp_path / 'a' / 'bench_meta.json').read_text())
    assert 'PCG64' in meta['rng']
    assert meta['seeds']['shapes']['0.05'] == derive_seed('shapes', 0.05, 0)


def test_restored_image_matches_row(tmp_path):
    clean = make_test_image('shapes', 24)
    rows = run_bench(small_plan(output_dir=tmp_path, models=(ModelKind.TV,), difference_images=False))
    restored = load_image(tmp_path / 'shapes_s0.05_tv.pgm')
    assert restored.shape == clean.shape
    assert not (tmp_path / 'shapes_s0.05_tv_diff.pgm').exists()
    assert rows[0].psnr > 0


def test_parallel_jobs_match_serial():
    serial = run_bench(small_plan())
    parallel = run_bench(small_plan(jobs=2))
    assert (BenchExporter.to_csv_text(serial, include_wall_time=False)
            == BenchExporter.to_csv_text(parallel, include_wall_time=False))


def test_warm_start_sweep_runs():
    rows = run_bench(small_plan(warm_start=True))
    assert all(row.tau in SMALL_GRID for row in rows)


def test_load_sources_names_unreadable_path(tmp_path, write_image):
    good = write_image(np.zeros((12, 12)), 'good.pgm')
    sources = load_sources([good])
    assert sources[0].image_id == 'good'
    missing = tmp_path / 'missing.pgm'
    with pytest.raises(OSError, match='missing.pgm'):
        load_sources([good, missing])


@pytest.mark.parametrize("overrides", [
    dict(sources=[]),
    dict(noise_levels=()),
    dict(noise_levels=(-0.1,)),
    dict(models=()),
    dict(tau_grid=()),
    dict(tau_grid=(0.0, 0.1)),
    dict(jobs=0),
    dict(max_iter=0),
    dict(sources=[ImageSource.synthetic('shapes', 24), ImageSource.synthetic('shapes', 24)]),
])
def test_plan_validation(overrides):
    with pytest.raises(ValidationError):
        run_bench(small_plan(**overrides))


# Required PSNR margin of WSTV over STV, in dB, per noise level
WSTV_MARGIN = {0.05: -0.05, 0.1: 0.05, 0.15: 0.05}


def assert_wstv_margins(rows):
    by_cell = {(row.sigma, row.model): row for row in rows}
    for sigma, margin in WSTV_MARGIN.items():
        assert by_cell[(sigma, 'wstv')].psnr >= by_cell[(sigma, 'stv')].psnr + margin, sigma
    return by_cell


@pytest.mark.slow
def test_wstv_beats_stv_on_cameraman_class_image():
    plan = ExperimentPlan(
        sources=[ImageSource.synthetic('cameraman', 256)],
        noise_levels=tuple(WSTV_MARGIN),
        models=(ModelKind.STV, ModelKind.WSTV),
    )
    assert_wstv_margins(run_bench(plan))


@pytest.mark.slow
@pytest.mark.skipif(not os.environ.get('WSTV_CAMERAMAN'), reason="set WSTV_CAMERAMAN to a 256x256 cameraman PGM")
def test_cameraman_reproduction():
    plan = ExperimentPlan(
        sources=load_sources([os.environ['WSTV_CAMERAMAN']]),
        noise_levels=tuple(WSTV_MARGIN),
        models=(ModelKind.STV, ModelKind.WSTV),
    )
    by_cell = assert_wstv_margins(run_bench(plan))
    assert 27.0 <= by_cell[(0.1, 'wstv')].psnr <= 29.5
