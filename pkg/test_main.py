import numpy as np
import pytest

from image_io import load_image
from image_synth import NoiseSpec, add_gaussian_noise, make_test_image
from main import main, parse_arguments, run_denoise_command


@pytest.fixture
def workspace(tmp_path, monkeypatch, write_image):
    """A clean image and its noisy version in an isolated working directory."""
    monkeypatch.chdir(tmp_path)
    clean = make_test_image('shapes', 24)
    noisy = add_gaussian_noise(clean, NoiseSpec(0.1, seed=3))
    return write_image(clean, 'clean.pgm'), write_image(noisy, 'noisy.pgm')


def test_denoise_happy_path(workspace, tmp_path, capsys):
    clean, noisy = workspace
    out = tmp_path / 'out.pgm'
    status = main(['denoise', '--model', 'wstv', '--tau', '0.05', '--in', str(noisy), '--out', str(out),
                   '--ref', str(clean), '--max-iter', '20'])
    assert status == 0
    assert load_image(out).shape == (24, 24, 1)
    assert 'PSNR:' in capsys.readouterr().out


def test_missing_tau_is_a_usage_error(workspace, tmp_path, capsys):
    _, noisy = workspace
    status = main(['denoise', '--in', str(noisy), '--out', str(tmp_path / 'out.pgm')])
    assert status == 2
    assert '--tau' in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ['denoise', '--tau', '-1', '--in', 'noisy.pgm', '--out', 'o.pgm'],
    ['denoise', '--tau', '0.1', '--model', 'bm3d', '--in', 'noisy.pgm', '--out', 'o.pgm'],
    ['add-noise', '--in', 'clean.pgm', '--out', 'o.pgm', '--sigma', '-0.1'],
    ['bench', '--synthetic', 'shapes', '--taus', '0.1,-0.2'],
    ['bench', '--images', 'clean.pgm', '--synthetic', 'shapes'],
])
def test_bad_flags_exit_with_usage_error(workspace, argv):
    assert main(argv) == 2


def test_stv_and_wstv_without_weights_match_bytewise(workspace, tmp_path):
    _, noisy = workspace
    common = ['--tau', '0.05', '--in', str(noisy), '--max-iter', '25']
    assert main(['denoise', '--model', 'stv', '--out', str(tmp_path / 'stv.pgm')] + common) == 0
    assert main(['denoise', '--model', 'wstv', '--kappa', '0', '--out', str(tmp_path / 'wstv.pgm')] + common) == 0
    assert (tmp_path / 'stv.pgm').read_bytes() == (tmp_path / 'wstv.pgm').read_bytes()


def test_trace_output(workspace, tmp_path, capsys):
    _, noisy = workspace
    trace = tmp_path / 'trace.csv'
    status = main(['denoise', '--model', 'tv', '--tau', '0.05', '--in', str(noisy),
                   '--out', str(tmp_path / 'o.pgm'), '--trace', str(trace), '--max-iter', '5', '--tol', '0'])
    assert status == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == 'iteration,primal,dual,gap,rel_change,t'
    assert len(lines) == 6
    assert "Stopped at max_iter=5" in capsys.readouterr().out


def test_add_noise_is_seeded(workspace, tmp_path):
    clean, _ = workspace
    for name in ('a.pgm', 'b.pgm'):
        assert main(['add-noise', '--in', str(clean), '--out', str(tmp_path / name),
                     '--sigma', '0.1', '--seed', '42']) == 0
    assert (tmp_path / 'a.pgm').read_bytes() == (tmp_path / 'b.pgm').read_bytes()
    assert (tmp_path / 'a.pgm').read_bytes() != clean.read_bytes()


def test_metrics_command(workspace, capsys):
    clean, noisy = workspace
    assert main(['metrics', '--ref', str(clean), '--in', str(clean)]) == 0
    assert 'PSNR: inf dB' in capsys.readouterr().out
    assert main(['metrics', '--ref', str(clean), '--in', str(noisy)]) == 0
    assert 'SSIM:' in capsys.readouterr().out


def test_diff_image_command(workspace, tmp_path):
    clean, noisy = workspace
    out = tmp_path / 'diff.pgm'
    assert main(['diff-image', '--ref', str(clean), '--in', str(noisy), '--out', str(out)]) == 0
    assert load_image(out).max() == 1.0
    assert (tmp_path / 'diff.pgm.txt').read_text().startswith('scale=')


def test_bench_command(workspace, tmp_path, capsys):
    out_dir = tmp_path / 'results'
    status = main(['--quiet', 'bench', '--synthetic', 'shapes', '--size', '24', '--out-dir', str(out_dir),
                   '--sigmas', '0.05', '--models', 'tv,wstv', '--taus', '0.02', '0.05',
                   '--max-iter', '10', '--no-diff', '--table', 'md'])
    assert status == 0
    assert (out_dir / 'results.csv').exists()
    assert (out_dir / 'bench_meta.json').exists()
    assert not list(out_dir.glob('*_diff.pgm'))
    assert '| WSTV |' in capsys.readouterr().out


def test_bench_with_unreadable_image(workspace, tmp_path, capsys):
    status = main(['bench', '--images', str(tmp_path / 'missing.pgm'), '--out-dir', str(tmp_path / 'r')])
    assert status == 1
    assert 'missing.pgm' in capsys.readouterr().out


def test_corrupt_image_exits_with_failure(workspace, tmp_path, capsys):
    bad = tmp_path / 'bad.pgm'
    bad.write_bytes(b'P5\n4 4\n65535\n' + bytes(32))
    status = main(['denoise', '--tau', '0.1', '--in', str(bad), '--out', str(tmp_path / 'o.pgm')])
    assert status == 1
    assert 'maxval' in capsys.readouterr().out


def test_config_file_supplies_defaults(workspace, tmp_path):
    _, noisy = workspace
    config = tmp_path / 'cfg.json'
    config.write_text('{"weights": {"kappa": 0.0}}')
    common = ['--tau', '0.05', '--in', str(noisy), '--max-iter', '15']
    assert main(['--config', str(config), 'denoise', '--model', 'wstv',
                 '--out', str(tmp_path / 'cfg.pgm')] + common) == 0
    assert main(['denoise', '--model', 'stv', '--out', str(tmp_path / 'stv.pgm')] + common) == 0
    assert (tmp_path / 'cfg.pgm').read_bytes() == (tmp_path / 'stv.pgm').read_bytes()


def test_invalid_config_file_is_a_usage_error(workspace, tmp_path):
    config = tmp_path / 'cfg.json'
    config.write_text('{"bench": {"jobs": 0}}')
    assert main(['--config', str(config), 'metrics', '--ref', 'clean.pgm', '--in', 'clean.pgm']) == 2


def test_run_denoise_command_with_parsed_arguments(workspace, tmp_path):
    _, noisy = workspace
    args = parse_arguments(['denoise', '--model', 'ws', '--tau', '0.1', '--in', str(noisy),
                            '--out', str(tmp_path / 'x.pgm'), '--max-iter', '3'])
    assert args.model == 'wstv'
    assert run_denoise_command(args) == 0
    assert np.isfinite(load_image(tmp_path / 'x.pgm')).all()


def test_unencodable_output_exits_with_failure(workspace, tmp_path, monkeypatch, capsys):
    clean, _ = workspace
    monkeypatch.setattr('main.add_gaussian_noise', lambda image, spec: np.full(image.shape, np.nan))
    status = main(['add-noise', '--in', str(clean), '--out', str(tmp_path / 'nan.pgm'), '--sigma', '0.1'])
    assert status == 1
    assert 'non-finite' in capsys.readouterr().out
