"""Tests for the command-line entry point."""
import pytest

from weakimplicit import __version__
from weakimplicit.cli import build_parser, main
from weakimplicit.core.constants import RESULTS_FILE
from weakimplicit.core.prob import RngStream
from weakimplicit.models.synthetic import GeneratorConfig, QuadLogRegParams
from weakimplicit.storage import save_params, write_image

SYNTHETIC_INI = """
[synthetic]
test_size = 500

[method.CL]
epochs = 5
min_updates = 0
"""

SEGMENTATION_INI = """
[segmentation]
sizes = 2
pool_size = 3
held_out = 1
image_size = 8
forest_trees = 2
forest_depth = 3
decode_burn_in = 1
decode_samples = 2
"""


def _ini(tmp_path, text):
    path = tmp_path / 'run.ini'
    path.write_text(text, encoding='utf-8')
    return str(path)


def test_version(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(['--version'])
    assert exit_info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_command_is_required():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_params_show(tmp_path, capsys):
    path = tmp_path / 'qlr.params'
    save_params(path, QuadLogRegParams.true_posterior(GeneratorConfig()))
    assert main(['params', 'show', str(path)]) == 0
    out = capsys.readouterr().out
    assert 'kind: qlr' in out
    assert '[a] 3 values' in out


def test_params_show_missing_file(tmp_path, capsys):
    assert main(['params', 'show', str(tmp_path / 'absent.params')]) == 1
    assert '✗' in capsys.readouterr().err


def test_params_show_malformed_file(tmp_path, capsys):
    path = tmp_path / 'bad.params'
    path.write_text('not an archive\n', encoding='utf-8')
    assert main(['params', 'show', str(path)]) == 1
    assert 'ArchiveFormatError' in capsys.readouterr().err


def test_synthetic_run_and_plot(tmp_path, capsys):
    out = tmp_path / 'results'
    argv = ['synthetic', '--config', _ini(tmp_path, SYNTHETIC_INI), '--sizes', '5', '--reps', '1',
            '--methods', 'CL,Bayes', '--seed', '3', '--out', str(out)]
    assert main(argv) == 0
    assert '✓ 2 records' in capsys.readouterr().out
    assert (out / RESULTS_FILE).exists()
    assert (out / 'config.ini').exists()
    assert (out / 'synthetic.svg').exists()

    (out / 'synthetic.svg').unlink()
    assert main(['plot', str(out / RESULTS_FILE)]) == 0
    assert (out / 'synthetic.svg').exists()


def test_empty_sweep_writes_nothing(tmp_path, capsys):
    out = tmp_path / 'results'
    assert main(['synthetic', '--reps', '0', '--out', str(out)]) == 0
    assert 'nothing written' in capsys.readouterr().out
    assert not out.exists()


def test_invalid_flag_values_fail(tmp_path, capsys):
    assert main(['synthetic', '--sizes', '0', '--out', str(tmp_path)]) == 1
    assert 'ConfigError' in capsys.readouterr().err
    assert main(['synthetic', '--methods', 'Nope', '--reps', '1', '--out', str(tmp_path)]) == 1


def test_plot_missing_results(tmp_path):
    assert main(['plot', str(tmp_path / RESULTS_FILE)]) == 1


def test_segment_train_and_infer(tmp_path, capsys):
    ini = _ini(tmp_path, SEGMENTATION_INI)
    model = tmp_path / 'model'
    assert main(['segment', 'train', '--config', ini, '--model', str(model), '--method', 'RF']) == 0
    assert (model / 'forest.joblib').exists()
    assert not (model / 'crf.params').exists()

    inputs = tmp_path / 'in'
    inputs.mkdir()
    write_image(inputs / 'scene.png', RngStream(4).uniform((8, 8, 3)))
    out = tmp_path / 'labels'
    assert main(['segment', 'infer', '--config', ini, '--model', str(model),
                 '--input', str(inputs), '--out', str(out)]) == 0
    assert (out / 'scene.png').exists()
    assert 'Wrote 1 label maps' in capsys.readouterr().out


def test_segment_infer_without_model(tmp_path, capsys):
    assert main(['segment', 'infer', '--model', str(tmp_path / 'none'),
                 '--input', str(tmp_path), '--out', str(tmp_path / 'out')]) == 1
    assert 'CorpusError' in capsys.readouterr().err


@pytest.mark.slow
def test_verify_command(capsys):
    assert main(['verify']) == 0
    assert '8/8 checks passed' in capsys.readouterr().out
