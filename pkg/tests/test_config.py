"""Tests for the run configuration."""
import pytest

from weakimplicit.core.constants import METHOD_CL, METHOD_CL_WEAK, METHOD_IM
from weakimplicit.core.exceptions import ConfigError
from weakimplicit.core.models import StepSchedule, TrainConfig
from weakimplicit.experiments.config import (
    RunConfig,
    SegmentationSettings,
    SyntheticSettings,
    default_methods,
    load_run_config,
)


def _write(tmp_path, text, name='run.ini'):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    return path


def test_defaults():
    config = RunConfig()
    assert config.experiment == 'synthetic'
    assert set(config.methods) == set(config.method_names)
    assert config.methods[METHOD_CL_WEAK].l2_weight == 1e-3
    segmentation = RunConfig.defaults('segmentation')
    assert segmentation.settings is segmentation.segmentation
    assert segmentation.methods == default_methods('segmentation')
    assert segmentation.segmentation.scan == 'raster'


def test_ini_file_is_applied(tmp_path):
    path = _write(tmp_path, """
[run]
seed = 5
workers = 2

[synthetic]
sizes = 10, 20
repetitions = 3
misspecified = yes
methods = CL, IM

[method.IM]
step_size = 0.1
schedule = inverse_sqrt
clip_norm = none
""")
    config = load_run_config(path)
    assert config.seed == 5 and config.workers == 2
    assert config.synthetic.sizes == (10, 20)
    assert config.synthetic.repetitions == 3
    assert config.synthetic.misspecified
    assert config.synthetic.generator().sigmas is not None
    assert config.method_names == (METHOD_CL, METHOD_IM)
    im = config.methods[METHOD_IM]
    assert im.step_size == 0.1
    assert im.schedule is StepSchedule.INVERSE_SQRT
    assert im.clip_norm is None
    assert config.methods[METHOD_CL] == default_methods('synthetic')[METHOD_CL]


def test_overrides_win_over_file(tmp_path):
    path = _write(tmp_path, "[run]\nseed = 5\n[synthetic]\nrepetitions = 3\n")
    config = load_run_config(path, overrides={'run': {'seed': '9'}, 'synthetic': {'repetitions': '1'}})
    assert config.seed == 9
    assert config.synthetic.repetitions == 1


def test_experiment_argument_wins(tmp_path):
    path = _write(tmp_path, "[run]\nexperiment = synthetic\n")
    assert load_run_config(path, 'segmentation').experiment == 'segmentation'
    assert load_run_config(path).experiment == 'synthetic'


@pytest.mark.parametrize('text', [
    "[nonsense]\nx = 1\n",
    "[synthetic]\ncolour = red\n",
    "[synthetic]\nrepetitions = many\n",
    "[synthetic]\nrepetitions = -1\n",
    "[synthetic]\nsizes = 10, 0\n",
    "[synthetic]\nmisspecified = perhaps\n",
    "[segmentation]\nscan = spiral\n",
    "[segmentation]\ndecode_samples = 0\n",
    "[run]\nworkers = 0\n",
    "[run]\nexperiment = weather\n",
    "[method.IM]\nepochs = 0\n",
    "[method.IM]\nschedule = cubic\n",
    "[method.IM]\naverage_tail = 1.5\n",
    "[method.CL]\nmin_updates = -1\n",
    "not an ini file",
])
def test_invalid_configurations(tmp_path, text):
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, text))


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / 'absent.ini')


def test_settings_validation():
    with pytest.raises(ConfigError):
        SyntheticSettings(test_size=0)
    with pytest.raises(ConfigError):
        SegmentationSettings(crf_train_size=-2)
    with pytest.raises(ConfigError):
        SegmentationSettings(held_out=0)
    assert SegmentationSettings(repetitions=0).repetitions == 0


def test_methods_need_training_configuration():
    with pytest.raises(ConfigError):
        RunConfig(synthetic=SyntheticSettings(methods=(METHOD_CL, 'Mine')), methods={METHOD_CL: TrainConfig()})
    config = RunConfig(synthetic=SyntheticSettings(methods=(METHOD_CL, 'Bayes')), methods={METHOD_CL: TrainConfig()})
    assert config.method_names == (METHOD_CL, 'Bayes')


@pytest.mark.parametrize('experiment', ['synthetic', 'segmentation'])
def test_resolved_configuration_round_trips(tmp_path, experiment):
    config = load_run_config(
        experiment=experiment,
        overrides={'run': {'seed': '11', 'record_timing': 'true'}, experiment: {'repetitions': '2'}},
    )
    path = config.write_resolved(tmp_path)
    assert path.name == 'config.ini'
    assert load_run_config(path) == config


def test_train_config_helpers():
    config = TrainConfig(step_size=1.0, schedule=StepSchedule.INVERSE, step_floor=0.1)
    assert config.step_at(0) == 1.0
    assert config.step_at(3) == 0.25
    assert config.step_at(100) == 0.1
    assert config.replace(epochs=3).epochs == 3
    assert config.to_dict()['schedule'] == 'inverse'
    with pytest.raises(ConfigError):
        TrainConfig(step_size=-1.0)
    with pytest.raises(ConfigError):
        TrainConfig(chain_length=0)


def test_train_config_update_budget():
    config = TrainConfig(epochs=10, batch_size=10, min_updates=200, average_tail=0.5)
    assert config.epochs_for(10) == 200
    assert config.epochs_for(25) == 67
    assert config.epochs_for(5000) == 10
    assert config.averaging_start(200) == 100
    assert config.averaging_start(67) == 33
    assert TrainConfig().averaging_start(40) == 40


def test_synthetic_methods_share_one_budget():
    methods = default_methods('synthetic')
    budgets = {(c.step_size, c.batch_size, c.min_updates, c.average_tail) for c in methods.values()}
    assert len(budgets) == 1
    assert methods[METHOD_IM].exact_expectations
    assert not methods[METHOD_CL].exact_expectations
    assert methods[METHOD_CL].epochs_for(10) >= 1000
