"""
Run configuration: INI file, CLI overrides and the resolved copy written
next to the outputs.

Sections::

    [run]            experiment, seed, workers, output_dir, record_timing
    [synthetic]      sweep and generator settings
    [segmentation]   sweep, corpus and sampler settings
    [method.<NAME>]  TrainConfig fields of one method
"""
import configparser
import dataclasses
import io
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from ..core.constants import (
    FOREST_DEPTH,
    FOREST_TREES,
    METHOD_BAYES,
    METHOD_CL,
    METHOD_CL_CRF,
    METHOD_CL_STRONG,
    METHOD_CL_WEAK,
    METHOD_IM,
    METHOD_RF,
    RESOLVED_CONFIG_FILE,
    SEG_HELD_OUT,
    SEG_IMAGE_SIZE,
    SEG_NUM_LABELS,
    SEG_PALETTE_SIZE,
    SEG_REPETITIONS,
    SEG_SIZES,
    SYNTH_AVERAGE_TAIL,
    SYNTH_MEANS,
    SYNTH_MIN_UPDATES,
    SYNTH_MISSPECIFIED_SIGMAS,
    SYNTH_REPETITIONS,
    SYNTH_SIGMA,
    SYNTH_SIZES,
    SYNTH_STEP_SIZE,
    SYNTH_TEST_SIZE,
)
from ..core.exceptions import ConfigError, OutputError
from ..core.models import StepSchedule, TrainConfig
from ..models.synthetic import GeneratorConfig

logger = logging.getLogger(__name__)

EXPERIMENTS = ('synthetic', 'segmentation')

# Methods that need no TrainConfig
UNTRAINED_METHODS = (METHOD_RF, METHOD_BAYES)

SCAN_ORDERS = ('raster', 'blocked')


def _check_sweep(sizes: Tuple[int, ...], repetitions: int, section: str) -> None:
    if repetitions < 0:
        raise ConfigError(f"[{section}] repetitions must be >= 0")
    if any(size < 1 for size in sizes):
        raise ConfigError(f"[{section}] training sizes must be positive, got {sizes}")


@dataclass(frozen=True)
class SyntheticSettings:
    """Sweep and generator of the 1-D study."""
    sizes: Tuple[int, ...] = SYNTH_SIZES
    repetitions: int = SYNTH_REPETITIONS
    test_size: int = SYNTH_TEST_SIZE
    misspecified: bool = False
    means: Tuple[float, ...] = SYNTH_MEANS
    sigma: float = SYNTH_SIGMA
    sigmas: Tuple[float, ...] = SYNTH_MISSPECIFIED_SIGMAS
    methods: Tuple[str, ...] = (METHOD_CL, METHOD_CL_WEAK, METHOD_CL_STRONG, METHOD_IM)

    def __post_init__(self):
        _check_sweep(self.sizes, self.repetitions, 'synthetic')
        if self.test_size < 1:
            raise ConfigError("test_size must be >= 1")

    def generator(self) -> GeneratorConfig:
        """Shared-variance generator, or per-class variances when misspecified."""
        if self.misspecified:
            return GeneratorConfig(means=self.means, sigma=self.sigma, sigmas=self.sigmas)
        return GeneratorConfig(means=self.means, sigma=self.sigma)


@dataclass(frozen=True)
class SegmentationSettings:
    """Sweep, corpus, forest and sampler settings of the segmentation study."""
    sizes: Tuple[int, ...] = SEG_SIZES
    repetitions: int = SEG_REPETITIONS
    held_out: int = SEG_HELD_OUT
    pool_size: int = 80
    image_size: int = SEG_IMAGE_SIZE
    num_labels: int = SEG_NUM_LABELS
    palette_size: int = SEG_PALETTE_SIZE
    corpus_dir: str = ''               # empty: synthetic corpus
    scan: str = 'raster'
    decode_burn_in: int = 10
    decode_samples: int = 30
    forest_trees: int = FOREST_TREES
    forest_depth: int = FOREST_DEPTH
    crf_train_size: int = -1           # images used by CRF stages; -1 all, 0 none
    snapshots: int = 2
    methods: Tuple[str, ...] = (METHOD_RF, METHOD_CL_CRF, METHOD_IM)

    def __post_init__(self):
        _check_sweep(self.sizes, self.repetitions, 'segmentation')
        if self.scan not in SCAN_ORDERS:
            raise ConfigError(f"scan must be one of {SCAN_ORDERS}, got {self.scan!r}")
        if self.held_out < 1 or self.image_size < 2 or self.num_labels < 2 or self.palette_size < 1:
            raise ConfigError("held_out, image_size, num_labels and palette_size are too small")
        if self.decode_samples < 1 or self.decode_burn_in < 0:
            raise ConfigError("decode_samples must be >= 1 and decode_burn_in >= 0")
        if self.crf_train_size < -1:
            raise ConfigError("crf_train_size must be -1 (all), 0 (none) or positive")


def default_methods(experiment: str) -> Dict[str, TrainConfig]:
    """Frozen default TrainConfig per method."""
    if experiment == 'synthetic':
        budget = dict(
            step_size=SYNTH_STEP_SIZE,
            epochs=200,
            batch_size=10,
            min_updates=SYNTH_MIN_UPDATES,
            average_tail=SYNTH_AVERAGE_TAIL,
        )
        return {
            METHOD_CL: TrainConfig(**budget),
            METHOD_CL_WEAK: TrainConfig.weak_reg(**budget),
            METHOD_CL_STRONG: TrainConfig.strong_reg(**budget),
            METHOD_IM: TrainConfig(exact_expectations=True, **budget),
        }
    base = TrainConfig(
        step_size=0.02,
        schedule=StepSchedule.INVERSE_SQRT,
        step_floor=0.002,
        epochs=30,
        batch_size=5,
        gibbs_sweeps_per_update=1,
    )
    return {METHOD_CL_CRF: base, METHOD_IM: base}


@dataclass(frozen=True)
class RunConfig:
    """Everything one experiment run needs."""
    experiment: str = 'synthetic'
    seed: int = 0
    workers: int = 1
    output_dir: str = 'results'
    record_timing: bool = False
    synthetic: SyntheticSettings = field(default_factory=SyntheticSettings)
    segmentation: SegmentationSettings = field(default_factory=SegmentationSettings)
    methods: Dict[str, TrainConfig] = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.methods:
            object.__setattr__(self, 'methods', default_methods(self.experiment))
        missing = [m for m in self.method_names if m not in self.methods and m not in UNTRAINED_METHODS]
        if missing:
            raise ConfigError(f"methods without a training configuration: {', '.join(missing)}")

    @property
    def settings(self):
        return self.synthetic if self.experiment == 'synthetic' else self.segmentation

    @property
    def method_names(self) -> Tuple[str, ...]:
        return self.settings.methods

    @classmethod
    def defaults(cls, experiment: str = 'synthetic') -> 'RunConfig':
        return cls(experiment=experiment)

    def replace(self, **changes: Any) -> 'RunConfig':
        return dataclasses.replace(self, **changes)

    def to_ini(self) -> str:
        """Resolved configuration in INI form."""
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser['run'] = {
            'experiment': self.experiment,
            'seed': str(self.seed),
            'workers': str(self.workers),
            'output_dir': self.output_dir,
            'record_timing': str(self.record_timing).lower(),
        }
        parser[self.experiment] = _section_values(self.settings)
        for name in self.method_names:
            if name in self.methods:
                parser[f'method.{name}'] = _section_values(self.methods[name])
        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()

    def write_resolved(self, directory: Union[str, Path]) -> Path:
        """Write ``config.ini`` into the output directory."""
        path = Path(directory) / RESOLVED_CONFIG_FILE
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.to_ini(), encoding='utf-8')
        except OSError as e:
            raise OutputError(f"Failed to write {path}: {e}")
        return path


def _format(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, tuple):
        return ', '.join(str(v) for v in value)
    if value is None:
        return 'none'
    return str(value)


def _section_values(obj: Any) -> Dict[str, str]:
    return {f.name: _format(getattr(obj, f.name)) for f in dataclasses.fields(obj)}


_BOOLEANS = {'1': True, 'yes': True, 'true': True, 'on': True, '0': False, 'no': False, 'false': False, 'off': False}


def _parse(text: str, default: Any, name: str) -> Any:
    """Convert an INI string to the type of the field's default value."""
    text = text.strip()
    try:
        if isinstance(default, bool):
            if text.lower() not in _BOOLEANS:
                raise ValueError(f"not a boolean: {text!r}")
            return _BOOLEANS[text.lower()]
        if isinstance(default, Enum):
            return type(default)(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float) or default is None:
            return None if text.lower() == 'none' else float(text)
        if isinstance(default, tuple):
            items = [t.strip() for t in text.split(',') if t.strip()]
            kind = type(default[0]) if default else str
            return tuple(kind(t) for t in items)
        return text
    except ValueError as e:
        raise ConfigError(f"bad value for {name}: {e}")


def _apply(obj: Any, values: Mapping[str, str], section: str) -> Any:
    known = {
        f.name for f in dataclasses.fields(obj)
        if not isinstance(getattr(obj, f.name), dict) and not dataclasses.is_dataclass(getattr(obj, f.name))
    }
    changes = {}
    for key, text in values.items():
        if key not in known:
            raise ConfigError(f"unknown option {key!r} in [{section}]")
        changes[key] = _parse(text, getattr(obj, key), f'{section}.{key}')
    try:
        return dataclasses.replace(obj, **changes)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"invalid [{section}]: {e}")


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    experiment: Optional[str] = None,
    overrides: Optional[Mapping[str, Mapping[str, str]]] = None,
) -> RunConfig:
    """
    Build a RunConfig from defaults, an optional INI file and overrides.

    Args:
        path: INI file
        experiment: experiment to run; wins over the file's [run] value
        overrides: section -> option -> value, applied after the file

    Raises:
        ConfigError: unreadable file, unknown option or invalid value
    """
    sections: Dict[str, Dict[str, str]] = {}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path, encoding='utf-8') as f:
                parser.read_file(f)
        except (OSError, configparser.Error) as e:
            raise ConfigError(f"Failed to read config {path}: {e}")
        sections = {name: dict(parser[name]) for name in parser.sections()}
    for name, values in (overrides or {}).items():
        sections.setdefault(name, {}).update(values)

    run_values = dict(sections.get('run', {}))
    chosen = experiment or run_values.pop('experiment', 'synthetic')
    run_values.pop('experiment', None)
    if chosen not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {chosen!r}")

    methods = default_methods(chosen)
    for name, values in sections.items():
        if name.startswith('method.'):
            method = name[len('method.'):]
            methods[method] = _apply(methods.get(method, TrainConfig()), values, name)

    config = RunConfig(experiment=chosen, methods=methods)
    config = _apply(config, {k: v for k, v in run_values.items()}, 'run') if run_values else config
    if 'synthetic' in sections:
        config = config.replace(synthetic=_apply(config.synthetic, sections['synthetic'], 'synthetic'))
    if 'segmentation' in sections:
        config = config.replace(segmentation=_apply(config.segmentation, sections['segmentation'], 'segmentation'))
    unknown = set(sections) - {'run', 'synthetic', 'segmentation'} - {n for n in sections if n.startswith('method.')}
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")
    logger.debug("resolved configuration for %s", config.experiment)
    return config
