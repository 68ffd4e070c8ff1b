"""
The segmentation study and the train/infer helpers behind ``segment``.

Per (training size, repetition) cell: pick T training images from the
pool, fit the pixel forest, fit the CRF by conditional likelihood
(CL-CRF) and as an implicit model with the colour likelihood (IM), and
score every method by Hamming error against held-out label maps.
"""
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.constants import METHOD_CL_CRF, METHOD_IM, METHOD_RF
from ..core.exceptions import (
    ConfigError,
    CorpusError,
    FeasibilityError,
    ImproperDistributionError,
    OutputError,
    TrainingDivergenceError,
)
from ..core.models import ExperimentRecord, TrainConfig, TrainResult
from ..core.prob import RngStream
from ..learning.trainers import train_conditional_likelihood, train_implicit
from ..models.segmentation import (
    ColorLikelihood,
    CorpusConfig,
    CrfPosterior,
    GenColorParams,
    SegCrfParams,
    SegDataset,
    SegExample,
    SegObservation,
    UnaryPredictor,
    WarmStartBuffer,
    WarmStartSampler,
    load_corpus,
    max_marginal_decode,
    synthetic_corpus,
    unary_train,
)
from ..storage.images import label_map_to_rgb, read_image, write_label_map
from ..storage.params import load_params, save_params
from .cells import cell_seed, map_cells
from .config import RunConfig, SegmentationSettings

logger = logging.getLogger(__name__)

EXPERIMENT = 'segmentation'

SEGMENTATION_METHODS = (METHOD_RF, METHOD_CL_CRF, METHOD_IM)
CRF_METHODS = (METHOD_CL_CRF, METHOD_IM)

DIVERGENCE_ERRORS = (TrainingDivergenceError, FeasibilityError, ImproperDistributionError)


@dataclass(frozen=True, eq=False)
class ChainSnapshot:
    """Final chain state of one IM training example, with its decoding."""
    train_size: int
    repetition: int
    example: str
    y_hat: np.ndarray
    x_tilde: np.ndarray
    y_tilde: np.ndarray
    x_star: np.ndarray
    y_star: np.ndarray
    decoded: np.ndarray

    @property
    def name(self) -> str:
        return f'T{self.train_size:03d}-r{self.repetition:02d}-{self.example}'

    def panels(self) -> List[np.ndarray]:
        """RGB panels left to right: y^, x~, y~, x*, y*, decoded."""
        return [
            label_map_to_rgb(self.y_hat),
            self.x_tilde,
            label_map_to_rgb(self.y_tilde),
            self.x_star,
            label_map_to_rgb(self.y_star),
            label_map_to_rgb(self.decoded),
        ]


SnapshotSink = Callable[[ChainSnapshot], None]


def hamming_error(predicted: Sequence[np.ndarray], truth: Sequence[np.ndarray]) -> float:
    """Fraction of mislabeled pixels over a set of label maps."""
    wrong = sum(int(np.sum(np.asarray(p) != np.asarray(t))) for p, t in zip(predicted, truth))
    total = sum(int(np.size(t)) for t in truth)
    if total == 0:
        raise ValueError("no pixels to score")
    return wrong / total


@dataclass
class Segmenter:
    """A trained pipeline: pixel forest plus, optionally, CRF and colour parameters."""
    forest: UnaryPredictor
    crf: Optional[SegCrfParams] = None
    color: Optional[GenColorParams] = None
    scan: str = 'raster'

    FOREST_FILE = 'forest.joblib'
    CRF_FILE = 'crf.params'
    COLOR_FILE = 'color.params'

    def observe(self, image: np.ndarray, unary: Optional[np.ndarray] = None) -> SegObservation:
        return SegObservation(image, unary if unary is not None else self.forest(image))

    def decode(
        self,
        observation: SegObservation,
        rng: RngStream,
        burn_in: int = 20,
        samples: int = 50,
    ) -> np.ndarray:
        """Max-marginal labeling under the CRF, or the forest's map without one."""
        if self.crf is None:
            return self.forest(observation.image)
        return max_marginal_decode(self.crf, observation.image, observation.unary, rng, burn_in, samples, self.scan)

    def save(self, directory: Union[str, Path]) -> None:
        directory = Path(directory)
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OutputError(f"Failed to create {directory}: {e}")
        self.forest.save(directory / self.FOREST_FILE)
        if self.crf is not None:
            save_params(directory / self.CRF_FILE, self.crf)
        if self.color is not None:
            save_params(directory / self.COLOR_FILE, self.color)
        logger.info("saved segmenter to %s", directory)

    @classmethod
    def load(cls, directory: Union[str, Path], scan: str = 'raster') -> 'Segmenter':
        directory = Path(directory)
        forest_path = directory / cls.FOREST_FILE
        if not forest_path.exists():
            raise CorpusError(f"no trained forest in {directory}")
        crf_path = directory / cls.CRF_FILE
        color_path = directory / cls.COLOR_FILE
        return cls(
            forest=UnaryPredictor.load(forest_path),
            crf=load_params(crf_path) if crf_path.exists() else None,
            color=load_params(color_path) if color_path.exists() else None,
            scan=scan,
        )


@dataclass
class CrfFit:
    """A fitted CRF method together with its training set and chain buffer."""
    segmenter: Segmenter
    result: TrainResult
    dataset: SegDataset
    buffer: WarmStartBuffer


def build_corpus(config: RunConfig) -> Tuple[List[SegExample], List[SegExample]]:
    """
    (training pool, held-out set) of a run.

    An external corpus is split by name order, the last ``held_out``
    examples being held out; otherwise a synthetic corpus of
    ``pool_size + held_out`` images is drawn from the run seed.

    Raises:
        CorpusError: corpus unreadable or too small for the sweep
    """
    settings = config.segmentation
    if settings.corpus_dir:
        examples = load_corpus(settings.corpus_dir)
    else:
        corpus_config = CorpusConfig(image_size=settings.image_size, num_labels=settings.num_labels)
        examples = synthetic_corpus(settings.pool_size + settings.held_out, corpus_config, RngStream(config.seed).child(0))
    needed = settings.held_out + max(settings.sizes, default=0)
    if len(examples) < needed:
        raise CorpusError(f"corpus holds {len(examples)} examples, the sweep needs {needed}")
    split = len(examples) - settings.held_out
    return examples[:split], examples[split:]


def train_forest(examples: Sequence[SegExample], settings: SegmentationSettings, seed: int) -> UnaryPredictor:
    return unary_train(
        [ex.image for ex in examples],
        [ex.labels for ex in examples],
        num_labels=settings.num_labels,
        n_trees=settings.forest_trees,
        max_depth=settings.forest_depth,
        seed=seed,
    )


def fit_crf(
    method: str,
    forest: UnaryPredictor,
    examples: Sequence[SegExample],
    settings: SegmentationSettings,
    config: TrainConfig,
    rng: RngStream,
) -> CrfFit:
    """
    Train the CRF of ``method`` on top of a fitted forest.

    Both methods start from the confusion-count unary table. CL-CRF
    follows persistent label chains; IM also learns the colour model and
    observes generated images through the forest.

    Args:
        method: CL-CRF or IM
        forest: unary predictor of the training images
        examples: CRF training examples
        settings: labels, palette and scan order
        config: trainer settings, seed included
        rng: stream for chain initialization and colour means

    Raises:
        TrainingDivergenceError, FeasibilityError: training failed
    """
    L, G = settings.num_labels, settings.palette_size
    dataset = SegDataset.from_examples(examples, forest)
    initial = SegCrfParams.from_confusion([x.unary for x in dataset.xs], dataset.ys, L)
    posterior = CrfPosterior(initial.to_vector(), L, settings.scan)

    if method == METHOD_CL_CRF:
        buffer = WarmStartBuffer(dataset.xs, rng.child(0), L, G, chain_length=1)
        sampler = WarmStartSampler(buffer, config.gibbs_sweeps_per_update, config.warm_start)
        result = train_conditional_likelihood(dataset, posterior, config, sampler)
        color = None
    elif method == METHOD_IM:
        likelihood = ColorLikelihood(
            GenColorParams.initial(rng.child(1), L, G).to_vector(), L, G, unary_fn=forest, scan=settings.scan,
        )
        buffer = WarmStartBuffer(dataset.xs, rng.child(0), L, G, chain_length=config.chain_length)
        sampler = WarmStartSampler(buffer, config.gibbs_sweeps_per_update, config.warm_start)
        result = train_implicit(dataset, posterior, likelihood, config, sampler)
        color = GenColorParams.from_vector(result.likelihood_params, L, G)
    else:
        raise ConfigError(f"{method!r} is not a CRF method")

    crf = SegCrfParams.from_vector(result.posterior_params, L)
    logger.debug("%s: %d likelihood projections", method, result.projections)
    return CrfFit(Segmenter(forest, crf, color, settings.scan), result, dataset, buffer)


def _decode_all(
    segmenter: Segmenter,
    observations: Sequence[SegObservation],
    settings: SegmentationSettings,
    rng: RngStream,
) -> List[np.ndarray]:
    return [
        segmenter.decode(x, rng.child(k), settings.decode_burn_in, settings.decode_samples)
        for k, x in enumerate(observations)
    ]


def _snapshots(fit: CrfFit, decoded: Sequence[np.ndarray], T: int, rep: int, names: Sequence[str], count: int):
    snapshots = []
    for t in range(min(count, len(fit.buffer))):
        state = fit.buffer[t]
        snapshots.append(ChainSnapshot(
            train_size=T,
            repetition=rep,
            example=names[t],
            y_hat=state.y_hat[0],
            x_tilde=state.x_tilde[0],
            y_tilde=state.y_tilde,
            x_star=fit.dataset.xs[t].image,
            y_star=fit.dataset.ys[t],
            decoded=decoded[t],
        ))
    return snapshots


def _run_cell(task) -> Tuple[List[ExperimentRecord], List[ChainSnapshot]]:
    config, pool, held_out, T, rep = task
    settings = config.segmentation
    stream = RngStream(config.seed).child(T, rep)
    seed = cell_seed(config.seed, T, rep, 2)
    chosen = stream.child(0).permutation(len(pool))[:T]
    train = [pool[i] for i in chosen]
    forest = train_forest(train, settings, seed)

    test_obs = [Segmenter(forest).observe(ex.image, ex.unary) for ex in held_out]
    test_truth = [ex.labels for ex in held_out]
    crf_size = T if settings.crf_train_size < 0 else min(settings.crf_train_size, T)

    records, snapshots = [], []

    def record(method: str, train_error: float, test_error: float, elapsed: float) -> None:
        records.append(ExperimentRecord.create(
            experiment=EXPERIMENT,
            method=method,
            train_size=T,
            repetition=rep,
            train_error=train_error,
            test_error=test_error,
            seed=seed,
            wall_time=elapsed if config.record_timing else 0.0,
        ))

    for k, method in enumerate(settings.methods):
        started = time.perf_counter()
        if method == METHOD_RF:
            train_error = hamming_error([forest(ex.image) for ex in train], [ex.labels for ex in train])
            test_error = hamming_error([forest(x.image) for x in test_obs], test_truth)
            record(method, train_error, test_error, time.perf_counter() - started)
            continue
        if crf_size == 0:
            continue
        crf_train = train[:crf_size]
        try:
            fit = fit_crf(method, forest, crf_train, settings, config.methods[method].replace(seed=seed),
                          stream.child(3, k))
        except DIVERGENCE_ERRORS as e:
            logger.warning("%s T=%d rep=%d diverged: %s", method, T, rep, e)
            record(method, math.nan, math.nan, time.perf_counter() - started)
            continue
        decoded_train = _decode_all(fit.segmenter, fit.dataset.xs, settings, stream.child(4, k))
        decoded_test = _decode_all(fit.segmenter, test_obs, settings, stream.child(5, k))
        record(
            method,
            hamming_error(decoded_train, fit.dataset.ys),
            hamming_error(decoded_test, test_truth),
            time.perf_counter() - started,
        )
        if method == METHOD_IM and settings.snapshots > 0:
            snapshots += _snapshots(fit, decoded_train, T, rep, [ex.name for ex in crf_train], settings.snapshots)

    logger.info("segmentation cell T=%d rep=%d done", T, rep)
    return records, snapshots


def run_segmentation(
    config: RunConfig,
    sink: Optional[SnapshotSink] = None,
    corpus: Optional[Tuple[List[SegExample], List[SegExample]]] = None,
) -> List[ExperimentRecord]:
    """
    Run the segmentation sweep.

    Args:
        config: run configuration; ``config.segmentation`` selects sizes,
            repetitions, methods, corpus and sampler settings
        sink: receives the IM chain snapshots of every cell, in cell order
        corpus: (pool, held-out) to use instead of ``build_corpus``

    Returns:
        Records ordered by training size, repetition, then method in
        configuration order. With ``crf_train_size = 0`` only RF rows
        are produced.

    Raises:
        ConfigError: unknown method
        CorpusError: corpus unavailable or too small
    """
    settings = config.segmentation
    unknown = [m for m in settings.methods if m not in SEGMENTATION_METHODS]
    if unknown:
        raise ConfigError(f"unknown segmentation methods: {', '.join(unknown)}")
    pool, held_out = corpus if corpus is not None else build_corpus(config)
    if len(pool) < max(settings.sizes, default=0):
        raise CorpusError(f"training pool holds {len(pool)} examples, the sweep needs {max(settings.sizes)}")

    tasks = [(config, pool, held_out, T, rep) for T in settings.sizes for rep in range(settings.repetitions)]
    logger.info(
        "segmentation sweep: sizes=%s repetitions=%d methods=%s pool=%d held_out=%d",
        settings.sizes, settings.repetitions, ','.join(settings.methods), len(pool), len(held_out),
    )
    records: List[ExperimentRecord] = []
    for cell_records, cell_snapshots in map_cells(_run_cell, tasks, config.workers):
        records.extend(cell_records)
        if sink is not None:
            for snapshot in cell_snapshots:
                sink(snapshot)
    return records


def train_segmenter(config: RunConfig, method: str = METHOD_IM, train_size: Optional[int] = None) -> Segmenter:
    """
    Fit one pipeline on the first ``train_size`` pool images.

    Defaults to the largest size of the sweep.
    """
    if method not in SEGMENTATION_METHODS:
        raise ConfigError(f"unknown segmentation method {method!r}")
    settings = config.segmentation
    pool, _ = build_corpus(config)
    T = train_size if train_size is not None else max(settings.sizes)
    if not 1 <= T <= len(pool):
        raise ConfigError(f"train size {T} outside 1..{len(pool)}")
    train = pool[:T]
    seed = cell_seed(config.seed, T, 0, 2)
    forest = train_forest(train, settings, seed)
    if method == METHOD_RF:
        return Segmenter(forest, scan=settings.scan)
    train_config = config.methods[method].replace(seed=seed)
    fit = fit_crf(method, forest, train, settings, train_config, RngStream(config.seed).child(T, 0, 3))
    logger.info("trained %s on %d images, final objective %s", method, T, fit.result.final_objective)
    return fit.segmenter


def infer_directory(
    segmenter: Segmenter,
    input_dir: Union[str, Path],
    output_dir: Union[str, Path],
    settings: SegmentationSettings,
    seed: int = 0,
) -> List[Path]:
    """
    Decode every PNG of a directory into a label-map PNG of the same name.

    Raises:
        CorpusError: no images, or an unreadable image
        OutputError: output directory not writable
    """
    images = sorted(Path(input_dir).glob('*.png'))
    if not images:
        raise CorpusError(f"no PNG images in {input_dir}")
    output_dir = Path(output_dir)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"Failed to create {output_dir}: {e}")
    rng = RngStream(seed)
    written = []
    for k, path in enumerate(images):
        observation = segmenter.observe(read_image(path))
        labels = segmenter.decode(observation, rng.child(k), settings.decode_burn_in, settings.decode_samples)
        target = output_dir / path.name
        write_label_map(target, labels)
        written.append(target)
    return written
