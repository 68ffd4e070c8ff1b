"""Grid CRF posterior, generative colour likelihood and their samplers."""

from weakimplicit.models.segmentation.grid import GridGraph, grid_for
from weakimplicit.models.segmentation.observation import SegObservation
from weakimplicit.models.segmentation.crf import (
    CrfPosterior,
    SegCrfParams,
    crf_features,
    crf_gibbs_sweep,
    marginal_frequencies,
    max_marginal_decode,
)
from weakimplicit.models.segmentation.color import (
    ColorLikelihood,
    GenColorParams,
    color_features,
    color_gibbs_sweep,
    expected_color_features,
)
from weakimplicit.models.segmentation.features import seg_features
from weakimplicit.models.segmentation.unary import UnaryPredictor, pixel_features, unary_predict, unary_train
from weakimplicit.models.segmentation.corpus import (
    CorpusConfig,
    SegDataset,
    SegExample,
    load_corpus,
    synthetic_corpus,
)
from weakimplicit.models.segmentation.warmstart import ChainState, WarmStartBuffer, WarmStartSampler

__all__ = [
    'GridGraph',
    'grid_for',
    'SegObservation',
    'CrfPosterior',
    'SegCrfParams',
    'crf_features',
    'crf_gibbs_sweep',
    'marginal_frequencies',
    'max_marginal_decode',
    'ColorLikelihood',
    'GenColorParams',
    'color_features',
    'color_gibbs_sweep',
    'expected_color_features',
    'seg_features',
    'UnaryPredictor',
    'pixel_features',
    'unary_predict',
    'unary_train',
    'CorpusConfig',
    'SegDataset',
    'SegExample',
    'load_corpus',
    'synthetic_corpus',
    'ChainState',
    'WarmStartBuffer',
    'WarmStartSampler',
]
