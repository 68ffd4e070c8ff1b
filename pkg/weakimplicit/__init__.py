"""weakimplicit: learning with weak implicit models."""

__version__ = "0.1.0"

from weakimplicit.core.models import ExperimentRecord, GradientPair, TrainConfig, TrainResult
from weakimplicit.core.prob import ExpFamConditional, ProbVector, RngStream, TableConditional
from weakimplicit.coupling import (
    DiscreteConditionalPair,
    check_strong_implicit,
    sample_reverse_chain,
    stationary_marginals,
)
from weakimplicit.learning import (
    cl_gradient,
    implicit_sgd_step,
    train_conditional_likelihood,
    train_implicit,
)
from weakimplicit.models.synthetic import ClassGaussian, GeneratorConfig, QuadLogReg
from weakimplicit.storage import load_params, read_records, save_params, write_records
from weakimplicit.experiments import RunConfig, emit_outputs, load_run_config, run_segmentation, run_synthetic

__all__ = [
    'ExperimentRecord',
    'GradientPair',
    'TrainConfig',
    'TrainResult',
    'ExpFamConditional',
    'ProbVector',
    'RngStream',
    'TableConditional',
    'DiscreteConditionalPair',
    'check_strong_implicit',
    'sample_reverse_chain',
    'stationary_marginals',
    'cl_gradient',
    'implicit_sgd_step',
    'train_conditional_likelihood',
    'train_implicit',
    'ClassGaussian',
    'GeneratorConfig',
    'QuadLogReg',
    'load_params',
    'read_records',
    'save_params',
    'write_records',
    'RunConfig',
    'emit_outputs',
    'load_run_config',
    'run_segmentation',
    'run_synthetic',
]
