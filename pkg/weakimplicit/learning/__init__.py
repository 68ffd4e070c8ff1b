"""Training engines."""

from weakimplicit.learning.gradients import (
    chain_gradient,
    cl_gradient,
    clip_gradient,
    expected_chain_gradient,
    implicit_sgd_step,
)
from weakimplicit.learning.samplers import ChainDraw, ChainSampler
from weakimplicit.learning.trainers import train_conditional_likelihood, train_implicit

__all__ = [
    'ChainDraw',
    'ChainSampler',
    'chain_gradient',
    'cl_gradient',
    'clip_gradient',
    'expected_chain_gradient',
    'implicit_sgd_step',
    'train_conditional_likelihood',
    'train_implicit',
]
