"""Core types, constants and probability primitives."""

from weakimplicit.core.prob import (
    ExpFamConditional,
    ProbVector,
    RngStream,
    TableConditional,
    exp_fam_log_prob,
    normalize,
    sample_discrete,
    sample_rows,
)

__all__ = [
    'ExpFamConditional',
    'ProbVector',
    'RngStream',
    'TableConditional',
    'exp_fam_log_prob',
    'normalize',
    'sample_discrete',
    'sample_rows',
]
