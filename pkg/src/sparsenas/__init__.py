"""Differentiable architecture search that rediscovers sparse-recovery iterations.

An unrolled network repeats ``z <- mix(z - eta W^T (W z - x))``, where ``mix``
is a softmax-weighted blend of candidate proximal operators. Training the blend
weights with Adam on sparse-coding data shows which operator the data favours.
"""
from .activations import Activation, act, act_deriv
from .datagen import (
    Dictionary,
    SignMode,
    SparseDataset,
    load_dataset,
    make_dictionary,
    make_planted_dataset,
    make_sparse_dataset,
    plant_targets,
    sample_codes,
    save_dataset,
    split,
    synthesize,
)
from .errors import ConfigError, ContractError, DivergenceError, NumericError, SparseNasError
from .nas import TraceRecord, TrainConfig, summarize_weights, train
from .solvers import fista, ista, lasso_cd, lasso_objective
from .unrolled import ArchParams, UnrolledModel, backward, binarize, build_model, forward, mse_loss

__version__ = "0.1.0"
