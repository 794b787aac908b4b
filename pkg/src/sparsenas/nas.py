"""Differentiable search over the unrolled network: Adam on alpha, weight traces.

The trace stores, for every epoch, the operator weight summary (row softmax of
alpha, averaged over rows) together with the training and validation loss.
Record 0 is the state before the first update, so an all-ones initialisation
shows up as an exactly uniform first row.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .datagen import SparseDataset
from .errors import ContractError, DivergenceError
from .numeric import AdamState, adam_update, numpy_generator, softmax
from .unrolled import ArchParams, UnrolledModel, forward, backward, mse_loss, predict

log = logging.getLogger(__name__)

FOUR_OPS = ("shrink", "relu", "gelu", "identity")
EIGHT_OPS = FOUR_OPS + ("tanh", "sigmoid", "logsigmoid", "tanhshrink")
RELU_VARIANT = ("relu", "gelu", "identity", "tanh")
ELU_VARIANT = ("elu", "gelu", "identity", "tanh")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.05
    epochs: int = 2000
    batch_size: int = 128
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if not self.lr >= 0:
            raise ContractError(f"lr must be >= 0, got {self.lr}")
        if self.epochs < 0:
            raise ContractError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ContractError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class TraceRecord:
    epoch: int
    summary: dict[str, float] = field(default_factory=dict)
    train_loss: float = 0.0
    val_loss: float = 0.0


def summarize_weights(arch: ArchParams) -> dict[str, float]:
    """Per-operator softmax weight summed over alpha rows and divided by the row count."""
    P = softmax(arch.alpha)
    totals = P.sum(axis=0) / P.shape[0]
    return {name: float(w) for name, w in zip(arch.op_names, totals)}


def _summary_key_order(arch: ArchParams) -> list[str]:
    names = arch.op_names
    if len(set(names)) != len(names):
        raise ContractError(f"operator names must be unique for weight summaries, got {names}")
    return names


def _check_compatible(model: UnrolledModel, ds: SparseDataset, label: str) -> None:
    if ds.dictionary.W.shape != model.dictionary.W.shape or not np.array_equal(ds.dictionary.W, model.dictionary.W):
        raise ContractError(f"{label} dictionary does not match the model dictionary")


def evaluate(model: UnrolledModel, ds: SparseDataset) -> float:
    if ds.size == 0:
        return float("nan")
    return mse_loss(predict(model, ds.X), ds.Z)


def train(model: UnrolledModel, train_set: SparseDataset, val_set: SparseDataset, cfg: TrainConfig,
          on_epoch: Callable[[TraceRecord], None] | None = None) -> tuple[UnrolledModel, list[TraceRecord]]:
    """Optimise alpha with Adam on mini-batch MSE against the target codes.

    Returns the trained model and ``epochs + 1`` trace records (none when
    ``epochs == 0``). Deterministic for a fixed config.
    """
    _check_compatible(model, train_set, "training set")
    _check_compatible(model, val_set, "validation set")
    _summary_key_order(model.arch)
    if cfg.epochs == 0:
        return model, []
    if cfg.batch_size > train_set.size:
        raise ContractError(f"batch_size {cfg.batch_size} exceeds training set size {train_set.size}")

    trace = [TraceRecord(0, summarize_weights(model.arch), evaluate(model, train_set), evaluate(model, val_set))]
    if on_epoch is not None:
        on_epoch(trace[0])

    alpha = model.arch.alpha.copy()
    state = AdamState.zeros(alpha.shape, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
    N = train_set.size
    for epoch in range(1, cfg.epochs + 1):
        order = numpy_generator(cfg.seed, 7, epoch).permutation(N)
        weighted_loss = 0.0
        for b, start in enumerate(range(0, N, cfg.batch_size)):
            cols = order[start:start + cfg.batch_size]
            z, cache = forward(model, train_set.X[:, cols])
            loss = mse_loss(z, train_set.Z[:, cols])
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite training loss at epoch {epoch}, batch {b}")
            grad = backward(model, cache, train_set.Z[:, cols])
            alpha, state = adam_update(state, alpha, grad, cfg.lr)
            model = model.with_alpha(alpha)
            weighted_loss += loss * cols.size
        rec = TraceRecord(epoch, summarize_weights(model.arch), weighted_loss / N, evaluate(model, val_set))
        trace.append(rec)
        if on_epoch is not None:
            on_epoch(rec)
    return model, trace


def trace_to_csv(trace: Sequence[TraceRecord], ops: Sequence[str]) -> str:
    lines = [",".join(["epoch", "train_loss", "val_loss", *ops])]
    for rec in trace:
        vals = [f"{rec.train_loss:.17g}", f"{rec.val_loss:.17g}"] + [f"{rec.summary[o]:.17g}" for o in ops]
        lines.append(",".join([str(rec.epoch), *vals]))
    return "\n".join(lines) + "\n"


def trace_from_csv(text: str) -> list[TraceRecord]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ContractError("empty trace document")
    header = lines[0].split(",")
    if header[:3] != ["epoch", "train_loss", "val_loss"] or len(header) < 4:
        raise ContractError(f"unexpected trace header {lines[0]!r}")
    ops = header[3:]
    out = []
    for lineno, ln in enumerate(lines[1:], 2):
        cells = ln.split(",")
        if len(cells) != len(header):
            raise ContractError(f"trace line {lineno} has {len(cells)} cells, expected {len(header)}")
        out.append(TraceRecord(int(cells[0]), {o: float(v) for o, v in zip(ops, cells[3:])},
                               float(cells[1]), float(cells[2])))
    return out
