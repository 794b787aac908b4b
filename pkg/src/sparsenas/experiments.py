"""End-to-end experiment runs: data, search, binarisation, baselines, artefacts.

A run directory receives ``config.txt`` (resolved config echo),
``dataset/manifest``, ``trace.csv``, ``trace.svg``, ``report.txt`` and a
``checkpoint/`` holding the trained alpha.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from . import _kernels
from . import activations as acts
from .config import ExperimentConfig
from .datagen import (
    SparseDataset,
    dataset_manifest,
    make_sparse_dataset,
    plant_dataset,
    save_dataset,
    split,
    write_manifest,
)
from .nas import TraceRecord, TrainConfig, evaluate, summarize_weights, train, trace_to_csv
from .solvers import fista, ista
from .svg import emit_svg
from .unrolled import binarize, build_model, save_checkpoint, winning_ops, mse_loss

log = logging.getLogger(__name__)


def build_dataset(cfg: ExperimentConfig) -> SparseDataset:
    base = make_sparse_dataset(cfg.data_seed, cfg.m, cfg.n, cfg.s, cfg.N,
                               cfg.resolved_sign_mode if cfg.kind == "signed" else "signed",
                               cfg.scale, cfg.normalization)
    if cfg.kind != "planted":
        return base
    c = base.dictionary.c
    lam = 0.01 / c if cfg.lam_value is None else cfg.lam_value
    op = acts.from_name(cfg.planted_op, lam, cfg.elu_scale)
    return plant_dataset(base, op, cfg.plant_iters, cfg.eta_value)


def train_config(cfg: ExperimentConfig) -> TrainConfig:
    return TrainConfig(lr=cfg.lr, epochs=cfg.epochs, batch_size=cfg.batch_size, seed=cfg.seed,
                       adam_beta1=cfg.beta1, adam_beta2=cfg.beta2, adam_eps=cfg.eps)


def final_winner(rec: TraceRecord, ops) -> str:
    """Operator with the largest summary weight; the earliest listed one wins ties."""
    weights = [rec.summary[o] for o in ops]
    return ops[int(np.argmax(weights))]


def run_experiment(cfg: ExperimentConfig, out_dir, on_epoch=None) -> dict:
    """Run one experiment into ``out_dir`` and return the report as an ordered dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text())

    ds = build_dataset(cfg)
    data_dir = out / "dataset"
    data_dir.mkdir(exist_ok=True)
    write_manifest(data_dir / "manifest", dataset_manifest(ds))
    train_set, val_set = split(ds, cfg.train_frac, cfg.data_seed)

    ops = cfg.resolved_ops
    model = build_model(ds.dictionary, cfg.K, ops, cfg.resolved_mode, cfg.eta_value, cfg.lam_value,
                        elu_scale=cfg.elu_scale)
    log.info("training %s: K=%d mode=%s ops=%s", cfg.kind, cfg.K, cfg.resolved_mode, ",".join(ops))
    trained, trace = train(model, train_set, val_set, train_config(cfg), on_epoch)
    if not trace:
        trace = [TraceRecord(0, summarize_weights(model.arch), evaluate(model, train_set), evaluate(model, val_set))]

    (out / "trace.csv").write_text(trace_to_csv(trace, ops))
    emit_svg(trace, out / "trace.svg", ops, title=f"{cfg.kind}: operator weights")
    save_checkpoint(trained, out / "checkpoint", dictionary_ref="../dataset/manifest")

    hard = trained.with_alpha(binarize(trained.arch).alpha)
    layer_winners = winning_ops(trained.arch)
    ista_val = ista(val_set.X, ds.dictionary, trained.lam, trained.eta, cfg.K)
    fista_val = fista(val_set.X, ds.dictionary, trained.lam, trained.eta, cfg.K)

    last = trace[-1]
    report = {
        "kind": cfg.kind,
        "mode": cfg.resolved_mode,
        "K": cfg.K,
        "ops": ",".join(ops),
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "seed": cfg.seed,
        "data_seed": cfg.data_seed,
        "backend": _kernels.ELEMENTWISE_BACKEND,
        "winner": final_winner(last, list(ops)),
    }
    for o in ops:
        report[f"final_weight.{o}"] = f"{last.summary[o]:.17g}"
    for o in ops:
        report[f"layers_won.{o}"] = layer_winners.count(o)
    report.update({
        "final_train_loss": f"{last.train_loss:.17g}",
        "final_val_loss": f"{last.val_loss:.17g}",
        "binarized_val_mse": f"{evaluate(hard, val_set):.17g}",
        "ista_val_mse": f"{mse_loss(ista_val, val_set.Z):.17g}",
        "fista_val_mse": f"{mse_loss(fista_val, val_set.Z):.17g}",
    })
    if ds.provenance == "planted":
        report["planted_op"] = ds.kind
        report["plant_iters"] = ds.iters
        report["plant_displacement"] = f"{ds.displacement:.17g}"
    write_manifest(out / "report.txt", report)
    return report


def save_full_dataset(cfg: ExperimentConfig, out_dir) -> SparseDataset:
    ds = build_dataset(cfg)
    save_dataset(ds, out_dir)
    return ds
