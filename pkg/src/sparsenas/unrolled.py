"""Searchable unrolled network with exact reverse-mode gradients in alpha.

Layer ``k`` computes ``u_k = z_{k-1} - eta W^T (W z_{k-1} - x)`` followed by a
softmax-weighted mixture of candidate operators applied to ``u_k``. In
``per-layer`` mode every layer owns a row of alpha; in ``looped`` mode one row
is shared by all layers. Only alpha is trainable.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from . import activations as acts
from .datagen import Dictionary, read_manifest, write_manifest
from .errors import ContractError, DivergenceError
from .numeric import as_matrix, read_matrix, residual_step, softmax, write_matrix

PER_LAYER = "per-layer"
LOOPED = "looped"
BINARIZE_MAGNITUDE = 100.0


@dataclass(frozen=True)
class ArchParams:
    mode: str
    ops: tuple
    alpha: np.ndarray

    def __post_init__(self):
        if self.mode not in (PER_LAYER, LOOPED):
            raise ContractError(f"mode must be {PER_LAYER!r} or {LOOPED!r}, got {self.mode!r}")
        alpha = as_matrix(self.alpha, "alpha")
        if len(self.ops) < 2:
            raise ContractError(f"need at least 2 candidate operators, got {len(self.ops)}")
        if alpha.shape[1] != len(self.ops):
            raise ContractError(f"alpha has {alpha.shape[1]} columns for {len(self.ops)} operators")
        if self.mode == LOOPED and alpha.shape[0] != 1:
            raise ContractError(f"looped alpha must have one row, got {alpha.shape[0]}")
        if not np.isfinite(alpha).all():
            raise ContractError("alpha contains non-finite entries")
        object.__setattr__(self, "ops", tuple(self.ops))
        object.__setattr__(self, "alpha", alpha)

    @property
    def op_names(self) -> list[str]:
        return [op.name for op in self.ops]

    @property
    def weights(self) -> np.ndarray:
        """Row-wise softmax of alpha."""
        return softmax(self.alpha)


@dataclass(frozen=True)
class UnrolledModel:
    dictionary: Dictionary
    K: int
    eta: float
    lam: float
    arch: ArchParams

    def __post_init__(self):
        if self.K < 1:
            raise ContractError(f"layer count must be >= 1, got {self.K}")
        if not self.eta > 0:
            raise ContractError(f"eta must be > 0, got {self.eta}")
        if not self.lam >= 0:
            raise ContractError(f"lambda must be >= 0, got {self.lam}")
        if self.arch.mode == PER_LAYER and self.arch.alpha.shape[0] != self.K:
            raise ContractError(f"per-layer alpha has {self.arch.alpha.shape[0]} rows for K={self.K}")
        for op in self.arch.ops:
            if op.name == "shrink" and op.param != self.lam:
                raise ContractError(f"shrink threshold {op.param} differs from model lambda {self.lam}")

    def row(self, k: int) -> int:
        return k if self.arch.mode == PER_LAYER else 0

    def with_alpha(self, alpha) -> "UnrolledModel":
        return replace(self, arch=replace(self.arch, alpha=np.array(alpha, dtype=np.float64)))


def build_model(dictionary: Dictionary, K: int, ops: Sequence[str | acts.Activation],
                mode: str = PER_LAYER, eta: float | None = None, lam: float | None = None,
                init: float = 1.0, elu_scale: float = 1.0) -> UnrolledModel:
    """Model with ``eta = 1/c`` and ``lam = 0.01/c`` unless overridden, alpha filled with ``init``."""
    eta = 1.0 / dictionary.c if eta is None else float(eta)
    lam = 0.01 / dictionary.c if lam is None else float(lam)
    bound = []
    for op in ops:
        if isinstance(op, acts.Activation):
            bound.append(acts.shrink(lam) if op.name == "shrink" else op)
        else:
            bound.append(acts.from_name(op, lam, elu_scale))
    rows = K if mode == PER_LAYER else 1
    alpha = np.full((rows, len(bound)), float(init))
    return UnrolledModel(dictionary, K, eta, lam, ArchParams(mode, tuple(bound), alpha))


@dataclass(frozen=True)
class ForwardCache:
    """Pre-activations ``u_k`` (stacked as ``K x n x B``) and mixture weights per layer."""

    U: np.ndarray
    P: np.ndarray
    z_out: np.ndarray
    squeeze: bool


def gradient_step(z, x, dictionary: Dictionary, eta: float) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if z.shape[0] != dictionary.n or x.shape[0] != dictionary.m or z.shape[1:] != x.shape[1:]:
        raise ContractError(f"gradient_step shapes z{z.shape}, x{x.shape} do not fit W{dictionary.W.shape}")
    return residual_step(dictionary.W, z, x, eta)


def mixed_activation(u, p, ops: Sequence[acts.Activation]) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (len(ops),):
        raise ContractError(f"{p.shape[0] if p.ndim else 0} weights for {len(ops)} operators")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ContractError(f"mixture weights sum to {p.sum()}, expected 1")
    u = np.asarray(u, dtype=np.float64)
    codes, params = acts.kernel_args(ops)
    U = np.ascontiguousarray(u.reshape(u.shape[0], -1))
    return _kernels.mix_forward(U, codes, params, p).reshape(u.shape)


def forward(model: UnrolledModel, x) -> tuple[np.ndarray, ForwardCache]:
    """Run all ``K`` layers from ``z_0 = 0``. ``x`` may be one signal or an ``m x B`` batch."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    X = x[:, None] if squeeze else x
    d = model.dictionary
    if X.ndim != 2 or X.shape[0] != d.m:
        raise ContractError(f"signal has shape {x.shape}, expected leading dimension {d.m}")

    W, eta = d.W, model.eta
    codes, params = acts.kernel_args(model.arch.ops)
    P = model.arch.weights
    U = np.empty((model.K, d.n, X.shape[1]))
    z = np.zeros((d.n, X.shape[1]))
    for k in range(model.K):
        U[k] = residual_step(W, z, X, eta)
        z = _kernels.mix_forward(U[k], codes, params, P[model.row(k)])
        if not np.isfinite(z).all():
            raise DivergenceError(f"forward pass produced a non-finite iterate at layer {k + 1}")
    out = z[:, 0] if squeeze else z
    return out, ForwardCache(U, P, z, squeeze)


def predict(model: UnrolledModel, X, chunk: int = 512) -> np.ndarray:
    """Forward pass over an ``m x N`` signal matrix without keeping a cache."""
    X = as_matrix(X, "X")
    d = model.dictionary
    if X.shape[0] != d.m:
        raise ContractError(f"signals have {X.shape[0]} rows, dictionary has {d.m}")
    W, eta = d.W, model.eta
    codes, params = acts.kernel_args(model.arch.ops)
    P = model.arch.weights
    out = np.empty((d.n, X.shape[1]))
    for start in range(0, X.shape[1], chunk):
        Xc = X[:, start:start + chunk]
        z = np.zeros((d.n, Xc.shape[1]))
        for k in range(model.K):
            z = _kernels.mix_forward(residual_step(W, z, Xc, eta), codes, params, P[model.row(k)])
        if not np.isfinite(z).all():
            raise DivergenceError(f"forward pass produced a non-finite iterate (columns {start}..)")
        out[:, start:start + Xc.shape[1]] = z
    return out


def mse_loss(pred, target) -> float:
    """Mean squared error per entry, averaged over samples for ``n x B`` inputs."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ContractError(f"mse_loss shapes differ: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def backward(model: UnrolledModel, cache: ForwardCache, target) -> np.ndarray:
    """Gradient of ``mse_loss(z_K, target)`` with respect to alpha (same shape as alpha)."""
    T = np.asarray(target, dtype=np.float64)
    if cache.squeeze:
        T = T[:, None] if T.ndim == 1 else T
    Z = cache.z_out
    if cache.U.shape[0] != model.K or T.shape != Z.shape or cache.P.shape != model.arch.alpha.shape:
        raise ContractError("forward cache does not belong to this model/target")

    W, eta = model.dictionary.W, model.eta
    codes, params = acts.kernel_args(model.arch.ops)
    grad = np.zeros_like(model.arch.alpha)
    g = (2.0 / Z.size) * (Z - T)
    for k in range(model.K - 1, -1, -1):
        r = model.row(k)
        p = cache.P[r]
        dp, du = _kernels.mix_backward(cache.U[k], g, codes, params, p)
        # softmax Jacobian written as p_j * sum_i p_i (dp_j - dp_i): exact zero when all dp agree
        grad[r] += p * ((dp[:, None] - dp[None, :]) @ p)
        if k:
            g = du - eta * (W.T @ (W @ du))
    return grad


def loss_and_grad(model: UnrolledModel, X, T) -> tuple[float, np.ndarray]:
    z, cache = forward(model, X)
    return mse_loss(z, T), backward(model, cache, T)


def binarize(arch: ArchParams, magnitude: float = BINARIZE_MAGNITUDE) -> ArchParams:
    """Saturate every alpha row to +magnitude at its argmax (lowest index on ties), -magnitude elsewhere."""
    winners = np.argmax(arch.alpha, axis=1)
    alpha = np.full_like(arch.alpha, -magnitude)
    alpha[np.arange(alpha.shape[0]), winners] = magnitude
    return replace(arch, alpha=alpha)


def winning_ops(arch: ArchParams) -> list[str]:
    names = arch.op_names
    return [names[i] for i in np.argmax(arch.alpha, axis=1)]


# ---------------------------------------------------------------- checkpoint


def save_checkpoint(model: UnrolledModel, directory, dictionary_ref: str = "") -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_matrix(d / "alpha.mat", model.arch.alpha)
    elu_scales = [op.param for op in model.arch.ops if op.name == "elu"]
    write_manifest(d / "manifest", {
        "mode": model.arch.mode,
        "K": model.K,
        "J": len(model.arch.ops),
        "ops": ",".join(model.arch.op_names),
        "eta": repr(model.eta),
        "lambda": repr(model.lam),
        "elu_scale": repr(elu_scales[0] if elu_scales else 1.0),
        "dictionary": dictionary_ref,
    })
    return d


def load_checkpoint(directory, dictionary: Dictionary) -> UnrolledModel:
    d = Path(directory)
    meta = read_manifest(d / "manifest")
    model = build_model(dictionary, int(meta["K"]), meta["ops"].split(","), meta["mode"],
                        eta=float(meta["eta"]), lam=float(meta["lambda"]),
                        elu_scale=float(meta.get("elu_scale", 1.0)))
    return model.with_alpha(read_matrix(d / "alpha.mat"))
