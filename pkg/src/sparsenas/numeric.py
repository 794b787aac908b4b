"""Numeric substrate: dense linear algebra, seeded randomness, softmax and Adam.

Matrices are plain two-dimensional ``float64`` numpy arrays. Randomness is
counter based: an :class:`RngState` is a ``(seed, counter)`` pair, and the
value at draw position ``i`` depends only on ``seed`` and ``i``, so any stream
can be replayed or split without hidden state.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ContractError, NumericError

__all__ = [
    "RngState",
    "AdamState",
    "as_matrix",
    "as_vector",
    "matvec",
    "matvec_transposed",
    "frobenius_sq",
    "softmax",
    "adam_update",
    "uniform_fill",
    "derive_seed",
    "numpy_generator",
    "write_matrix",
    "read_matrix",
    "format_matrix",
    "parse_matrix",
    "residual_step",
]

_MASK64 = (1 << 64) - 1


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ContractError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    return arr


def as_vector(v, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ContractError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def matvec(A, v) -> np.ndarray:
    """Return ``A @ v``."""
    A = as_matrix(A, "A")
    v = as_vector(v, "v")
    if v.shape[0] != A.shape[1]:
        raise ContractError(f"matvec: vector length {v.shape[0]} != A.cols {A.shape[1]}")
    return A @ v


def matvec_transposed(A, u) -> np.ndarray:
    """Return ``A.T @ u`` without materialising the transpose."""
    A = as_matrix(A, "A")
    u = as_vector(u, "u")
    if u.shape[0] != A.shape[0]:
        raise ContractError(f"matvec_transposed: vector length {u.shape[0]} != A.rows {A.shape[0]}")
    return u @ A


def frobenius_sq(A) -> float:
    A = as_matrix(A, "A")
    return float(np.einsum("ij,ij->", A, A))


def softmax(v) -> np.ndarray:
    """Numerically stable softmax of a 1-D vector (or each row of a 2-D array)."""
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise ContractError("softmax of an empty vector")
    shifted = v - v.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


# --------------------------------------------------------------------- Adam


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, shape, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(np.zeros(shape), np.zeros(shape), 0, beta1, beta2, eps)


def adam_update(state: AdamState, params, grads, lr: float) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam step. Returns new params and new state; inputs are untouched."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or state.m.shape != params.shape or state.v.shape != params.shape:
        raise ContractError(
            f"adam_update shape mismatch: params {params.shape}, grads {grads.shape}, "
            f"m {state.m.shape}, v {state.v.shape}"
        )
    if lr < 0:
        raise ContractError(f"learning rate must be non-negative, got {lr}")
    bad = ~np.isfinite(grads)
    if bad.any():
        idx = int(np.flatnonzero(bad.ravel())[0])
        raise NumericError(f"non-finite gradient at parameter index {idx}")

    b1, b2 = state.beta1, state.beta2
    t = state.t + 1
    m = b1 * state.m + (1.0 - b1) * grads
    v = b2 * state.v + (1.0 - b2) * grads * grads
    m_hat = m / (1.0 - b1**t)
    v_hat = v / (1.0 - b2**t)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_params, replace(state, m=m, v=v, t=t)


def residual_step(W: np.ndarray, Z: np.ndarray, X: np.ndarray, eta: float) -> np.ndarray:
    """Gradient step ``Z - eta * W.T (W Z - X)`` on the least-squares data term.

    Works column-wise on matrices as well as on single vectors.
    """
    return Z - eta * (W.T @ (W @ Z - X))


# ---------------------------------------------------------------- randomness


@dataclass(frozen=True)
class RngState:
    """Position in a counter-based uniform stream keyed by ``seed``."""

    seed: int
    counter: int = field(default=0)

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64):
            raise ContractError(f"seed must fit in 64 unsigned bits, got {self.seed}")


def _raw_uniform(seed: int, start: int, count: int) -> np.ndarray:
    # Philox-4x64 emits four 64-bit words per counter increment.
    block, offset = divmod(start, 4)
    bitgen = np.random.Philox(key=seed & _MASK64, counter=block)
    words = bitgen.random_raw(offset + count)[offset:]
    return (words >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def uniform_fill(rng: RngState, count: int, lo: float = 0.0, hi: float = 1.0) -> tuple[np.ndarray, RngState]:
    """Draw ``count`` values uniform on ``[lo, hi)`` and advance the counter by ``count``."""
    if not lo < hi:
        raise ContractError(f"uniform_fill needs lo < hi, got [{lo}, {hi})")
    if count < 0:
        raise ContractError(f"count must be non-negative, got {count}")
    u = _raw_uniform(rng.seed, rng.counter, count)
    out = lo + (hi - lo) * u
    # lo + (hi-lo)*u can round up to hi for u close to 1
    np.minimum(out, np.nextafter(hi, lo), out=out)
    return out, replace(rng, counter=rng.counter + count)


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministically split ``seed`` into an independent child seed."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def numpy_generator(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=derive_seed(seed, *keys)))


# --------------------------------------------------------- matrix text format


def format_matrix(A) -> str:
    A = as_matrix(A)
    rows, cols = A.shape
    lines = [f"{rows} {cols}"]
    lines.extend(" ".join(f"{x:.17g}" for x in row) for row in A)
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ContractError("empty matrix document")
    try:
        rows, cols = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise ContractError(f"bad matrix header {lines[0]!r}") from exc
    if len(lines) - 1 != rows:
        raise ContractError(f"matrix header says {rows} rows, found {len(lines) - 1}")
    data = np.empty((rows, cols))
    for i, ln in enumerate(lines[1:]):
        vals = ln.split(" ")
        if len(vals) != cols:
            raise ContractError(f"matrix row {i} has {len(vals)} values, expected {cols}")
        data[i] = [float(x) for x in vals]
    if not np.isfinite(data).all():
        raise NumericError("matrix file contains non-finite values")
    return data


def write_matrix(path, A) -> None:
    Path(path).write_text(format_matrix(A))


def read_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text())
