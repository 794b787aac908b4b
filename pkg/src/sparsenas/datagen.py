"""Synthetic sparse-coding data: dictionaries, sparse codes, planted targets.

Three dataset families are produced here:

* exact-sparse: ``X = W Z`` with ``s``-sparse columns of ``Z`` (signed values);
* signed-sparse: the same, with nonzeros restricted to be positive or negative;
* planted: the signals of an exact-sparse set, with targets replaced by the
  end point of a fixed number of ``z <- op(z - eta W^T (W z - x))`` iterations.

Every column draws from its own split of the seed, so generation is independent
of iteration order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from . import activations as acts
from .errors import ContractError, DivergenceError
from .numeric import (
    RngState,
    as_matrix,
    derive_seed,
    frobenius_sq,
    numpy_generator,
    read_matrix,
    residual_step,
    uniform_fill,
    write_matrix,
)


class SignMode(str, Enum):
    SIGNED = "signed"
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class Dictionary:
    W: np.ndarray
    c: float
    seed: int = 0
    scale: float = 10.0
    normalization: str = "column"

    @classmethod
    def from_matrix(cls, W, seed: int = 0, scale: float = 1.0, normalization: str = "none") -> "Dictionary":
        W = as_matrix(W, "W")
        c = frobenius_sq(W)
        if not c > 0:
            raise ContractError("dictionary must be nonzero")
        return cls(W, c, seed, scale, normalization)

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def n(self) -> int:
        return self.W.shape[1]


def make_dictionary(seed: int, m: int = 50, n: int = 200, scale: float = 10.0,
                    normalization: str = "column") -> Dictionary:
    """Uniform ``[0, 1)`` entries, normalised, then multiplied by ``scale``.

    ``normalization="column"`` gives every column Euclidean norm ``scale``;
    ``"global"`` rescales the whole matrix to Frobenius norm ``scale``.
    """
    if m < 1 or n < 1:
        raise ContractError(f"dictionary shape must be positive, got {m}x{n}")
    if not scale > 0:
        raise ContractError(f"scale must be > 0, got {scale}")
    if normalization not in ("column", "global"):
        raise ContractError(f"normalization must be 'column' or 'global', got {normalization!r}")

    rng = RngState(seed)
    flat, rng = uniform_fill(rng, m * n)
    W = flat.reshape(m, n)
    norms = np.linalg.norm(W, axis=0)
    for j in np.flatnonzero(norms == 0.0):
        while norms[j] == 0.0:
            col, rng = uniform_fill(rng, m)
            W[:, j] = col
            norms[j] = np.linalg.norm(col)

    if normalization == "column":
        W = W / norms * scale
    else:
        W = W / math.sqrt(frobenius_sq(W)) * scale
    return Dictionary(W, frobenius_sq(W), seed, float(scale), normalization)


def _draw_nonzero(rng: RngState, count: int, sign_mode: SignMode) -> tuple[np.ndarray, RngState]:
    out = np.empty(count)
    filled = 0
    while filled < count:
        if sign_mode is SignMode.SIGNED:
            vals, rng = uniform_fill(rng, count - filled, -1.0, 1.0)
            vals = vals[(vals != 0.0) & (vals != -1.0)]
        else:
            vals, rng = uniform_fill(rng, count - filled, 0.0, 1.0)
            vals = vals[vals != 0.0]
            if sign_mode is SignMode.NEGATIVE:
                vals = -vals
        out[filled:filled + vals.size] = vals
        filled += vals.size
    return out, rng


def sample_codes(seed: int, n: int, s: int = 4, count: int = 1,
                 sign_mode: SignMode | str = SignMode.SIGNED) -> np.ndarray:
    """``n x count`` matrix whose columns each have exactly ``s`` nonzeros."""
    sign_mode = SignMode(sign_mode)
    if not 1 <= s <= n:
        raise ContractError(f"sparsity must satisfy 1 <= s <= n, got s={s}, n={n}")
    if count < 0:
        raise ContractError(f"count must be non-negative, got {count}")
    Z = np.zeros((n, count))
    idx = np.empty(n, dtype=np.int64)
    for col in range(count):
        rng = RngState(derive_seed(seed, col))
        # partial Fisher-Yates: the first s slots become the support
        idx[:] = np.arange(n)
        u, rng = uniform_fill(rng, s)
        for i in range(s):
            j = i + min(int(u[i] * (n - i)), n - i - 1)
            idx[i], idx[j] = idx[j], idx[i]
        vals, rng = _draw_nonzero(rng, s, sign_mode)
        Z[idx[:s], col] = vals
    return Z


def synthesize(dictionary: Dictionary, Z) -> np.ndarray:
    Z = as_matrix(Z, "Z")
    if Z.shape[0] != dictionary.n:
        raise ContractError(f"codes have {Z.shape[0]} rows, dictionary has {dictionary.n} columns")
    return dictionary.W @ Z


def plant_targets(dictionary: Dictionary, X, kind: acts.Activation, iters: int = 10000,
                  eta: float | None = None) -> tuple[np.ndarray, float]:
    """Run ``iters`` steps of ``z <- kind(z - eta W^T (W z - x))`` from ``z = 0`` per column.

    Returns the final iterates and the largest per-column sup-norm change of the
    last step, which indicates how close the output is to a fixed point.
    """
    X = as_matrix(X, "X")
    if X.shape[0] != dictionary.m:
        raise ContractError(f"signals have {X.shape[0]} rows, dictionary has {dictionary.m}")
    if iters < 1:
        raise ContractError(f"iters must be >= 1, got {iters}")
    eta = 1.0 / dictionary.c if eta is None else float(eta)
    if not eta > 0:
        raise ContractError(f"eta must be > 0, got {eta}")

    W = dictionary.W
    Z = np.zeros((dictionary.n, X.shape[1]))
    prev = Z
    for it in range(1, iters + 1):
        prev = Z
        Z = acts.act(kind, residual_step(W, Z, X, eta))
        if not np.isfinite(Z).all():
            col = int(np.flatnonzero(~np.isfinite(Z).all(axis=0))[0])
            raise DivergenceError(f"planted iteration diverged at column {col}, iteration {it}")
    displacement = float(np.abs(Z - prev).max()) if Z.size else 0.0
    return Z, displacement


# ------------------------------------------------------------------ datasets


@dataclass(frozen=True)
class SparseDataset:
    dictionary: Dictionary
    X: np.ndarray
    Z: np.ndarray
    s: int
    sign_mode: SignMode = SignMode.SIGNED
    provenance: str = "exact-sparse"
    kind: str | None = None
    kind_param: float = 0.0
    iters: int = 0
    eta: float = 0.0
    seed: int = 0
    displacement: float = 0.0

    def __post_init__(self):
        if self.X.shape[1] != self.Z.shape[1]:
            raise ContractError(f"X has {self.X.shape[1]} columns but Z has {self.Z.shape[1]}")

    @property
    def size(self) -> int:
        return self.X.shape[1]

    def subset(self, columns) -> "SparseDataset":
        columns = np.asarray(columns, dtype=np.int64)
        return replace(self, X=self.X[:, columns], Z=self.Z[:, columns])


def make_sparse_dataset(seed: int, m: int = 50, n: int = 200, s: int = 4, count: int = 12500,
                        sign_mode: SignMode | str = SignMode.SIGNED, scale: float = 10.0,
                        normalization: str = "column") -> SparseDataset:
    sign_mode = SignMode(sign_mode)
    dictionary = make_dictionary(derive_seed(seed, 1), m, n, scale, normalization)
    Z = sample_codes(derive_seed(seed, 2), n, s, count, sign_mode)
    return SparseDataset(dictionary, synthesize(dictionary, Z), Z, s, sign_mode, seed=seed)


def plant_dataset(base: SparseDataset, kind: acts.Activation, iters: int = 10000,
                  eta: float | None = None) -> SparseDataset:
    """Keep the signals of ``base`` and replace its targets by planted ``kind`` iterates."""
    eta = 1.0 / base.dictionary.c if eta is None else float(eta)
    Z, disp = plant_targets(base.dictionary, base.X, kind, iters, eta)
    return replace(base, Z=Z, provenance="planted", kind=kind.name, kind_param=kind.param,
                   iters=iters, eta=eta, displacement=disp)


def make_planted_dataset(seed: int, kind: acts.Activation, iters: int = 10000, m: int = 50,
                         n: int = 200, s: int = 4, count: int = 12500, scale: float = 10.0,
                         normalization: str = "column", eta: float | None = None) -> SparseDataset:
    base = make_sparse_dataset(seed, m, n, s, count, SignMode.SIGNED, scale, normalization)
    return plant_dataset(base, kind, iters, eta)


def split(ds: SparseDataset, train_frac: float = 0.8, seed: int = 0) -> tuple[SparseDataset, SparseDataset]:
    """Seeded random partition of the columns into train and validation sets."""
    if not 0 < train_frac < 1:
        raise ContractError(f"train_frac must lie in (0, 1), got {train_frac}")
    N = ds.size
    if N < 2:
        raise ContractError(f"need at least 2 samples to split, got {N}")
    n_train = math.floor(train_frac * N)
    if n_train == 0 or n_train == N:
        raise ContractError(f"train_frac={train_frac} leaves an empty side for N={N}")
    perm = numpy_generator(seed, 3).permutation(N)
    return ds.subset(perm[:n_train]), ds.subset(perm[n_train:])


# --------------------------------------------------------------- persistence


def write_manifest(path, entries: dict) -> None:
    lines = [f"{k} = {v}" for k, v in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ContractError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def dataset_manifest(ds: SparseDataset) -> dict:
    return {
        "seed": ds.seed,
        "dict_seed": ds.dictionary.seed,
        "m": ds.dictionary.m,
        "n": ds.dictionary.n,
        "s": ds.s,
        "N": ds.size,
        "sign_mode": ds.sign_mode.value,
        "scale": repr(ds.dictionary.scale),
        "normalization": ds.dictionary.normalization,
        "provenance": ds.provenance,
        "kind": ds.kind or "none",
        "kind_param": repr(ds.kind_param),
        "iters": ds.iters,
        "eta": repr(ds.eta),
        "displacement": repr(ds.displacement),
    }


def save_dataset(ds: SparseDataset, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_matrix(d / "W.mat", ds.dictionary.W)
    write_matrix(d / "X.mat", ds.X)
    write_matrix(d / "Z.mat", ds.Z)
    write_manifest(d / "manifest", dataset_manifest(ds))
    return d


def load_dataset(directory) -> SparseDataset:
    d = Path(directory)
    meta = read_manifest(d / "manifest")
    W = read_matrix(d / "W.mat")
    X = read_matrix(d / "X.mat")
    Z = read_matrix(d / "Z.mat")
    if X.shape[0] != W.shape[0] or Z.shape[0] != W.shape[1]:
        raise ContractError(f"inconsistent dataset shapes in {d}: W{W.shape} X{X.shape} Z{Z.shape}")
    dictionary = Dictionary(W, frobenius_sq(W), int(meta.get("dict_seed", 0)),
                            float(meta.get("scale", 1.0)), meta.get("normalization", "column"))
    kind = meta.get("kind", "none")
    return SparseDataset(
        dictionary, X, Z,
        s=int(meta["s"]),
        sign_mode=SignMode(meta.get("sign_mode", "signed")),
        provenance=meta.get("provenance", "exact-sparse"),
        kind=None if kind == "none" else kind,
        kind_param=float(meta.get("kind_param", 0.0)),
        iters=int(meta.get("iters", 0)),
        eta=float(meta.get("eta", 0.0)),
        seed=int(meta.get("seed", 0)),
        displacement=float(meta.get("displacement", 0.0)),
    )
