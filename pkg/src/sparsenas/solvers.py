"""Reference sparse-recovery solvers: ISTA, FISTA and coordinate-descent LASSO.

The objective is ``||x - W z||^2 + lam * ||z||_1`` (no 1/2 on the data term).
``ista``/``fista`` take the soft-threshold applied after each gradient step
directly; a run with threshold ``t`` and step ``eta`` minimises the objective
with weight ``2 t / eta``. Use :func:`threshold_for` and
:func:`objective_weight` to convert between the two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import activations as acts
from ._accel import njit
from .datagen import Dictionary
from .errors import ContractError, DivergenceError
from .numeric import residual_step


def threshold_for(lam: float, eta: float) -> float:
    """Soft-threshold that makes ISTA/FISTA minimise the objective with weight ``lam``."""
    return 0.5 * lam * eta


def objective_weight(threshold: float, eta: float) -> float:
    return 2.0 * threshold / eta


def lasso_objective(z, x, dictionary: Dictionary, lam: float) -> float:
    z = np.asarray(z, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if z.shape != (dictionary.n,) or x.shape != (dictionary.m,):
        raise ContractError(f"lasso_objective shapes z{z.shape}, x{x.shape} do not fit W{dictionary.W.shape}")
    r = x - dictionary.W @ z
    return float(r @ r + lam * np.abs(z).sum())


def _check_solver_args(x, dictionary, lam, eta, K):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != dictionary.m or x.ndim > 2:
        raise ContractError(f"signal shape {x.shape} does not fit W{dictionary.W.shape}")
    if not eta > 0:
        raise ContractError(f"eta must be > 0, got {eta}")
    if not lam >= 0:
        raise ContractError(f"threshold must be >= 0, got {lam}")
    if K < 0:
        raise ContractError(f"iteration count must be >= 0, got {K}")
    return x


def ista(x, dictionary: Dictionary, lam: float, eta: float, K: int,
         callback: Callable[[int, np.ndarray], None] | None = None) -> np.ndarray:
    """``K`` iterations of ``z <- shrink_lam(z - eta W^T (W z - x))`` from zero.

    ``x`` may be a single signal or an ``m x B`` batch. ``callback(k, z)`` is
    invoked after iteration ``k``.
    """
    x = _check_solver_args(x, dictionary, lam, eta, K)
    op = acts.shrink(lam)
    W = dictionary.W
    z = np.zeros((dictionary.n,) + x.shape[1:])
    for k in range(1, K + 1):
        z = acts.act(op, residual_step(W, z, x, eta))
        if not np.isfinite(z).all():
            raise DivergenceError(f"ista produced a non-finite iterate at iteration {k}")
        if callback is not None:
            callback(k, z)
    return z


def fista(x, dictionary: Dictionary, lam: float, eta: float, K: int,
          callback: Callable[[int, np.ndarray], None] | None = None) -> np.ndarray:
    """Accelerated ISTA with the standard ``t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2`` momentum."""
    x = _check_solver_args(x, dictionary, lam, eta, K)
    op = acts.shrink(lam)
    W = dictionary.W
    z_prev = np.zeros((dictionary.n,) + x.shape[1:])
    y = z_prev
    t = 1.0
    for k in range(1, K + 1):
        z = acts.act(op, residual_step(W, y, x, eta))
        if not np.isfinite(z).all():
            raise DivergenceError(f"fista produced a non-finite iterate at iteration {k}")
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = z + ((t - 1.0) / t_next) * (z - z_prev)
        z_prev, t = z, t_next
        if callback is not None:
            callback(k, z)
    return z_prev


@dataclass(frozen=True)
class CDResult:
    z: np.ndarray
    sweeps: int
    converged: bool


@njit(cache=True)
def _cd_sweeps(W, x, col_sq, lam, tol, max_sweeps, z, r):
    n = W.shape[1]
    m = W.shape[0]
    for sweep in range(1, max_sweeps + 1):
        biggest = 0.0
        for i in range(n):
            old = z[i]
            # w_i^T r_{-i} with r_{-i} = r + w_i z_i
            dot = 0.0
            for a in range(m):
                dot += W[a, i] * r[a]
            rho = dot / col_sq[i] + old
            thr = lam / (2.0 * col_sq[i])
            if rho > thr:
                new = rho - thr
            elif rho < -thr:
                new = rho + thr
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                for a in range(m):
                    r[a] -= W[a, i] * delta
                z[i] = new
            if abs(delta) > biggest:
                biggest = abs(delta)
        if biggest <= tol:
            return sweep, True
    return max_sweeps, False


def lasso_cd(x, dictionary: Dictionary, lam: float, tol: float = 1e-10, max_sweeps: int = 100_000,
             callback: Callable[[int, np.ndarray], None] | None = None) -> CDResult:
    """Cyclic coordinate descent on ``||x - W z||^2 + lam ||z||_1`` starting from zero.

    Stops once a full sweep moves no coordinate by more than ``tol``; if the
    sweep budget runs out first the last iterate is returned with
    ``converged=False``.
    """
    x = np.asarray(x, dtype=np.float64)
    W = np.ascontiguousarray(dictionary.W)
    if x.shape != (dictionary.m,):
        raise ContractError(f"signal shape {x.shape} does not fit W{W.shape}")
    if not lam >= 0:
        raise ContractError(f"lambda must be >= 0, got {lam}")
    col_sq = np.einsum("ij,ij->j", W, W)
    if (col_sq == 0).any():
        raise ContractError(f"dictionary column {int(np.flatnonzero(col_sq == 0)[0])} is zero")
    z = np.zeros(dictionary.n)
    r = x.copy()
    if callback is None:
        sweeps, converged = _cd_sweeps(W, x, col_sq, float(lam), float(tol), int(max_sweeps), z, r)
        return CDResult(z, int(sweeps), bool(converged))
    for sweep in range(1, max_sweeps + 1):
        _, converged = _cd_sweeps(W, x, col_sq, float(lam), float(tol), 1, z, r)
        callback(sweep, z)
        if converged:
            return CDResult(z, sweep, True)
    return CDResult(z, max_sweeps, False)


def iterate_stats(z, x, dictionary: Dictionary, lam: float) -> tuple[float, float, float]:
    """``(objective, residual_norm, l1_norm)`` for one iterate."""
    r = x - dictionary.W @ z
    l1 = float(np.abs(z).sum())
    return float(r @ r + lam * l1), float(np.linalg.norm(r)), l1
