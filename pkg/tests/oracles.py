"""Independent reference implementations used as test oracles.

Written directly from the mathematical definitions with plain numpy and no
package kernels, so agreement with the package is a real cross-check.
"""
import math

import mpmath
import numpy as np

from sparsenas import unrolled
from sparsenas.datagen import Dictionary, make_dictionary, sample_codes, synthesize


def soft(v, lam):
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def ref_act(name, v, a=0.0):
    v = np.asarray(v, dtype=np.float64)
    table = {
        "shrink": lambda: soft(v, a),
        "relu": lambda: np.where(v > 0, v, 0.0),
        "gelu": lambda: np.array([t * 0.5 * (1 + math.erf(t / math.sqrt(2))) for t in v.ravel()]).reshape(v.shape),
        "identity": lambda: v.copy(),
        "tanh": lambda: np.tanh(v),
        "sigmoid": lambda: 1 / (1 + np.exp(-v)),
        "logsigmoid": lambda: -np.logaddexp(0.0, -v),
        "tanhshrink": lambda: v - np.tanh(v),
        "elu": lambda: np.where(v > 0, v, a * (np.exp(np.minimum(v, 0)) - 1)),
    }
    return table[name]()


def ref_objective(z, x, W, lam):
    r = x - W @ z
    return float(np.dot(r, r) + lam * np.sum(np.abs(z)))


def ref_ista(x, W, thr, eta, K):
    z = np.zeros(W.shape[1])
    for _ in range(K):
        z = soft(z - eta * W.T @ (W @ z - x), thr)
    return z


def ref_forward(model, x):
    """Layer-by-layer forward with explicit per-operator sums."""
    W, eta = model.dictionary.W, model.eta
    P = model.arch.weights
    z = np.zeros(W.shape[1])
    for k in range(model.K):
        u = z - eta * W.T @ (W @ z - x)
        p = P[model.row(k)]
        z = sum(p[j] * ref_act(op.name, u, op.param) for j, op in enumerate(model.arch.ops))
    return z


def _mp_act(name, v, a):
    if name == "shrink":
        return v - a if v > a else (v + a if v < -a else mpmath.mpf(0))
    if name == "relu":
        return v if v > 0 else mpmath.mpf(0)
    if name == "gelu":
        return v * (1 + mpmath.erf(v / mpmath.sqrt(2))) / 2
    if name == "identity":
        return v
    if name == "tanh":
        return mpmath.tanh(v)
    if name == "sigmoid":
        return 1 / (1 + mpmath.exp(-v))
    if name == "logsigmoid":
        return -mpmath.log(1 + mpmath.exp(-v))
    if name == "tanhshrink":
        return v - mpmath.tanh(v)
    return v if v > 0 else a * mpmath.expm1(v)


def mp_loss(model, alpha, X, T, dps=30):
    """Batch MSE of the unrolled model evaluated in ``dps``-digit arithmetic."""
    with mpmath.workdps(dps):
        W = mpmath.matrix(model.dictionary.W.tolist())
        eta = mpmath.mpf(model.eta)
        ops = [(op.name, mpmath.mpf(op.param)) for op in model.arch.ops]
        P = []
        for row in np.asarray(alpha):
            e = [mpmath.exp(mpmath.mpf(a)) for a in row]
            tot = mpmath.fsum(e)
            P.append([w / tot for w in e])
        n, total = model.dictionary.n, mpmath.mpf(0)
        for b in range(X.shape[1]):
            x = mpmath.matrix(X[:, b].tolist())
            z = mpmath.matrix(n, 1)
            for k in range(model.K):
                u = z - eta * (W.T * (W * z - x))
                p = P[model.row(k)]
                z = mpmath.matrix([mpmath.fsum(p[j] * _mp_act(nm, u[i], a) for j, (nm, a) in enumerate(ops))
                                   for i in range(n)])
            total += mpmath.fsum((z[i] - mpmath.mpf(T[i, b])) ** 2 for i in range(n))
        return total / T.size


def fd_gradient(model, X, T, h=1e-5):
    """Central finite differences of the batch MSE over every alpha coordinate.

    Losses are evaluated in extended precision so the difference quotient at
    step ``h`` carries truncation error only.
    """
    alpha = model.arch.alpha
    grad = np.zeros_like(alpha)
    for idx in np.ndindex(alpha.shape):
        plus, minus = alpha.copy(), alpha.copy()
        plus[idx] += h
        minus[idx] -= h
        with mpmath.workdps(30):
            diff = mp_loss(model, plus, X, T) - mp_loss(model, minus, X, T)
            grad[idx] = float(diff / (mpmath.mpf(plus[idx]) - mpmath.mpf(minus[idx])))
    return grad


def kink_distance(model, X):
    """Smallest distance from any pre-activation to a non-smooth point of any op."""
    _, cache = unrolled.forward(model, X)
    points = sorted({p for op in model.arch.ops for p in _op_kinks(op)})
    if not points:
        return math.inf
    U = cache.U.ravel()
    return float(min(np.min(np.abs(U - p)) for p in points))


def _op_kinks(op):
    if op.name == "shrink":
        return (-op.param, op.param)
    if op.name in ("relu", "elu"):
        return (0.0,)
    return ()


def tiny_instance(seed, m=8, n=12, s=2, count=1, sign_mode="signed"):
    d = make_dictionary(seed, m, n)
    Z = sample_codes(seed + 100, n, s, count, sign_mode)
    return d, Z, synthesize(d, Z)


def gaussian_dictionary(seed, m, n):
    return Dictionary.from_matrix(np.random.default_rng(seed).standard_normal((m, n)))


def _gamma(k):
    u = 2.0**-53
    return k * u / (1 - k * u)


def objective_trace(Zs, x, W, lam):
    """Objective of each row of ``Zs`` plus a rigorous bound on its float64 evaluation error.

    The bound is the standard dot-product estimate: every residual entry is
    off by at most gamma_{n+1} times its absolute-value sum, which enters the
    squared norm twice; summation and the l1 term add gamma_m and gamma_n terms.
    """
    Zs = np.atleast_2d(Zs)
    m, n = W.shape
    R = x[None, :] - Zs @ W.T
    obj = np.einsum("ki,ki->k", R, R) + lam * np.abs(Zs).sum(axis=1)
    mag = np.abs(x)[None, :] + np.abs(Zs) @ np.abs(W).T
    bound = (2 * _gamma(n + 1) * np.einsum("ki,ki->k", np.abs(R), mag) + _gamma(m) * np.einsum("ki,ki->k", R, R)
             + _gamma(n) * lam * np.abs(Zs).sum(axis=1) + 2.0**-53 * obj)
    return obj, bound


def non_increasing(Zs, x, W, lam):
    """True if no objective step rises by more than the two evaluation error bounds."""
    obj, bound = objective_trace(Zs, x, W, lam)
    return bool(np.all(obj[1:] - obj[:-1] <= bound[1:] + bound[:-1]))
