"""Elementwise activation kernels and the softmax-mixture forward/backward.

Every kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
version. ``_accel.JIT_ELEMENTWISE`` picks which set is exported. Operator codes
match :data:`sparsenas.activations.OP_CODES`.
"""
import math

import numpy as np
from scipy import special

from ._accel import JIT_ELEMENTWISE, njit_elementwise as njit

SHRINK, RELU, GELU, IDENTITY, TANH, SIGMOID, LOGSIGMOID, TANHSHRINK, ELU = range(9)

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


# ------------------------------------------------------------------ numba


@njit(cache=True)
def _act_scalar(code, a, v):
    if code == SHRINK:
        if v > a:
            return v - a
        if v < -a:
            return v + a
        return 0.0 * v
    if code == RELU:
        return v if v > 0.0 else 0.0
    if code == GELU:
        return v * 0.5 * (1.0 + math.erf(v * _INV_SQRT2))
    if code == IDENTITY:
        return v
    if code == TANH:
        return math.tanh(v)
    if code == SIGMOID:
        if v >= 0.0:
            return 1.0 / (1.0 + math.exp(-v))
        e = math.exp(v)
        return e / (1.0 + e)
    if code == LOGSIGMOID:
        if v >= 0.0:
            return -math.log1p(math.exp(-v))
        return v - math.log1p(math.exp(v))
    if code == TANHSHRINK:
        return v - math.tanh(v)
    # ELU
    return v if v > 0.0 else a * math.expm1(v)


@njit(cache=True)
def _dact_scalar(code, a, v):
    if code == SHRINK:
        return 1.0 if abs(v) > a else 0.0
    if code == RELU:
        return 1.0 if v > 0.0 else 0.0
    if code == GELU:
        return 0.5 * (1.0 + math.erf(v * _INV_SQRT2)) + v * _INV_SQRT_2PI * math.exp(-0.5 * v * v)
    if code == IDENTITY:
        return 1.0
    if code == TANH:
        t = math.tanh(v)
        return 1.0 - t * t
    if code == SIGMOID:
        if v >= 0.0:
            s = 1.0 / (1.0 + math.exp(-v))
        else:
            e = math.exp(v)
            s = e / (1.0 + e)
        return s * (1.0 - s)
    if code == LOGSIGMOID:
        # d/dv log(sigmoid(v)) = sigmoid(-v)
        if v >= 0.0:
            e = math.exp(-v)
            return e / (1.0 + e)
        return 1.0 / (1.0 + math.exp(v))
    if code == TANHSHRINK:
        t = math.tanh(v)
        return t * t
    if v > 0.0:
        return 1.0
    if v == 0.0:
        return 0.0
    return a * math.exp(v)


@njit(cache=True)
def _act_dact_scalar(code, a, v):
    """Value and slope together, sharing the transcendental evaluations."""
    if code == GELU:
        cdf = 0.5 * (1.0 + math.erf(v * _INV_SQRT2))
        return v * cdf, cdf + v * _INV_SQRT_2PI * math.exp(-0.5 * v * v)
    if code == TANH:
        t = math.tanh(v)
        return t, 1.0 - t * t
    if code == TANHSHRINK:
        t = math.tanh(v)
        return v - t, t * t
    if code == SIGMOID:
        if v >= 0.0:
            s = 1.0 / (1.0 + math.exp(-v))
        else:
            e = math.exp(v)
            s = e / (1.0 + e)
        return s, s * (1.0 - s)
    if code == LOGSIGMOID:
        if v >= 0.0:
            e = math.exp(-v)
            return -math.log1p(e), e / (1.0 + e)
        e = math.exp(v)
        return v - math.log1p(e), 1.0 / (1.0 + e)
    return _act_scalar(code, a, v), _dact_scalar(code, a, v)


@njit(cache=True)
def _act_array_nb(code, a, U):
    out = np.empty_like(U)
    flat_u = U.ravel()
    flat_o = out.ravel()
    for i in range(flat_u.size):
        flat_o[i] = _act_scalar(code, a, flat_u[i])
    return out


@njit(cache=True)
def _dact_array_nb(code, a, U):
    out = np.empty_like(U)
    flat_u = U.ravel()
    flat_o = out.ravel()
    for i in range(flat_u.size):
        flat_o[i] = _dact_scalar(code, a, flat_u[i])
    return out


@njit(cache=True)
def _mix_forward_nb(U, codes, params, p):
    # operator loop outermost so the code dispatch is loop invariant
    n, b = U.shape
    out = np.zeros_like(U)
    for j in range(codes.shape[0]):
        c = codes[j]
        a = params[j]
        w = p[j]
        for i in range(n):
            for s in range(b):
                out[i, s] += w * _act_scalar(c, a, U[i, s])
    return out


@njit(cache=True)
def _mix_backward_nb(U, G, codes, params, p):
    n, b = U.shape
    J = codes.shape[0]
    dp = np.zeros(J)
    slope = np.zeros_like(U)
    for j in range(J):
        c = codes[j]
        a = params[j]
        w = p[j]
        acc = 0.0
        for i in range(n):
            for s in range(b):
                f, d = _act_dact_scalar(c, a, U[i, s])
                acc += G[i, s] * f
                slope[i, s] += w * d
        dp[j] = acc
    return dp, slope * G


# ------------------------------------------------------------------ numpy


def _act_array_np(code, a, U):
    U = np.asarray(U, dtype=np.float64)
    if code == SHRINK:
        return np.sign(U) * np.maximum(np.abs(U) - a, 0.0)
    if code == RELU:
        return np.maximum(U, 0.0)
    if code == GELU:
        return U * 0.5 * (1.0 + special.erf(U * _INV_SQRT2))
    if code == IDENTITY:
        return U.copy()
    if code == TANH:
        return np.tanh(U)
    if code == SIGMOID:
        return special.expit(U)
    if code == LOGSIGMOID:
        return special.log_expit(U)
    if code == TANHSHRINK:
        return U - np.tanh(U)
    if code == ELU:
        return np.where(U > 0.0, U, a * np.expm1(np.minimum(U, 0.0)))
    raise ValueError(f"unknown operator code {code}")


def _dact_array_np(code, a, U):
    U = np.asarray(U, dtype=np.float64)
    if code == SHRINK:
        return (np.abs(U) > a).astype(np.float64)
    if code == RELU:
        return (U > 0.0).astype(np.float64)
    if code == GELU:
        return 0.5 * (1.0 + special.erf(U * _INV_SQRT2)) + U * _INV_SQRT_2PI * np.exp(-0.5 * U * U)
    if code == IDENTITY:
        return np.ones_like(U)
    if code == TANH:
        return 1.0 - np.tanh(U) ** 2
    if code == SIGMOID:
        s = special.expit(U)
        return s * (1.0 - s)
    if code == LOGSIGMOID:
        return special.expit(-U)
    if code == TANHSHRINK:
        return np.tanh(U) ** 2
    if code == ELU:
        return np.where(U > 0.0, 1.0, np.where(U == 0.0, 0.0, a * np.exp(np.minimum(U, 0.0))))
    raise ValueError(f"unknown operator code {code}")


def _mix_forward_np(U, codes, params, p):
    out = np.zeros_like(U)
    for j in range(len(codes)):
        out += p[j] * _act_array_np(codes[j], params[j], U)
    return out


def _act_dact_np(code, a, U):
    if code == GELU:
        cdf = 0.5 * (1.0 + special.erf(U * _INV_SQRT2))
        return U * cdf, cdf + U * _INV_SQRT_2PI * np.exp(-0.5 * U * U)
    if code == TANH:
        t = np.tanh(U)
        return t, 1.0 - t * t
    if code == TANHSHRINK:
        t = np.tanh(U)
        return U - t, t * t
    if code == SIGMOID:
        s = special.expit(U)
        return s, s * (1.0 - s)
    if code == LOGSIGMOID:
        return special.log_expit(U), special.expit(-U)
    return _act_array_np(code, a, U), _dact_array_np(code, a, U)


def _mix_backward_np(U, G, codes, params, p):
    J = len(codes)
    dp = np.empty(J)
    slope = np.zeros_like(U)
    for j in range(J):
        f, d = _act_dact_np(codes[j], params[j], U)
        dp[j] = np.sum(G * f)
        slope += p[j] * d
    return dp, slope * G


if JIT_ELEMENTWISE:
    act_array, dact_array = _act_array_nb, _dact_array_nb
    mix_forward, mix_backward = _mix_forward_nb, _mix_backward_nb
else:
    act_array, dact_array = _act_array_np, _dact_array_np
    mix_forward, mix_backward = _mix_forward_np, _mix_backward_np

ELEMENTWISE_BACKEND = "numba" if JIT_ELEMENTWISE else "numpy"
