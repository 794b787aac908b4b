"""The search-space operator zoo: candidate proximal operators and their slopes.

Each :class:`Activation` carries a canonical lowercase name and, for the two
parameterised kinds, a scalar (``shrink`` threshold, ``elu`` scale). At kinks
the derivative takes the value that keeps dead units dead: ``shrink`` has slope
0 on ``[-lam, lam]``, ``relu`` and ``elu`` have slope 0 at 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import ContractError

OP_CODES = {
    "shrink": _kernels.SHRINK,
    "relu": _kernels.RELU,
    "gelu": _kernels.GELU,
    "identity": _kernels.IDENTITY,
    "tanh": _kernels.TANH,
    "sigmoid": _kernels.SIGMOID,
    "logsigmoid": _kernels.LOGSIGMOID,
    "tanhshrink": _kernels.TANHSHRINK,
    "elu": _kernels.ELU,
}
OP_NAMES = tuple(OP_CODES)


@dataclass(frozen=True)
class Activation:
    name: str
    param: float = 0.0

    def __post_init__(self):
        if self.name not in OP_CODES:
            raise ContractError(f"unknown activation {self.name!r}; expected one of {', '.join(OP_NAMES)}")
        if self.name == "shrink" and not self.param >= 0:
            raise ContractError(f"shrink threshold must be >= 0, got {self.param}")
        if self.name == "elu" and not self.param > 0:
            raise ContractError(f"elu scale must be > 0, got {self.param}")

    @property
    def code(self) -> int:
        return OP_CODES[self.name]

    def __call__(self, v):
        return act(self, v)

    def __str__(self):
        return self.name


def shrink(lam: float) -> Activation:
    return Activation("shrink", float(lam))


def elu(a: float = 1.0) -> Activation:
    return Activation("elu", float(a))


RELU = Activation("relu")
GELU = Activation("gelu")
IDENTITY = Activation("identity")
TANH = Activation("tanh")
SIGMOID = Activation("sigmoid")
LOGSIGMOID = Activation("logsigmoid")
TANHSHRINK = Activation("tanhshrink")


def from_name(name: str, lam: float = 0.0, elu_scale: float = 1.0) -> Activation:
    """Build an operator from its canonical name, binding ``shrink`` to ``lam``."""
    key = name.strip().lower()
    if key == "shrink":
        return shrink(lam)
    if key == "elu":
        return elu(elu_scale)
    return Activation(key)


def act(kind: Activation, v):
    """Apply ``kind`` to a scalar or elementwise to an array."""
    if np.ndim(v) == 0:
        return float(_kernels._act_scalar(kind.code, float(kind.param), float(v)))
    return _kernels.act_array(kind.code, float(kind.param), np.ascontiguousarray(v, dtype=np.float64))


def act_deriv(kind: Activation, v):
    """Pointwise derivative of :func:`act`, using the dead-unit subgradient at kinks."""
    if np.ndim(v) == 0:
        return float(_kernels._dact_scalar(kind.code, float(kind.param), float(v)))
    return _kernels.dact_array(kind.code, float(kind.param), np.ascontiguousarray(v, dtype=np.float64))


def kernel_args(ops: Sequence[Activation]) -> tuple[np.ndarray, np.ndarray]:
    """Operator codes and parameters packed as arrays for the mixture kernels."""
    codes = np.array([op.code for op in ops], dtype=np.int64)
    params = np.array([op.param for op in ops], dtype=np.float64)
    return codes, params


def kinks(kind: Activation) -> tuple[float, ...]:
    """Points where ``kind`` is not differentiable."""
    if kind.name == "shrink":
        return (-kind.param, kind.param)
    if kind.name in ("relu", "elu"):
        return (0.0,)
    return ()
