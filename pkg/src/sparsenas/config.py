"""Flat ``key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored. Every key has a default except
``kind``; ``"auto"`` for ``mode``, ``ops``, ``eta`` and ``lambda`` means "derive
from the experiment kind / dictionary". :meth:`ExperimentConfig.to_text`
echoes the fully resolved configuration, and parsing the echo gives back an
equal object.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .activations import OP_NAMES
from .errors import ConfigError

KINDS = ("sparse", "search-space-8", "looped", "planted", "signed")
PROFILES = {
    "desk": {"N": 2000, "K": 30, "epochs": 200, "plant_iters": 2000},
    "paper-full": {"N": 12500, "K": 6000, "epochs": 2000, "plant_iters": 10000},
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    planted_op: str = "logsigmoid"
    variant: str = "relu"
    sign_mode: str = "signed"
    m: int = 50
    n: int = 200
    s: int = 4
    N: int = 12500
    scale: float = 10.0
    normalization: str = "column"
    data_seed: int = 0
    train_frac: float = 0.8
    plant_iters: int = 10000
    K: int = 6000
    mode: str = "auto"
    ops: str = "auto"
    eta: str = "auto"
    lam: str = "auto"
    elu_scale: float = 1.0
    lr: float = 0.05
    epochs: int = 2000
    batch_size: int = 128
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    # ---------------------------------------------------------- resolution

    @property
    def resolved_mode(self) -> str:
        if self.mode != "auto":
            return self.mode
        return "looped" if self.kind in ("looped", "planted", "signed") else "per-layer"

    @property
    def resolved_ops(self) -> tuple[str, ...]:
        from . import nas

        if self.ops != "auto":
            return tuple(o.strip() for o in self.ops.split(","))
        if self.kind in ("sparse", "looped"):
            return nas.FOUR_OPS
        if self.kind in ("search-space-8", "planted"):
            return nas.EIGHT_OPS
        return nas.RELU_VARIANT if self.variant == "relu" else nas.ELU_VARIANT

    @property
    def resolved_sign_mode(self) -> str:
        if self.kind == "signed" and self.sign_mode == "signed":
            return "positive"
        return self.sign_mode

    @property
    def eta_value(self) -> float | None:
        return None if self.eta == "auto" else float(self.eta)

    @property
    def lam_value(self) -> float | None:
        return None if self.lam == "auto" else float(self.lam)

    # ---------------------------------------------------------- text form

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            key = "lambda" if f.name == "lam" else f.name
            val = getattr(self, f.name)
            lines.append(f"{key} = {val!r}" if isinstance(val, float) else f"{key} = {val}")
        return "\n".join(lines) + "\n"

    def with_overrides(self, **kw) -> "ExperimentConfig":
        cfg = replace(self, **kw)
        validate(cfg)
        return cfg


_FIELDS = {("lambda" if f.name == "lam" else f.name): f for f in fields(ExperimentConfig)}
_TYPES = {"int": int, "float": float, "str": str}


def _coerce(key: str, raw: str, lineno: int):
    ftype = _FIELDS[key].type
    try:
        if ftype == "int":
            val = float(raw) if any(ch in raw for ch in ".eE") else int(raw)
            if isinstance(val, float):
                if not val.is_integer():
                    raise ValueError
                val = int(val)
            return val
        if ftype == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: key '{key}' expects {ftype}, got {raw!r}") from None
    return raw


def parse_config(text: str, profile: str | None = None) -> ExperimentConfig:
    """Parse and validate a config document; ``profile`` supplies defaults below explicit keys."""
    values: dict[str, object] = {}
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile '{profile}'; expected one of {', '.join(PROFILES)}")
        values.update(PROFILES[profile])
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        seen.add(key)
        if raw == "" and key == "kind":
            raise ConfigError(f"line {lineno}: required key 'kind' is empty")
        values[key] = _coerce(key, raw, lineno)
    if "kind" not in values:
        raise ConfigError("missing required key 'kind'")
    kwargs = {("lam" if k == "lambda" else k): v for k, v in values.items()}
    cfg = ExperimentConfig(**kwargs)
    validate(cfg)
    return cfg


def _require(cond: bool, key: str, constraint: str, value) -> None:
    if not cond:
        raise ConfigError(f"'{key}' violates {constraint} (got {value!r})")


def validate(cfg: ExperimentConfig) -> None:
    _require(cfg.kind in KINDS, "kind", f"kind in {{{', '.join(KINDS)}}}", cfg.kind)
    _require(cfg.planted_op in OP_NAMES, "planted_op", "a known operator name", cfg.planted_op)
    _require(cfg.variant in ("relu", "elu"), "variant", "variant in {relu, elu}", cfg.variant)
    _require(cfg.sign_mode in ("signed", "positive", "negative"), "sign_mode",
             "sign_mode in {signed, positive, negative}", cfg.sign_mode)
    _require(cfg.m >= 1, "m", "m >= 1", cfg.m)
    _require(cfg.n >= 1, "n", "n >= 1", cfg.n)
    _require(1 <= cfg.s <= cfg.n, "s", "1 <= s <= n", cfg.s)
    _require(cfg.N >= 2, "N", "N >= 2", cfg.N)
    _require(cfg.scale > 0, "scale", "scale > 0", cfg.scale)
    _require(cfg.normalization in ("column", "global"), "normalization",
             "normalization in {column, global}", cfg.normalization)
    _require(cfg.data_seed >= 0, "data_seed", "data_seed >= 0", cfg.data_seed)
    _require(0 < cfg.train_frac < 1, "train_frac", "0 < train_frac < 1", cfg.train_frac)
    n_train = math.floor(cfg.train_frac * cfg.N)
    _require(1 <= n_train < cfg.N, "train_frac", "a non-empty train/validation split", cfg.train_frac)
    _require(cfg.plant_iters >= 1, "plant_iters", "plant_iters >= 1", cfg.plant_iters)
    _require(cfg.K >= 1, "K", "K >= 1", cfg.K)
    _require(cfg.mode in ("auto", "per-layer", "looped"), "mode", "mode in {auto, per-layer, looped}", cfg.mode)
    ops = cfg.resolved_ops
    _require(len(ops) >= 2, "ops", "at least 2 operators", cfg.ops)
    _require(all(o in OP_NAMES for o in ops), "ops", f"operators in {{{', '.join(OP_NAMES)}}}", cfg.ops)
    _require(len(set(ops)) == len(ops), "ops", "unique operators", cfg.ops)
    if cfg.eta != "auto":
        _require(_is_float(cfg.eta) and float(cfg.eta) > 0, "eta", "eta > 0 or 'auto'", cfg.eta)
    if cfg.lam != "auto":
        _require(_is_float(cfg.lam) and float(cfg.lam) >= 0, "lambda", "lambda >= 0 or 'auto'", cfg.lam)
    _require(cfg.elu_scale > 0, "elu_scale", "elu_scale > 0", cfg.elu_scale)
    _require(cfg.lr >= 0, "lr", "lr >= 0", cfg.lr)
    _require(cfg.epochs >= 0, "epochs", "epochs >= 0", cfg.epochs)
    _require(1 <= cfg.batch_size <= n_train, "batch_size", "1 <= batch_size <= training-set size", cfg.batch_size)
    _require(0 <= cfg.beta1 < 1, "beta1", "0 <= beta1 < 1", cfg.beta1)
    _require(0 <= cfg.beta2 < 1, "beta2", "0 <= beta2 < 1", cfg.beta2)
    _require(cfg.eps > 0, "eps", "eps > 0", cfg.eps)
    _require(cfg.seed >= 0, "seed", "seed >= 0", cfg.seed)
    if cfg.kind == "signed":
        _require(cfg.resolved_sign_mode in ("positive", "negative"), "sign_mode",
                 "sign_mode in {positive, negative} for signed experiments", cfg.sign_mode)


def _is_float(raw: str) -> bool:
    try:
        float(raw)
    except ValueError:
        return False
    return True
