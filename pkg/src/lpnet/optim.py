"""Update rules, learning-rate schedule and the plain-text train config.

SGD uses the heavy-ball-on-decayed-gradient form: v <- mu*v + (g + wd*p),
p <- p - lr*v.  Weight decay is applied to weights only, never to biases
(bias tensors are recognized by their ``.bias`` name suffix).
"""

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .container import MAGIC_TENSOR, read_tensors, write_tensors
from .errors import DataError, NumericError


@dataclass
class TrainConfig:
    optimizer: str = "adam"          # adam | sgd_momentum
    lr0: float = 0.001
    momentum: float = 0.9
    weight_decay: float = 0.0005
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    decay_every: int = 50            # epochs between lr halvings
    decay_factor: float = 0.5
    batch: int = 4
    steps: int = 2000
    seed: int = 0
    crop_size: int = 64
    flip_h: bool = True
    flip_v: bool = True
    alpha: float = 1.0
    beta: float = 0.8
    gamma: float = 1.0
    # super-resolution extras
    scale: int = 2                   # 2^K magnification, K in {1,2,3}
    sr_gamma: float = 1.0
    sr_delta: float = 10.0
    lambdas: tuple = ()              # empty -> per-level defaults
    freeze_decoder: bool = True

    def __post_init__(self):
        if self.lr0 <= 0:
            raise DataError("lr0 must be > 0")
        if not 0 < self.decay_factor <= 1:
            raise DataError("decay_factor must be in (0, 1]")
        if not 0 <= self.momentum < 1:
            raise DataError("momentum must be in [0, 1)")
        if self.optimizer not in ("adam", "sgd_momentum"):
            raise DataError(f"unknown optimizer {self.optimizer!r}")
        if self.scale not in (2, 4, 8):
            raise DataError("scale must be 2, 4 or 8")


def _parse_value(name, kind, raw):
    raw = raw.strip()
    try:
        if kind is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple:
            return tuple(float(p) for p in raw.split(",") if p.strip())
        return raw
    except ValueError as exc:
        raise DataError(f"config key {name}: bad value {raw!r}") from exc


def parse_config(text):
    """key=value lines; blank lines and # comments allowed; unknown keys error."""
    kinds = {f.name: f.type for f in fields(TrainConfig)}
    types = {"str": str, "float": float, "int": int, "bool": bool, "tuple": tuple}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"config line {lineno}: expected key=value")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key not in kinds:
            raise DataError(f"config line {lineno}: unknown key {key!r}")
        kind = types.get(kinds[key], kinds[key]) if isinstance(kinds[key], str) else kinds[key]
        values[key] = _parse_value(key, kind, raw)
    return TrainConfig(**values)


def load_config(path):
    try:
        with open(path) as f:
            return parse_config(f.read())
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc


def lr_at(lr0, decay_every, decay_factor, epoch):
    return lr0 * decay_factor ** (epoch // decay_every)


def _check_finite(grads):
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in {name}")


def _is_bias(name):
    return name.endswith(".bias")


class SgdMomentum:
    def __init__(self, cfg):
        self.cfg = cfg
        self.velocity = {}

    def step(self, params, grads, lr):
        _check_finite(grads)
        cfg = self.cfg
        for name, p in params.items():
            g = grads[name]
            if cfg.weight_decay and not _is_bias(name):
                g = g + cfg.weight_decay * p
            v = self.velocity.get(name)
            v = g if v is None else cfg.momentum * v + g
            self.velocity[name] = v
            p -= lr * v

    def state_tensors(self):
        return {f"velocity.{k}": v for k, v in self.velocity.items()}

    def load_state_tensors(self, tensors):
        self.velocity = {k[len("velocity."):]: v for k, v in tensors.items()}


class Adam:
    def __init__(self, cfg):
        self.cfg = cfg
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params, grads, lr):
        _check_finite(grads)
        cfg = self.cfg
        self.t += 1
        b1, b2, eps = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for name, p in params.items():
            g = grads[name]
            if cfg.weight_decay and not _is_bias(name):
                g = g + cfg.weight_decay * p
            m = self.m.get(name, 0.0)
            v = self.v.get(name, 0.0)
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            self.m[name], self.v[name] = m, v
            p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)

    def state_tensors(self):
        out = {"t": np.array([float(self.t)])}
        out.update({f"m.{k}": v for k, v in self.m.items()})
        out.update({f"v.{k}": v for k, v in self.v.items()})
        return out

    def load_state_tensors(self, tensors):
        self.t = int(tensors["t"][0])
        self.m = {k[2:]: v for k, v in tensors.items() if k.startswith("m.")}
        self.v = {k[2:]: v for k, v in tensors.items() if k.startswith("v.")}


def make_optimizer(cfg):
    return Adam(cfg) if cfg.optimizer == "adam" else SgdMomentum(cfg)


def save_optimizer_state(opt, path):
    write_tensors(path, opt.state_tensors(), MAGIC_TENSOR)


def load_optimizer_state(opt, path):
    opt.load_state_tensors(read_tensors(path, MAGIC_TENSOR))
