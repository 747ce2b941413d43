from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from autooia.autograd.tensor import Tensor
from autooia.exceptions.exception import ConfigError, DimensionError


@dataclass(frozen=True)
class Schedule:
    """
    Step decay: lr(e) = base_lr / decay_factor ** floor(e / decay_every).
    """
    base_lr: float = 1e-3
    total_epochs: int = 50
    decay_every: int = 10
    decay_factor: float = 10.0

    def __post_init__(self):
        if self.base_lr <= 0 or self.total_epochs < 1 or self.decay_every < 1 or self.decay_factor <= 0:
            raise ConfigError(f"invalid schedule {self}")


def lr_at_epoch(epoch: int, schedule: Schedule) -> float:
    if not 0 <= epoch < schedule.total_epochs:
        raise ConfigError(f"epoch {epoch} outside [0, {schedule.total_epochs})")
    return schedule.base_lr / schedule.decay_factor ** (epoch // schedule.decay_every)


@dataclass
class AdamState:
    """
    Moment buffers and hyper-parameters of Adam with weight decay.

    Attributes:
        m (Dict[str, np.ndarray]): First moments, keyed by parameter name.
        v (Dict[str, np.ndarray]): Second moments, keyed by parameter name.
        t (int): Number of steps taken.
        decoupled (bool): Apply weight decay to the parameters directly instead of adding it to the gradient.
    """
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-4
    decoupled: bool = False

    @classmethod
    def for_params(cls, params: Dict[str, Tensor], **hyper) -> "AdamState":
        return cls(
            m={name: np.zeros(t.shape) for name, t in params.items()},
            v={name: np.zeros(t.shape) for name, t in params.items()},
            **hyper,
        )


def adam_step(params: Dict[str, Tensor], grads: Dict[str, np.ndarray], state: AdamState, lr: float) -> None:
    """
    One Adam update in place. Parameters without an entry in ``grads`` are left untouched.

    Raises:
        DimensionError: If a gradient or moment buffer does not match its parameter.
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.t
    correction2 = 1.0 - b2 ** state.t
    for name, gradient in grads.items():
        param = params[name]
        theta = np.asarray(param.values, dtype=np.float64)
        g = np.asarray(gradient, dtype=np.float64)
        if g.shape != param.shape or state.m[name].shape != param.shape:
            raise DimensionError(f"{name}: gradient {g.shape} / state {state.m[name].shape} vs parameter {param.shape}")
        if state.weight_decay and not state.decoupled:
            g = g + state.weight_decay * theta
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        update = lr * m_hat / (np.sqrt(v_hat) + state.eps)
        if state.weight_decay and state.decoupled:
            update = update + lr * state.weight_decay * theta
        param.values[...] = theta - update
