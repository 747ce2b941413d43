from collections import OrderedDict
from dataclasses import dataclass, fields
from typing import ClassVar, Dict

import numpy as np

from autooia.autograd.tensor import Tensor
from autooia.const import NUM_OUTPUTS
from autooia.exceptions.exception import CheckpointError
from autooia.model.config import ModelConfig


def _weight(rng: np.random.Generator, shape, fan_in: int, dtype: str, gain: float = 2.0) -> np.ndarray:
    # He-normal for layers followed by ReLU, gain 1 for the output layer
    return rng.normal(0.0, np.sqrt(gain / fan_in), size=shape).astype(dtype)


@dataclass
class ParamGroup:
    PREFIX: ClassVar[str] = ""

    def named(self) -> Dict[str, Tensor]:
        return OrderedDict((f"{self.PREFIX}.{f.name}", getattr(self, f.name)) for f in fields(self))


@dataclass
class GlobalModuleParams(ParamGroup):
    """conv1 c_backbone→global_hidden (3×3, pad 1) and conv2 global_hidden→c_global (3×3, pad 1)."""
    PREFIX: ClassVar[str] = "global"
    conv1_weight: Tensor
    conv1_bias: Tensor
    conv2_weight: Tensor
    conv2_bias: Tensor

    @classmethod
    def initialize(cls, config: ModelConfig, rng: np.random.Generator) -> "GlobalModuleParams":
        c_in, hidden, c_out, dt = config.c_backbone, config.global_hidden, config.c_global, config.dtype
        return cls(
            conv1_weight=Tensor.parameter(_weight(rng, (hidden, c_in, 3, 3), c_in * 9, dt)),
            conv1_bias=Tensor.parameter(np.zeros(hidden, dtype=dt)),
            conv2_weight=Tensor.parameter(_weight(rng, (c_out, hidden, 3, 3), hidden * 9, dt)),
            conv2_bias=Tensor.parameter(np.zeros(c_out, dtype=dt)),
        )


@dataclass
class SelectorParams(ParamGroup):
    """conv1 c→selector_hidden (1×1), conv2 selector_hidden→selector_mid (3×3, pad 1), conv3 selector_mid→1 (1×1)."""
    PREFIX: ClassVar[str] = "selector"
    conv1_weight: Tensor
    conv1_bias: Tensor
    conv2_weight: Tensor
    conv2_bias: Tensor
    conv3_weight: Tensor
    conv3_bias: Tensor

    @classmethod
    def initialize(cls, config: ModelConfig, rng: np.random.Generator) -> "SelectorParams":
        c, hidden, mid, dt = config.c, config.selector_hidden, config.selector_mid, config.dtype
        return cls(
            conv1_weight=Tensor.parameter(_weight(rng, (hidden, c, 1, 1), c, dt)),
            conv1_bias=Tensor.parameter(np.zeros(hidden, dtype=dt)),
            conv2_weight=Tensor.parameter(_weight(rng, (mid, hidden, 3, 3), hidden * 9, dt)),
            conv2_bias=Tensor.parameter(np.zeros(mid, dtype=dt)),
            conv3_weight=Tensor.parameter(_weight(rng, (1, mid, 1, 1), mid, dt, gain=1.0)),
            conv3_bias=Tensor.parameter(np.zeros(1, dtype=dt)),
        )


@dataclass
class HeadParams(ParamGroup):
    """fc1 k·c→head_hidden, fc2 head_hidden→head_mid, fc_out head_mid→25 (4 actions then 21 explanations)."""
    PREFIX: ClassVar[str] = "head"
    fc1_weight: Tensor
    fc1_bias: Tensor
    fc2_weight: Tensor
    fc2_bias: Tensor
    fc_out_weight: Tensor
    fc_out_bias: Tensor

    @classmethod
    def initialize(cls, config: ModelConfig, rng: np.random.Generator) -> "HeadParams":
        d_in, (h1, h2), dt = config.head_input, config.head_dims, config.dtype
        return cls(
            fc1_weight=Tensor.parameter(_weight(rng, (h1, d_in), d_in, dt)),
            fc1_bias=Tensor.parameter(np.zeros(h1, dtype=dt)),
            fc2_weight=Tensor.parameter(_weight(rng, (h2, h1), h1, dt)),
            fc2_bias=Tensor.parameter(np.zeros(h2, dtype=dt)),
            fc_out_weight=Tensor.parameter(_weight(rng, (NUM_OUTPUTS, h2), h2, dt, gain=1.0)),
            fc_out_bias=Tensor.parameter(np.zeros(NUM_OUTPUTS, dtype=dt)),
        )


@dataclass
class ModelParams:
    """
    All trainable tensors of the network plus the configuration they were built for.
    """
    config: ModelConfig
    global_module: GlobalModuleParams
    selector: SelectorParams
    head: HeadParams

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int = 0) -> "ModelParams":
        rng = np.random.default_rng([seed, 0])
        return cls(
            config=config,
            global_module=GlobalModuleParams.initialize(config, rng),
            selector=SelectorParams.initialize(config, rng),
            head=HeadParams.initialize(config, rng),
        )

    def named(self) -> Dict[str, Tensor]:
        tensors = OrderedDict()
        for group in (self.global_module, self.selector, self.head):
            for name, tensor in group.named().items():
                tensor.name = name
                tensors[name] = tensor
        return tensors

    def zero_grad(self) -> None:
        for tensor in self.named().values():
            tensor.zero_grad()

    def snapshot(self) -> Dict[str, np.ndarray]:
        return OrderedDict((name, t.values.copy()) for name, t in self.named().items())

    def load_values(self, values: Dict[str, np.ndarray]) -> None:
        """
        Overwrites parameter values in place.

        Raises:
            CheckpointError: On a missing, unexpected or mis-shaped entry.
        """
        tensors = self.named()
        if set(values) != set(tensors):
            missing = sorted(set(tensors) - set(values))
            extra = sorted(set(values) - set(tensors))
            raise CheckpointError(f"parameter names differ (missing {missing}, unexpected {extra})")
        for name, tensor in tensors.items():
            incoming = np.asarray(values[name])
            if incoming.shape != tensor.shape:
                raise CheckpointError(f"{name}: expected shape {tensor.shape}, got {incoming.shape}")
            tensor.values[...] = incoming
