import math
from dataclasses import dataclass, replace
from typing import Dict, Tuple

from autooia.const import Ablation
from autooia.exceptions.exception import ConfigError

PROFILES: Dict[str, Dict[str, int]] = {
    "paper": dict(c_backbone=2048, c_local=2048, c_global=256, spatial=7,
                  global_hidden=512, selector_hidden=256, selector_mid=64,
                  head_hidden=1024, head_mid=256),
    "desk": dict(c_backbone=16, c_local=16, c_global=8, spatial=3,
                 global_hidden=32, selector_hidden=16, selector_mid=8,
                 head_hidden=64, head_mid=32),
}


@dataclass(frozen=True)
class ModelConfig:
    """
    Geometry and loss weighting of the network.

    Attributes:
        c_backbone (int): Channels of the backbone feature map.
        c_local (int): Channels of each proposal block.
        c_global (int): Channels produced by the Global Module.
        spatial (int): Side of the pooled maps and of the proposal blocks.
        k (int): Number of selected objects.
        global_hidden (int): Width between the two Global Module convolutions.
        selector_hidden (int), selector_mid (int): Widths of the selector's first two convolutions.
        head_hidden (int), head_mid (int): Hidden widths of the fully connected trunk.
        lambda_ (float): Explanation loss weight; float('inf') trains on explanations only.
        ablation (str): Model variant, one of Ablation.choices().
        profile (str): Name of the channel profile the dimensions came from.
        dtype (str): Parameter storage precision.
        seed (int): Seed of the random selector variant.
    """
    c_backbone: int = 2048
    c_local: int = 2048
    c_global: int = 256
    spatial: int = 7
    k: int = 10
    global_hidden: int = 512
    selector_hidden: int = 256
    selector_mid: int = 64
    head_hidden: int = 1024
    head_mid: int = 256
    lambda_: float = 1.0
    ablation: str = Ablation.FULL
    profile: str = "paper"
    dtype: str = "float64"
    seed: int = 0

    def __post_init__(self):
        for name in ("c_backbone", "c_local", "c_global", "spatial", "k", "global_hidden",
                     "selector_hidden", "selector_mid", "head_hidden", "head_mid"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if math.isnan(self.lambda_) or self.lambda_ < 0:
            raise ConfigError(f"lambda must be >= 0 or inf, got {self.lambda_}")
        if self.ablation not in Ablation.choices():
            raise ConfigError(f"Unknown ablation '{self.ablation}'. Choose from {', '.join(Ablation.choices())}")
        if self.dtype not in ("float64", "float32"):
            raise ConfigError(f"dtype must be float64 or float32, got {self.dtype!r}")

    @classmethod
    def from_profile(cls, profile: str = "paper", **overrides) -> "ModelConfig":
        if profile not in PROFILES:
            raise ConfigError(f"Unknown profile '{profile}'. Choose from {', '.join(PROFILES)}")
        return cls(profile=profile, **{**PROFILES[profile], **overrides})

    def with_changes(self, **changes) -> "ModelConfig":
        return replace(self, **changes)

    @property
    def c(self) -> int:
        """Channels of an object-scene tensor."""
        return self.c_local + self.c_global

    @property
    def head_input(self) -> int:
        return self.k * self.c

    @property
    def head_dims(self) -> Tuple[int, int]:
        return self.head_hidden, self.head_mid

    @property
    def single_action(self) -> bool:
        return self.ablation == Ablation.SINGLE_ACTION
