"""
Planted-causality scene generator.

Every scene is a multiset of causal archetypes plus distractors. A causal archetype carries
one explanation bit and set/clear directives on the action bits; labels are the closure of
those rules, so the link between explanations and actions is known exactly.
"""
import logging
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from autooia.const import ACTIONS, EXPLANATIONS, NUM_ACTIONS, NUM_EXPLANATIONS
from autooia.data.records import SceneRecord
from autooia.exceptions.exception import ConfigError
from autooia.model.config import PROFILES
from autooia.utils import digest

logger = logging.getLogger(__name__)

F, S, L, R = (ACTIONS.index(a) for a in ACTIONS)

# backbone map height and width per channel profile
BACKBONE_SIZES = {"desk": (6, 10), "paper": (24, 40)}


@dataclass(frozen=True)
class CausalRule:
    name: str
    explanation: Optional[int]
    sets: FrozenSet[int] = frozenset()
    clears: FrozenSet[int] = frozenset()

    @property
    def is_distractor(self) -> bool:
        return self.explanation is None

    def describe(self) -> str:
        sets = "".join(ACTIONS[i] for i in sorted(self.sets)) or "-"
        clears = "".join(ACTIONS[i] for i in sorted(self.clears)) or "-"
        bit = "-" if self.explanation is None else str(self.explanation)
        return f"{self.name}|{bit}|+{sets}|-{clears}"


def _rule(index: int, sets=(), clears=()) -> CausalRule:
    return CausalRule(EXPLANATIONS[index], index, frozenset(sets), frozenset(clears))


@dataclass(frozen=True)
class CausalRuleTable:
    """
    Causal archetypes (one per explanation) followed by distractors with no label effect.
    Conflicts resolve as clear-dominates-set, so the closure does not depend on rule order.
    """
    causal: Tuple[CausalRule, ...]
    distractors: Tuple[CausalRule, ...]

    @classmethod
    def default(cls) -> "CausalRuleTable":
        causal = (
            _rule(0, sets=[F]), _rule(1, sets=[F]), _rule(2, sets=[F]),
            _rule(3, sets=[S], clears=[F]), _rule(4, sets=[S], clears=[F]),
            _rule(5, sets=[S], clears=[F]), _rule(6, sets=[S], clears=[F]),
            _rule(7, sets=[S], clears=[F]), _rule(8, sets=[S], clears=[F]),
            # left: why not, then why
            _rule(9, clears=[L]), _rule(10, clears=[L]), _rule(11, clears=[L]),
            _rule(12, sets=[L]), _rule(13, sets=[L]), _rule(14, sets=[L]),
            # right: why not, then why
            _rule(15, clears=[R]), _rule(16, clears=[R]), _rule(17, clears=[R]),
            _rule(18, sets=[R]), _rule(19, sets=[R]), _rule(20, sets=[R]),
        )
        distractors = tuple(CausalRule(name, None) for name in
                            ("parked car", "building", "sidewalk pedestrian", "sky", "vegetation", "pole"))
        return cls(causal, distractors)

    @property
    def archetypes(self) -> Tuple[CausalRule, ...]:
        return self.causal + self.distractors

    def closure(self, archetype_ids: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
        """Action and explanation labels implied by the given causal archetype ids."""
        action = np.zeros(NUM_ACTIONS, dtype=np.int8)
        explanation = np.zeros(NUM_EXPLANATIONS, dtype=np.int8)
        cleared = np.zeros(NUM_ACTIONS, dtype=bool)
        for archetype in archetype_ids:
            rule = self.archetypes[archetype]
            if rule.is_distractor:
                continue
            explanation[rule.explanation] = 1
            for bit in rule.sets:
                action[bit] = 1
            for bit in rule.clears:
                cleared[bit] = True
        action[cleared] = 0
        return action, explanation

    def canonical_text(self) -> str:
        return "\n".join(rule.describe() for rule in self.archetypes)

    def hash(self) -> str:
        return digest(self.canonical_text().encode("utf-8"))


@dataclass
class SyntheticConfig:
    """
    Attributes:
        scenes (int): Number of scenes to generate.
        causal_min (int), causal_max (int): Inclusive range of causal archetypes per scene.
        distractor_min (int), distractor_max (int): Inclusive range of distractors per scene.
        noise (float): Standard deviation of the Gaussian feature noise.
        profile (str): Channel profile supplying c_backbone, c_local and spatial.
        backbone_height (Optional[int]), backbone_width (Optional[int]): Size of the backbone map; the
            profile's size from BACKBONE_SIZES when omitted.
        seed (int): Seed of the whole dataset.
        prior (Optional[Tuple[float, ...]]): Sampling weights over the causal archetypes; uniform when omitted.
    """
    scenes: int = 100
    causal_min: int = 1
    causal_max: int = 4
    distractor_min: int = 0
    distractor_max: int = 12
    noise: float = 0.1
    profile: str = "desk"
    backbone_height: Optional[int] = None
    backbone_width: Optional[int] = None
    seed: int = 0
    prior: Optional[Tuple[float, ...]] = field(default=None)

    def validate(self, rules: CausalRuleTable) -> None:
        """
        Raises:
            ConfigError: On an empty range, negative noise, an unknown profile or a bad prior.
        """
        if self.scenes < 0:
            raise ConfigError(f"scenes must be >= 0, got {self.scenes}")
        if not 1 <= self.causal_min <= self.causal_max:
            raise ConfigError(f"causal range [{self.causal_min}, {self.causal_max}] is empty or below 1")
        if not 0 <= self.distractor_min <= self.distractor_max:
            raise ConfigError(f"distractor range [{self.distractor_min}, {self.distractor_max}] is empty")
        if self.noise < 0:
            raise ConfigError(f"noise must be >= 0, got {self.noise}")
        if self.profile not in PROFILES:
            raise ConfigError(f"Unknown profile '{self.profile}'")
        spatial = PROFILES[self.profile]["spatial"]
        height, width = self.backbone_size()
        if height < spatial or width < spatial:
            raise ConfigError(f"backbone {height}×{width} smaller than spatial {spatial}")
        if self.prior is not None:
            prior = np.asarray(self.prior, dtype=np.float64)
            if prior.shape != (len(rules.causal),) or np.any(prior < 0) or prior.sum() <= 0:
                raise ConfigError(f"prior needs {len(rules.causal)} non-negative weights with a positive sum")

    def backbone_size(self) -> Tuple[int, int]:
        default_height, default_width = BACKBONE_SIZES.get(self.profile, BACKBONE_SIZES["desk"])
        return (default_height if self.backbone_height is None else self.backbone_height,
                default_width if self.backbone_width is None else self.backbone_width)

    def prior_weights(self, rules: CausalRuleTable) -> np.ndarray:
        if self.prior is None:
            return np.full(len(rules.causal), 1.0 / len(rules.causal))
        prior = np.asarray(self.prior, dtype=np.float64)
        return prior / prior.sum()


def generate_synthetic(config: SyntheticConfig, rules: Optional[CausalRuleTable] = None) -> List[SceneRecord]:
    """
    Generates ``config.scenes`` scenes, fully determined by ``config.seed``.

    Proposal i is its archetype's embedding broadcast over spatial×spatial plus noise; the
    backbone map receives a fixed projection of every object's embedding at a random cell,
    plus noise.
    """
    rules = rules or CausalRuleTable.default()
    config.validate(rules)
    dims = PROFILES[config.profile]
    c_local, c_backbone, spatial = dims["c_local"], dims["c_backbone"], dims["spatial"]
    n_causal = len(rules.causal)

    embed_rng = np.random.default_rng([config.seed, 0])
    embeddings = embed_rng.normal(0.0, 1.0, size=(len(rules.archetypes), c_local))
    projection = embed_rng.normal(0.0, 1.0 / np.sqrt(c_local), size=(c_backbone, c_local))
    weights = config.prior_weights(rules)
    height, width = config.backbone_size()

    rng = np.random.default_rng([config.seed, 1])
    width = len(str(max(config.scenes - 1, 0)))
    scenes: List[SceneRecord] = []
    for index in range(config.scenes):
        causal = rng.choice(n_causal, size=int(rng.integers(config.causal_min, config.causal_max + 1)), p=weights)
        distractors = n_causal + rng.integers(0, len(rules.distractors),
                                              size=int(rng.integers(config.distractor_min, config.distractor_max + 1)))
        objects = rng.permutation(np.concatenate([causal, distractors]).astype(np.int64))

        proposals = embeddings[objects][:, :, None, None] + \
            config.noise * rng.normal(size=(len(objects), c_local, spatial, spatial))
        backbone = config.noise * rng.normal(size=(c_backbone, height, width))
        rows = rng.integers(0, height, size=len(objects))
        cols = rng.integers(0, width, size=len(objects))
        for archetype, row, col in zip(objects, rows, cols):
            backbone[:, row, col] += projection @ embeddings[archetype]

        action, explanation = rules.closure(causal)
        scenes.append(SceneRecord(
            scene_id=f"syn{config.seed}_{index:0{width}d}",
            backbone=backbone.astype(np.float32),
            proposals=proposals.reshape(len(objects), c_local, spatial, spatial).astype(np.float32),
            action=action,
            explanation=explanation,
            archetypes=tuple(int(a) for a in causal),
        ))
    logger.debug("Generated %d synthetic scenes with seed %d", len(scenes), config.seed)
    return scenes
