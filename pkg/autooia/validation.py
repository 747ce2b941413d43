from dataclasses import dataclass, field
from typing import List

import numpy as np

from autooia.const import NUM_ACTIONS, NUM_EXPLANATIONS
from autooia.data.records import SceneRecord
from autooia.exceptions.exception import DimensionError, LabelError, NonFiniteError
from autooia.model.config import ModelConfig

EMPTY_SCENE_WARNING = "empty scene skipped"


@dataclass
class ValidationReport:
    """
    Outcome of validate_record: ok when there are no warnings; a warned scene is not usable.
    """
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.warnings

    @property
    def usable(self) -> bool:
        return self.ok


def validate_record(record: SceneRecord, config: ModelConfig) -> ValidationReport:
    """
    Checks a scene against the model configuration.

    Returns:
        ValidationReport: With the warning "empty scene skipped" for scenes without proposals.

    Raises:
        DimensionError: If channel or spatial dimensions disagree with ``config``.
        LabelError: If a label has the wrong arity.
        NonFiniteError: If features contain NaN or infinity.
    """
    report = ValidationReport()
    backbone, proposals = record.backbone, record.proposals
    if backbone.ndim != 3 or backbone.shape[0] != config.c_backbone:
        raise DimensionError(f"scene '{record.scene_id}': backbone channels expected {config.c_backbone}, "
                             f"actual {backbone.shape[0] if backbone.ndim else backbone.shape}")
    if backbone.shape[1] < config.spatial or backbone.shape[2] < config.spatial:
        raise DimensionError(f"scene '{record.scene_id}': backbone {backbone.shape[1]}×{backbone.shape[2]} "
                             f"smaller than spatial {config.spatial}")
    if proposals.ndim != 4 or proposals.shape[1] != config.c_local:
        raise DimensionError(f"scene '{record.scene_id}': c_local expected {config.c_local}, "
                             f"actual {proposals.shape[1] if proposals.ndim == 4 else proposals.shape}")
    if proposals.shape[0] and proposals.shape[2:] != (config.spatial, config.spatial):
        raise DimensionError(f"scene '{record.scene_id}': proposal side expected {config.spatial}, "
                             f"actual {proposals.shape[2]}×{proposals.shape[3]}")
    if np.shape(record.action) != (NUM_ACTIONS,) or np.shape(record.explanation) != (NUM_EXPLANATIONS,):
        raise LabelError(f"scene '{record.scene_id}': label arities must be {NUM_ACTIONS} and {NUM_EXPLANATIONS}")
    if not (np.all(np.isfinite(backbone)) and np.all(np.isfinite(proposals))):
        raise NonFiniteError(f"scene '{record.scene_id}': features contain NaN or infinity")
    if proposals.shape[0] == 0:
        report.warnings.append(EMPTY_SCENE_WARNING)
    return report


def validate_seeds(text: str) -> bool:
    """
    Validates a comma-separated list of non-negative integer seeds.
    """
    try:
        seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        return False
    return bool(seeds) and all(seed >= 0 for seed in seeds)


def validate_fractions(text: str) -> bool:
    try:
        parts = [float(part) for part in text.split(",")]
    except ValueError:
        return False
    return len(parts) == 3 and all(p >= 0 for p in parts) and abs(sum(parts) - 1.0) < 1e-9
