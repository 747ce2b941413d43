import configparser
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from autooia.const import FileName, Split
from autooia.data.annotations import AnnotationRecord, load_annotations, write_annotations
from autooia.data.features import load_features, write_features
from autooia.data.records import SceneRecord
from autooia.data.synthetic import CausalRuleTable, SyntheticConfig
from autooia.exceptions.exception import ConfigError, DataError, EmptySplitError
from autooia.model.config import ModelConfig
from autooia.utils import annotation_path, feature_path, format_float
from autooia.validation import validate_record

logger = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.7, 0.1, 0.2)


def split_records(records: Sequence, fractions: Tuple[float, float, float] = DEFAULT_FRACTIONS) -> Dict[str, list]:
    """
    Cuts ``records`` in order into train/val/test. Train and val sizes are rounded, test takes
    the rest, so the splits are disjoint and cover the input.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must be three non-negative numbers summing to 1, got {fractions}")
    total = len(records)
    n_train = round(fractions[0] * total)
    n_val = min(round(fractions[1] * total), total - n_train)
    return {
        Split.TRAIN: list(records[:n_train]),
        Split.VAL: list(records[n_train:n_train + n_val]),
        Split.TEST: list(records[n_train + n_val:]),
    }


def write_split(data_dir: Path, split: str, scenes: Sequence[SceneRecord]) -> None:
    """Writes one feature file per scene plus the split's annotation file."""
    for scene in scenes:
        write_features(feature_path(data_dir, scene.scene_id), scene.backbone, scene.proposals)
    write_annotations(annotation_path(data_dir, split),
                      [AnnotationRecord(s.scene_id, s.action, s.explanation) for s in scenes])


def read_split(data_dir: Path, split: str, spatial: int = None) -> List[SceneRecord]:
    """Reads every scene of a split without validation."""
    path = annotation_path(data_dir, split)
    if not path.is_file():
        raise DataError(f"Annotation file not found: {path}")
    scenes = []
    for record in load_annotations(path):
        features = feature_path(data_dir, record.scene_id)
        if not features.is_file():
            raise DataError(f"Feature file not found for scene '{record.scene_id}': {features}")
        backbone, proposals = load_features(features, spatial=spatial)
        scenes.append(SceneRecord(record.scene_id, backbone, proposals, record.action, record.explanation))
    return scenes


def load_split(data_dir: Path, split: str, config: ModelConfig, allow_empty: bool = False) -> List[SceneRecord]:
    """
    Reads and validates a split; scenes without proposals are skipped with a warning.

    Raises:
        EmptySplitError: If no usable scene remains and ``allow_empty`` is False.
        DimensionError: If a scene does not match ``config``.
    """
    kept = []
    for scene in read_split(data_dir, split, spatial=config.spatial):
        report = validate_record(scene, config)
        for warning in report.warnings:
            logger.warning("%s: %s", scene.scene_id, warning)
        if report.usable:
            kept.append(scene)
    if not kept and not allow_empty:
        raise EmptySplitError(f"split '{split}' in {data_dir} has no usable scenes")
    logger.debug("Loaded %d scene(s) from %s/%s", len(kept), data_dir, split)
    return kept


def write_manifest(data_dir: Path, synthetic: SyntheticConfig, rules: CausalRuleTable,
                   sizes: Dict[str, int], fractions: Tuple[float, float, float]) -> Path:
    manifest = configparser.ConfigParser()
    manifest["dataset"] = {
        "scenes": str(synthetic.scenes),
        "seed": str(synthetic.seed),
        "profile": synthetic.profile,
        "noise": format_float(synthetic.noise),
        "causal_range": f"{synthetic.causal_min},{synthetic.causal_max}",
        "distractor_range": f"{synthetic.distractor_min},{synthetic.distractor_max}",
        "backbone_size": ",".join(str(side) for side in synthetic.backbone_size()),
        "fractions": ",".join(format_float(f) for f in fractions),
        **{f"{split}_scenes": str(count) for split, count in sizes.items()},
    }
    manifest["rules"] = {"hash": rules.hash()}
    for index, rule in enumerate(rules.archetypes):
        manifest["rules"][f"archetype_{index:02d}"] = rule.describe()
    path = Path(data_dir) / FileName.MANIFEST
    with open(path, "w", encoding="utf-8") as handle:
        manifest.write(handle)
    return path


def read_manifest(data_dir: Path) -> configparser.ConfigParser:
    path = Path(data_dir) / FileName.MANIFEST
    manifest = configparser.ConfigParser()
    if path.is_file():
        manifest.read(path)
    return manifest


def dataset_profile(data_dir: Path, default: str = "desk") -> str:
    """Channel profile recorded in the manifest, or ``default`` for hand-made datasets."""
    return read_manifest(data_dir).get("dataset", "profile", fallback=default)
