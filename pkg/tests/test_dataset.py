from dataclasses import replace

import numpy as np
import pytest

from autooia.const import FileName, Split
from autooia.data.dataset import (
    dataset_profile, load_split, read_manifest, read_split, split_records, write_split,
)
from autooia.data.synthetic import CausalRuleTable
from autooia.exceptions.exception import (
    ConfigError, DataError, DimensionError, EmptySplitError, LabelError, NonFiniteError,
)
from autooia.model.config import ModelConfig
from autooia.validation import EMPTY_SCENE_WARNING, validate_fractions, validate_record, validate_seeds

DESK = ModelConfig.from_profile("desk")


class TestSplits:
    def test_default_fractions(self):
        splits = split_records(list(range(100)))
        assert [len(splits[s]) for s in Split.choices()] == [70, 10, 20]

    def test_disjoint_and_covering(self):
        records = list(range(37))
        splits = split_records(records, (0.5, 0.25, 0.25))
        joined = splits[Split.TRAIN] + splits[Split.VAL] + splits[Split.TEST]
        assert joined == records

    def test_tiny_inputs(self):
        splits = split_records([1], (0.0, 1.0, 0.0))
        assert splits[Split.VAL] == [1] and not splits[Split.TRAIN] and not splits[Split.TEST]

    @pytest.mark.parametrize("fractions", [(0.5, 0.5), (0.6, 0.6, -0.2), (0.5, 0.2, 0.2)])
    def test_invalid_fractions(self, fractions):
        with pytest.raises(ConfigError):
            split_records([1, 2, 3], fractions)


class TestOnDisk:
    def test_layout(self, dataset_dir):
        assert (dataset_dir / FileName.MANIFEST).is_file()
        assert (dataset_dir / f"train{FileName.ANNOTATION_SUFFIX}").is_file()
        assert len(list((dataset_dir / FileName.FEATURES_DIR).iterdir())) == 20

    def test_read_split_round_trip(self, dataset_dir, tiny_scenes):
        loaded = read_split(dataset_dir, Split.TRAIN)
        assert [s.scene_id for s in loaded] == [s.scene_id for s in tiny_scenes[:14]]
        assert loaded[0].backbone.tobytes() == tiny_scenes[0].backbone.tobytes()
        np.testing.assert_array_equal(loaded[0].action, tiny_scenes[0].action)

    def test_load_split_validates(self, dataset_dir):
        assert len(load_split(dataset_dir, Split.TEST, DESK)) == 4

    def test_load_split_wrong_profile(self, dataset_dir):
        with pytest.raises(DimensionError):
            load_split(dataset_dir, Split.TEST, ModelConfig.from_profile("desk", c_local=8))

    def test_missing_annotation_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            read_split(tmp_path, Split.TRAIN)

    def test_missing_feature_file(self, dataset_dir, tiny_scenes):
        (dataset_dir / FileName.FEATURES_DIR / f"{tiny_scenes[0].scene_id}{FileName.FEATURE_SUFFIX}").unlink()
        with pytest.raises(DataError, match=tiny_scenes[0].scene_id):
            read_split(dataset_dir, Split.TRAIN)

    def test_empty_scenes_are_skipped(self, tmp_path, tiny_scenes, caplog):
        empty = replace(tiny_scenes[0], scene_id="empty", proposals=np.zeros((0, 16, 3, 3), dtype=np.float32))
        write_split(tmp_path, Split.TRAIN, [empty, tiny_scenes[1]])
        with caplog.at_level("WARNING"):
            kept = load_split(tmp_path, Split.TRAIN, DESK)
        assert [s.scene_id for s in kept] == [tiny_scenes[1].scene_id]
        assert EMPTY_SCENE_WARNING in caplog.text

    def test_only_empty_scenes(self, tmp_path, tiny_scenes):
        empty = replace(tiny_scenes[0], proposals=np.zeros((0, 16, 3, 3), dtype=np.float32))
        write_split(tmp_path, Split.VAL, [empty])
        with pytest.raises(EmptySplitError):
            load_split(tmp_path, Split.VAL, DESK)
        assert load_split(tmp_path, Split.VAL, DESK, allow_empty=True) == []

    def test_manifest(self, dataset_dir):
        manifest = read_manifest(dataset_dir)
        assert manifest["dataset"]["seed"] == "3"
        assert manifest["dataset"]["train_scenes"] == "14"
        assert manifest["rules"]["hash"] == CausalRuleTable.default().hash()
        assert dataset_profile(dataset_dir) == "desk"

    def test_profile_without_manifest(self, tmp_path):
        assert dataset_profile(tmp_path, default="paper") == "paper"


class TestValidateRecord:
    def test_ok(self, tiny_scenes):
        assert validate_record(tiny_scenes[0], DESK).ok

    def test_empty_scene_warning(self, tiny_scenes):
        report = validate_record(replace(tiny_scenes[0], proposals=np.zeros((0, 16, 3, 3))), DESK)
        assert report.warnings == [EMPTY_SCENE_WARNING]
        assert not report.usable

    def test_c_local_mismatch_names_values(self, tiny_scenes):
        with pytest.raises(DimensionError, match="expected 16, actual 8"):
            validate_record(replace(tiny_scenes[0], proposals=np.zeros((2, 8, 3, 3))), DESK)

    def test_backbone_channels(self, tiny_scenes):
        with pytest.raises(DimensionError, match="expected 16"):
            validate_record(replace(tiny_scenes[0], backbone=np.zeros((4, 6, 10))), DESK)

    def test_proposal_side(self, tiny_scenes):
        with pytest.raises(DimensionError, match="side"):
            validate_record(replace(tiny_scenes[0], proposals=np.zeros((1, 16, 4, 4))), DESK)

    def test_label_arity(self, tiny_scenes):
        with pytest.raises(LabelError):
            validate_record(replace(tiny_scenes[0], explanation=np.zeros(20)), DESK)

    def test_non_finite(self, tiny_scenes):
        backbone = tiny_scenes[0].backbone.copy()
        backbone[0, 0, 0] = np.inf
        with pytest.raises(NonFiniteError):
            validate_record(replace(tiny_scenes[0], backbone=backbone), DESK)


@pytest.mark.parametrize("text, ok", [("0", True), ("1,2,3", True), ("", False), ("a", False), ("1,-2", False)])
def test_validate_seeds(text, ok):
    assert validate_seeds(text) is ok


@pytest.mark.parametrize("text, ok", [("0.7,0.1,0.2", True), ("0.5,0.5", False), ("x,y,z", False)])
def test_validate_fractions(text, ok):
    assert validate_fractions(text) is ok
