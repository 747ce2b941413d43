import math
import os
from dataclasses import replace

import numpy as np
import pytest

from autooia.autograd import Tape, Tensor
from autooia.const import Ablation, NUM_ACTIONS
from autooia.data.synthetic import SyntheticConfig, generate_synthetic
from autooia.exceptions.exception import EmptySplitError, NumericAbortError
from autooia.model.params import ModelParams
from autooia.model.network import build_network
from autooia.trainer import trainer as trainer_module
from autooia.trainer.optim import lr_at_epoch
from autooia.trainer.trainer import (EpochLog, Trainer, TrainRunConfig, apply_label_prior, evaluate, scene_loss,
                                      train)

FAST = dict(k=2, batch_size=4, epochs=3, base_lr=1e-2, decay_every=2)


def mean_loss(params: ModelParams, scenes) -> float:
    net = build_network(params)
    return float(np.mean([scene_loss(Tape(), net.forward(s, Tape()), s, params.config).item() for s in scenes]))


def with_labels(scenes, action, explanation):
    return [replace(s, action=np.asarray(action, dtype=np.int8), explanation=np.asarray(explanation, dtype=np.int8))
            for s in scenes]


def saturated(config, bias: float) -> ModelParams:
    params = ModelParams.initialize(config)
    params.head.fc_out_weight.values[...] = 0.0
    params.head.fc_out_bias.values[...] = bias
    return params


class TestTrainRunConfig:
    def test_model_config_carries_run_fields(self):
        config = TrainRunConfig(seed=4, lambda_=math.inf, k=3, ablation=Ablation.LOCAL_ONLY)
        model = config.model_config()
        assert (model.seed, model.lambda_, model.k, model.ablation, model.profile) == (4, math.inf, 3, "local-only", "desk")

    def test_schedule_defaults(self):
        schedule = TrainRunConfig().schedule()
        assert (schedule.base_lr, schedule.total_epochs, schedule.decay_every, schedule.decay_factor) == \
            (1e-3, 50, 10, 10.0)


class TestTrain:
    def test_deterministic(self, tiny_scenes):
        config = TrainRunConfig(seed=5, **FAST)
        a = train(tiny_scenes[:10], config, tiny_scenes[10:14])
        b = train(tiny_scenes[:10], config, tiny_scenes[10:14])
        assert [e.row() for e in a.log] == [e.row() for e in b.log]
        snap_a, snap_b = a.params.snapshot(), b.params.snapshot()
        assert all(np.array_equal(snap_a[name], snap_b[name]) for name in snap_a)

    def test_seed_changes_parameters(self, tiny_scenes):
        a = train(tiny_scenes[:8], TrainRunConfig(seed=0, **FAST)).params.snapshot()
        b = train(tiny_scenes[:8], TrainRunConfig(seed=1, **FAST)).params.snapshot()
        assert not np.array_equal(a["head.fc1_weight"], b["head.fc1_weight"])

    def test_lr_follows_schedule(self, tiny_scenes):
        config = TrainRunConfig(**{**FAST, "epochs": 5})
        result = train(tiny_scenes[:4], config)
        assert [e.lr for e in result.log] == [lr_at_epoch(e, config.schedule()) for e in range(5)]

    def test_inputs_are_frozen(self, tiny_scenes):
        scenes = tiny_scenes[:6]
        before = [(s.backbone.copy(), s.proposals.copy()) for s in scenes]
        train(scenes, TrainRunConfig(**FAST))
        for scene, (backbone, proposals) in zip(scenes, before):
            np.testing.assert_array_equal(scene.backbone, backbone)
            np.testing.assert_array_equal(scene.proposals, proposals)

    def test_loss_is_finite_every_epoch(self, tiny_scenes):
        result = train(tiny_scenes[:8], TrainRunConfig(**FAST))
        assert all(math.isfinite(entry.train_loss) for entry in result.log)

    def test_overfits_a_small_set(self, tiny_scenes):
        scenes = tiny_scenes[:8]
        config = TrainRunConfig(k=2, batch_size=4, epochs=80, base_lr=1e-2, decay_every=1000, weight_decay=0.0)
        initial = ModelParams.initialize(config.model_config(), seed=config.seed)
        result = train(scenes, config)
        assert mean_loss(result.params, scenes) < 0.5 * mean_loss(initial, scenes)

    def test_explanations_only_leaves_action_rows(self, tiny_scenes):
        config = TrainRunConfig(lambda_=math.inf, weight_decay=0.0, **FAST)
        initial = ModelParams.initialize(config.model_config(), seed=config.seed)
        trained = train(tiny_scenes[:8], config).params
        np.testing.assert_array_equal(trained.head.fc_out_weight.values[:4], initial.head.fc_out_weight.values[:4])
        np.testing.assert_array_equal(trained.head.fc_out_bias.values[:4], initial.head.fc_out_bias.values[:4])
        assert not np.array_equal(trained.head.fc_out_weight.values[4:], initial.head.fc_out_weight.values[4:])

    def test_best_checkpoint_is_tracked(self, tiny_scenes):
        result = train(tiny_scenes[:8], TrainRunConfig(**FAST), tiny_scenes[8:12])
        assert 0 <= result.best_epoch < 3
        best = result.best_params().snapshot()
        assert all(np.array_equal(best[name], result.best_values[name]) for name in best)
        assert result.log[result.best_epoch].metrics.selection_score() == \
            max(entry.metrics.selection_score() for entry in result.log)

    def test_without_validation_split(self, tiny_scenes):
        result = train(tiny_scenes[:4], TrainRunConfig(**FAST))
        assert all(entry.metrics is None for entry in result.log)
        assert result.log[0].row()["action_mF1"] == "-"

    def test_on_epoch_callback(self, tiny_scenes):
        seen = []
        Trainer(TrainRunConfig(**FAST), on_epoch=seen.append).train(tiny_scenes[:4])
        assert [entry.epoch for entry in seen] == [0, 1, 2]

    def test_single_action_trains(self, tiny_scenes):
        result = train(tiny_scenes[:6], TrainRunConfig(ablation=Ablation.SINGLE_ACTION, **FAST), tiny_scenes[6:9])
        assert all(math.isfinite(entry.train_loss) for entry in result.log)

    def test_empty_training_split(self):
        with pytest.raises(EmptySplitError):
            train([], TrainRunConfig(**FAST))

    def test_non_finite_loss_aborts(self, tiny_scenes, monkeypatch):
        monkeypatch.setattr(trainer_module, "scene_loss", lambda *args: Tensor(np.array(np.nan)))
        with pytest.raises(NumericAbortError) as info:
            train(tiny_scenes[:4], TrainRunConfig(**FAST))
        assert info.value.epoch == 0


class TestEvaluate:
    def test_all_positive_predictor_on_all_positive_labels(self, tiny_scenes, desk_config):
        scenes = with_labels(tiny_scenes[:5], [1] * 4, [1] * 21)
        metrics = evaluate(scenes, saturated(desk_config, 30.0)).metrics
        assert metrics.action_f1 == (1.0, 1.0, 1.0, 1.0)
        assert metrics.action_f1_all == metrics.explanation_mf1 == metrics.explanation_f1_all == 1.0

    def test_all_negative_predictor(self, tiny_scenes, desk_config):
        scenes = with_labels(tiny_scenes[:5], [1] * 4, [1] * 21)
        metrics = evaluate(scenes, saturated(desk_config, -30.0)).metrics
        assert metrics.action_mf1 == metrics.action_f1_all == metrics.explanation_f1_all == 0.0

    def test_workers_do_not_change_metrics(self, tiny_scenes, desk_params):
        one = evaluate(tiny_scenes, desk_params, workers=1)
        many = evaluate(tiny_scenes, desk_params, workers=3)
        assert one.metrics == many.metrics
        assert [p.scene_id for p in one.predictions] == [p.scene_id for p in many.predictions]

    def test_zero_lambda_has_no_explanation_metrics(self, tiny_scenes, desk_config):
        metrics = evaluate(tiny_scenes[:4], ModelParams.initialize(desk_config.with_changes(lambda_=0.0))).metrics
        assert metrics.explanation_mf1 is None
        assert metrics.action_mf1 is not None

    def test_infinite_lambda_has_no_action_metrics(self, tiny_scenes, desk_config):
        metrics = evaluate(tiny_scenes[:4], ModelParams.initialize(desk_config.with_changes(lambda_=math.inf))).metrics
        assert metrics.action_f1 is None
        assert metrics.explanation_f1_all is not None

    def test_single_action_predicts_exactly_one(self, tiny_scenes, desk_config):
        params = ModelParams.initialize(desk_config.with_changes(ablation=Ablation.SINGLE_ACTION))
        evaluation = evaluate(tiny_scenes, params)
        assert all(p.action.sum() == 1 for p in evaluation.predictions)

    def test_predictions_carry_selection(self, tiny_scenes, desk_params):
        prediction = evaluate(tiny_scenes[:1], desk_params).predictions[0]
        assert len(prediction.selected_indices) == min(2, tiny_scenes[0].n_proposals)
        assert prediction.global_map.shape == (8, 3, 3)
        assert abs(prediction.scores.sum() - 1.0) < 1e-9

    def test_empty_split(self, desk_params):
        with pytest.raises(EmptySplitError):
            evaluate([], desk_params)


def test_epoch_log_row_formats():
    row = EpochLog(epoch=3, lr=1e-4, train_loss=1.25).row()
    assert row == {"epoch": "3", "lr": "0.0001", "train_loss": "1.250000", "action_mF1": "-",
                   "action_F1all": "-", "expl_mF1": "-", "expl_F1all": "-"}


def logit(p: float) -> float:
    return math.log(p / (1.0 - p))


class TestLabelPrior:
    def test_binary_rates(self, tiny_scenes, desk_config):
        scenes = with_labels(tiny_scenes[:3], [0, 1, 0, 0], [0] * 21)
        scenes += with_labels(tiny_scenes[3:4], [0, 1, 1, 0], [1] + [0] * 20)
        params = ModelParams.initialize(desk_config)
        apply_label_prior(params, scenes)
        np.testing.assert_allclose(params.head.fc_out_bias.values[:NUM_ACTIONS],
                                   [logit(0.01), logit(0.99), logit(0.25), logit(0.01)])
        assert params.head.fc_out_bias.values[NUM_ACTIONS] == pytest.approx(logit(0.25))
        np.testing.assert_allclose(params.head.fc_out_bias.values[NUM_ACTIONS + 1:], logit(0.01))

    def test_untrained_rows_keep_values(self, tiny_scenes, desk_config):
        for lam, kept in ((0.0, slice(NUM_ACTIONS, None)), (math.inf, slice(0, NUM_ACTIONS))):
            params = ModelParams.initialize(desk_config.with_changes(lambda_=lam))
            apply_label_prior(params, tiny_scenes)
            assert not params.head.fc_out_bias.values[kept].any()

    def test_single_action_log_frequencies(self, tiny_scenes, desk_config):
        scenes = with_labels(tiny_scenes[:3], [0, 1, 0, 0], [0] * 21)
        scenes += with_labels(tiny_scenes[3:4], [1, 0, 0, 0], [0] * 21)
        params = ModelParams.initialize(desk_config.with_changes(ablation=Ablation.SINGLE_ACTION))
        apply_label_prior(params, scenes)
        bias = params.head.fc_out_bias.values[:NUM_ACTIONS]
        assert bias.sum() == pytest.approx(0.0)
        assert bias[1] - bias[0] == pytest.approx(math.log(3.0))
        assert bias[2] == bias[3] < bias[0]

    def test_prior_lowers_starting_loss(self, tiny_scenes, desk_config):
        plain = ModelParams.initialize(desk_config, seed=2)
        primed = ModelParams.initialize(desk_config, seed=2)
        apply_label_prior(primed, tiny_scenes)
        assert mean_loss(primed, tiny_scenes) < mean_loss(plain, tiny_scenes)

    def test_disabled_starts_from_zero_bias(self, tiny_scenes):
        config = TrainRunConfig(label_prior_bias=False, lambda_=0.0, **{**FAST, "epochs": 1, "base_lr": 1e-12})
        bias = train(tiny_scenes[:4], config).params.head.fc_out_bias.values
        np.testing.assert_allclose(bias[:NUM_ACTIONS], 0.0, atol=1e-9)


@pytest.mark.slow
@pytest.mark.skipif(not os.environ.get("OIA_SLOW_TESTS"), reason="set OIA_SLOW_TESTS=1 to run")
def test_explanations_help_action_prediction():
    scenes = generate_synthetic(SyntheticConfig(scenes=500, seed=11))
    train_set, val_set = scenes[:400], scenes[400:]

    def action_f1_all(lam: float) -> float:
        scores = []
        for seed in (0, 1, 2):
            config = TrainRunConfig(seed=seed, lambda_=lam, epochs=12, decay_every=5)
            result = train(train_set, config, val_set)
            scores.append(result.log[result.best_epoch].metrics.action_f1_all)
        return float(np.mean(scores))

    assert action_f1_all(1.0) > action_f1_all(0.0)
