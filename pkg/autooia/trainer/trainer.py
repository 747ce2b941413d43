import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from autooia.autograd.tape import Tape
from autooia.autograd.tensor import Tensor
from autooia.const import ABSENT, Ablation, NUM_ACTIONS, TRAIN_LOG_COLUMNS
from autooia.data.records import SceneRecord
from autooia.exceptions.exception import ConfigError, EmptySplitError, NumericAbortError
from autooia.metrics import MetricsBundle, argmax_predict, threshold_predict
from autooia.model.config import ModelConfig
from autooia.model.network import ForwardOutput, ObjectInducedNet, build_network
from autooia.model.params import ModelParams
from autooia.objectives import EXPLANATIONS_ONLY, multitask_loss, single_action_loss
from autooia.trainer.optim import AdamState, Schedule, adam_step, lr_at_epoch
from autooia.utils import format_float

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainRunConfig:
    """
    One training run. Given fixed data, ``seed`` determines parameters, shuffling and the
    random selector.

    Attributes:
        seed (int): Run seed.
        lambda_ (float): Explanation loss weight, float('inf') for explanations only.
        k (int): Number of selected objects.
        ablation (str): Model variant.
        batch_size (int): Scenes whose gradients are averaged per Adam step.
        epochs (int): Number of epochs.
        base_lr (float), decay_every (int), decay_factor (float): Step-decay schedule.
        weight_decay (float): L2 coefficient.
        decoupled_weight_decay (bool): Decoupled instead of coupled weight decay.
        label_prior_bias (bool): Start the trained output biases at the label rates of the training split.
        profile (str): Channel profile of the data.
        dtype (str): Parameter precision.
    """
    seed: int = 0
    lambda_: float = 1.0
    k: int = 10
    ablation: str = Ablation.FULL
    batch_size: int = 16
    epochs: int = 50
    base_lr: float = 1e-3
    decay_every: int = 10
    decay_factor: float = 10.0
    weight_decay: float = 1e-4
    decoupled_weight_decay: bool = False
    label_prior_bias: bool = True
    profile: str = "desk"
    dtype: str = "float64"

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigError(f"batch_size and epochs must be >= 1, got {self.batch_size}, {self.epochs}")

    def model_config(self) -> ModelConfig:
        return ModelConfig.from_profile(self.profile, k=self.k, lambda_=self.lambda_, ablation=self.ablation,
                                        dtype=self.dtype, seed=self.seed)

    def schedule(self) -> Schedule:
        return Schedule(self.base_lr, self.epochs, self.decay_every, self.decay_factor)


@dataclass
class EpochLog:
    epoch: int
    lr: float
    train_loss: float
    metrics: Optional[MetricsBundle] = None

    def row(self) -> Dict[str, str]:
        cells = self.metrics.cells() if self.metrics is not None else {}
        return {
            "epoch": str(self.epoch),
            "lr": f"{self.lr:.6g}",
            "train_loss": f"{self.train_loss:.6f}",
            **{column: cells.get(column, ABSENT) for column in TRAIN_LOG_COLUMNS[3:]},
        }


@dataclass
class ScenePrediction:
    scene_id: str
    action: np.ndarray
    explanation: np.ndarray
    selected_indices: tuple
    scores: np.ndarray
    global_map: np.ndarray


@dataclass
class Evaluation:
    metrics: MetricsBundle
    predictions: List[ScenePrediction]


def scene_loss(tape: Tape, output: ForwardOutput, scene: SceneRecord, config: ModelConfig) -> Tensor:
    if config.single_action:
        return single_action_loss(tape, output.action_logits, output.explanation_logits,
                                  scene.intent, scene.explanation, config.lambda_)
    return multitask_loss(tape, output.action_logits, output.explanation_logits,
                          scene.action, scene.explanation, config.lambda_)


PRIOR_RATE_FLOOR = 0.01


def _log_odds(rates: np.ndarray) -> np.ndarray:
    rates = np.clip(rates, PRIOR_RATE_FLOOR, 1.0 - PRIOR_RATE_FLOOR)
    return np.log(rates) - np.log1p(-rates)


def apply_label_prior(params: ModelParams, scenes: Sequence[SceneRecord]) -> None:
    """
    Sets the output biases of the trained heads so that a network ignoring its input predicts
    the label rates of ``scenes``: log-odds for binary outputs, centred log frequencies of the
    driver intents for the single-action head. Rows of an untrained head keep their values.
    """
    config = params.config
    bias = params.head.fc_out_bias.values
    if config.lambda_ != EXPLANATIONS_ONLY:
        if config.single_action:
            counts = np.bincount([scene.intent for scene in scenes], minlength=NUM_ACTIONS)
            log_rates = np.log(np.clip(counts / len(scenes), PRIOR_RATE_FLOOR, 1.0))
            bias[:NUM_ACTIONS] = log_rates - log_rates.mean()
        else:
            bias[:NUM_ACTIONS] = _log_odds(np.mean([scene.action for scene in scenes], axis=0))
    if config.lambda_ != 0:
        bias[NUM_ACTIONS:] = _log_odds(np.mean([scene.explanation for scene in scenes], axis=0))


def predict_scene(net: ObjectInducedNet, scene: SceneRecord) -> ScenePrediction:
    output = net.forward(scene, Tape(enabled=False))
    if output.action_distribution is not None:
        action = argmax_predict(output.action_distribution.values)
    else:
        action = threshold_predict(output.action_logits.values)
    return ScenePrediction(
        scene_id=scene.scene_id,
        action=action,
        explanation=threshold_predict(output.explanation_logits.values),
        selected_indices=output.selected_indices,
        scores=np.asarray(output.selector_scores.values, dtype=np.float64),
        global_map=np.asarray(output.global_map.values, dtype=np.float64),
    )


def evaluate(scenes: Sequence[SceneRecord], params: ModelParams, workers: int = 1) -> Evaluation:
    """
    Scores thresholded predictions (argmax in single-action mode, against one-hot intent labels).

    Scenes may be spread over ``workers`` threads; parameters are only read.

    Raises:
        EmptySplitError: If ``scenes`` is empty.
    """
    if not scenes:
        raise EmptySplitError("cannot evaluate an empty split")
    net = build_network(params)
    config = params.config
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            predictions = list(pool.map(lambda s: predict_scene(net, s), scenes))
    else:
        predictions = [predict_scene(net, scene) for scene in scenes]

    if config.single_action:
        truths = np.eye(NUM_ACTIONS, dtype=np.int8)[[scene.intent for scene in scenes]]
    else:
        truths = np.stack([scene.action for scene in scenes])
    metrics = MetricsBundle.from_predictions(
        np.stack([p.action for p in predictions]), truths,
        np.stack([p.explanation for p in predictions]), np.stack([s.explanation for s in scenes]),
        with_actions=config.lambda_ != math.inf,
        with_explanations=config.lambda_ != 0,
    )
    return Evaluation(metrics, predictions)


@dataclass
class TrainResult:
    params: ModelParams
    log: List[EpochLog]
    best_epoch: int
    best_values: Dict[str, np.ndarray]

    def best_params(self) -> ModelParams:
        best = ModelParams.initialize(self.params.config)
        best.load_values(self.best_values)
        return best


@dataclass
class Trainer:
    """
    Adam with weight decay and step-decay learning rate over per-scene forward passes.

    Scene features are never updated. Gradients of a batch are accumulated scene by scene and
    averaged before one optimizer step.
    """
    config: TrainRunConfig
    workers: int = 1
    on_epoch: Optional[Callable[[EpochLog], None]] = field(default=None, repr=False)

    def train(self, train_set: Sequence[SceneRecord], val_set: Sequence[SceneRecord] = ()) -> TrainResult:
        """
        Raises:
            EmptySplitError: If the training split is empty.
            NumericAbortError: On a non-finite loss.
        """
        if not train_set:
            raise EmptySplitError("training split is empty")
        config = self.config
        model_config = config.model_config()
        params = ModelParams.initialize(model_config, seed=config.seed)
        if config.label_prior_bias:
            apply_label_prior(params, train_set)
        named = params.named()
        net = build_network(params)
        state = AdamState.for_params(named, weight_decay=config.weight_decay,
                                     decoupled=config.decoupled_weight_decay)
        schedule = config.schedule()
        rng = np.random.default_rng([config.seed, 2])

        log: List[EpochLog] = []
        best_epoch, best_score, best_values = -1, -math.inf, params.snapshot()
        for epoch in range(config.epochs):
            lr = lr_at_epoch(epoch, schedule)
            order = rng.permutation(len(train_set))
            total = 0.0
            for start in range(0, len(order), config.batch_size):
                batch = order[start:start + config.batch_size]
                params.zero_grad()
                for index in batch:
                    total += self._accumulate(net, train_set[index], model_config, epoch)
                grads = {name: t.grad / len(batch) for name, t in named.items() if t.grad is not None}
                adam_step(named, grads, state, lr)

            metrics = evaluate(val_set, params, self.workers).metrics if val_set else None
            entry = EpochLog(epoch, lr, total / len(train_set), metrics)
            log.append(entry)
            score = metrics.selection_score() if metrics is not None else -entry.train_loss
            if score > best_score:
                best_epoch, best_score, best_values = epoch, score, params.snapshot()
            logger.info("epoch %d lr %s loss %.6f %s", epoch, format_float(lr), entry.train_loss,
                        " ".join(f"{k}={v}" for k, v in entry.row().items() if k not in ("epoch", "lr", "train_loss")))
            if self.on_epoch is not None:
                self.on_epoch(entry)
        return TrainResult(params, log, best_epoch, best_values)

    @staticmethod
    def _accumulate(net: ObjectInducedNet, scene: SceneRecord, model_config: ModelConfig, epoch: int) -> float:
        tape = Tape()
        output = net.forward(scene, tape)
        loss = scene_loss(tape, output, scene, model_config)
        value = loss.item()
        if not math.isfinite(value):
            raise NumericAbortError(f"non-finite loss {value} at epoch {epoch} on scene '{scene.scene_id}'",
                                    epoch=epoch, scene_id=scene.scene_id)
        tape.backward(loss)
        return value


def train(train_set: Sequence[SceneRecord], config: TrainRunConfig,
          val_set: Sequence[SceneRecord] = ()) -> TrainResult:
    return Trainer(config).train(train_set, val_set)
