"""
The object-induced action network and its ablation variants.

The global branch turns the backbone map into scene context ``t_g``; every proposal is
concatenated with ``t_g`` into an object-scene tensor; a selector scores the objects and the
``k`` highest-scoring ones, weighted by their score, feed a fully connected head that emits
4 action and 21 explanation logits.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Type

import numpy as np

from autooia.autograd.tape import Tape
from autooia.autograd.tensor import Tensor
from autooia.const import Ablation, NUM_ACTIONS, NUM_OUTPUTS
from autooia.data.records import SceneRecord
from autooia.exceptions.exception import DimensionError, EmptySceneError
from autooia.model.config import ModelConfig
from autooia.model.params import GlobalModuleParams, HeadParams, ModelParams, SelectorParams
from autooia.utils import digest

logger = logging.getLogger(__name__)


@dataclass
class ForwardOutput:
    """
    Attributes:
        action_logits (Tensor): 4 logits, order F, S, L, R.
        explanation_logits (Tensor): 21 logits in label-table order.
        selector_scores (Tensor): Probability over the N proposals.
        selected_indices (Tuple[int, ...]): Proposal indices in slot order (descending score).
        global_map (Tensor): The c_global×spatial×spatial scene context.
        action_distribution (Optional[Tensor]): Softmax over actions, single-action mode only.
    """
    action_logits: Tensor
    explanation_logits: Tensor
    selector_scores: Tensor
    selected_indices: Tuple[int, ...]
    global_map: Tensor
    action_distribution: Optional[Tensor] = None


def global_module_forward(tape: Tape, backbone: Tensor, params: GlobalModuleParams, spatial: int) -> Tensor:
    """conv → ReLU → conv → ReLU → adaptive average pool to spatial×spatial."""
    if backbone.values.ndim != 3 or backbone.shape[1] < spatial or backbone.shape[2] < spatial:
        raise DimensionError(f"backbone map {backbone.shape} is smaller than the pooled size {spatial}×{spatial}")
    hidden = tape.relu(tape.conv2d(backbone, params.conv1_weight, params.conv1_bias, padding=1))
    hidden = tape.relu(tape.conv2d(hidden, params.conv2_weight, params.conv2_bias, padding=1))
    return tape.adaptive_avg_pool2d(hidden, spatial, spatial)


def build_object_scene_tensors(tape: Tape, proposals: Sequence[Tensor], t_g: Tensor) -> List[Tensor]:
    if not proposals:
        raise EmptySceneError("scene has no proposals")
    return [tape.concat_channels(proposal, t_g) for proposal in proposals]


def object_score(tape: Tape, block: Tensor, params: SelectorParams) -> Tensor:
    """Pre-softmax score of one object-scene tensor, as a length-1 vector."""
    hidden = tape.relu(tape.conv2d(block, params.conv1_weight, params.conv1_bias))
    hidden = tape.relu(tape.conv2d(hidden, params.conv2_weight, params.conv2_bias, padding=1))
    return tape.mean_spatial(tape.conv2d(hidden, params.conv3_weight, params.conv3_bias))


def selector_scores(tape: Tape, object_scene: Sequence[Tensor], params: SelectorParams) -> Tensor:
    # objects are scored one at a time so a score never depends on the object's position
    return tape.softmax(tape.concat([object_score(tape, block, params) for block in object_scene]))


def rank_objects(scores: np.ndarray, k: int) -> List[int]:
    """Indices of the k largest scores, descending; ties go to the lower index."""
    return sorted(range(len(scores)), key=lambda i: (-scores[i], i))[:k]


def _pad_slots(blocks: List[Tensor], k: int, like: Tensor) -> List[Tensor]:
    return blocks + [Tensor.zeros(like.shape, dtype=like.dtype) for _ in range(k - len(blocks))]


def select_top_k(tape: Tape, scores: Tensor, object_scene: Sequence[Tensor], k: int) -> Tuple[List[Tensor], Tuple[int, ...]]:
    """
    Picks the k best objects and multiplies each by its score so the selector receives gradient.
    With fewer than k objects the remaining slots are zero blocks.
    """
    if k < 1:
        raise DimensionError(f"k must be >= 1, got {k}")
    order = rank_objects(scores.values, k)
    blocks = [tape.scale_by(object_scene[i], scores, i) for i in order]
    return _pad_slots(blocks, k, object_scene[0]), tuple(order)


def head_predict(tape: Tape, selected: Sequence[Tensor], params: HeadParams, k: int) -> Tuple[Tensor, Tensor]:
    if len(selected) != k:
        raise DimensionError(f"head expects exactly {k} blocks, got {len(selected)}")
    features = tape.concat([tape.mean_spatial(block) for block in selected])
    if features.shape[0] != params.fc1_weight.shape[1]:
        raise DimensionError(f"head input has {features.shape[0]} features, fc1 expects {params.fc1_weight.shape[1]}")
    hidden = tape.relu(tape.linear(features, params.fc1_weight, params.fc1_bias))
    hidden = tape.relu(tape.linear(hidden, params.fc2_weight, params.fc2_bias))
    logits = tape.linear(hidden, params.fc_out_weight, params.fc_out_bias)
    return tape.narrow(logits, 0, 0, NUM_ACTIONS), tape.narrow(logits, 0, NUM_ACTIONS, NUM_OUTPUTS)


@dataclass
class ObjectInducedNet:
    """
    Full model: global context, score-weighted top-k object selection and the shared head.

    Subclasses override one stage each to implement the ablations.
    """
    params: ModelParams

    @property
    def config(self) -> ModelConfig:
        return self.params.config

    def scene_tensors(self, scene: SceneRecord) -> Tuple[Tensor, List[Tensor]]:
        if scene.n_proposals == 0:
            raise EmptySceneError(f"scene '{scene.scene_id}' has no proposals")
        backbone = Tensor(scene.backbone)
        return backbone, [Tensor(block) for block in scene.proposals]

    def global_features(self, tape: Tape, backbone: Tensor) -> Tensor:
        return global_module_forward(tape, backbone, self.params.global_module, self.config.spatial)

    def score(self, tape: Tape, object_scene: List[Tensor], proposals: List[Tensor]) -> Tensor:
        return selector_scores(tape, object_scene, self.params.selector)

    def select(self, tape: Tape, scores: Tensor, object_scene: List[Tensor], proposals: List[Tensor],
               t_g: Tensor, scene: SceneRecord) -> Tuple[List[Tensor], Tuple[int, ...]]:
        return select_top_k(tape, scores, object_scene, self.config.k)

    def forward(self, scene: SceneRecord, tape: Optional[Tape] = None) -> ForwardOutput:
        tape = tape if tape is not None else Tape()
        backbone, proposals = self.scene_tensors(scene)
        t_g = self.global_features(tape, backbone)
        object_scene = build_object_scene_tensors(tape, proposals, t_g)
        scores = self.score(tape, object_scene, proposals)
        selected, indices = self.select(tape, scores, object_scene, proposals, t_g, scene)
        actions, explanations = head_predict(tape, selected, self.params.head, self.config.k)
        return ForwardOutput(actions, explanations, scores, indices, t_g)


class LocalOnlyNet(ObjectInducedNet):
    """Ignores global features: t_g is replaced by zeros everywhere."""

    def global_features(self, tape: Tape, backbone: Tensor) -> Tensor:
        spatial = self.config.spatial
        return Tensor.zeros((self.config.c_global, spatial, spatial), dtype=self.config.dtype)


class _UniformScores:
    def score(self, tape: Tape, object_scene: List[Tensor], proposals: List[Tensor]) -> Tensor:
        n = len(object_scene)
        return Tensor(np.full(n, 1.0 / n, dtype=self.config.dtype))


class GlobalOnlyNet(_UniformScores, ObjectInducedNet):
    """Ignores local features: the head consumes k copies of t_g with zeroed local channels."""

    def select(self, tape, scores, object_scene, proposals, t_g, scene):
        spatial = self.config.spatial
        local = Tensor.zeros((self.config.c_local, spatial, spatial), dtype=self.config.dtype)
        block = tape.concat_channels(local, t_g)
        return [block] * self.config.k, ()


class RandomSelectorNet(_UniformScores, ObjectInducedNet):
    """Picks k random objects per scene; the draw is fixed by (config.seed, scene_id)."""

    def select(self, tape, scores, object_scene, proposals, t_g, scene):
        scene_key = int(digest(scene.scene_id.encode("utf-8"))[:8], 16)
        rng = np.random.default_rng([self.config.seed, scene_key])
        n = len(object_scene)
        order = [int(i) for i in rng.permutation(n)[:self.config.k]]
        blocks = [tape.scale_by(object_scene[i], scores, i) for i in order]
        return _pad_slots(blocks, self.config.k, object_scene[0]), tuple(order)


class LocalSelectorNet(ObjectInducedNet):
    """The selector sees only local features; the head still receives full object-scene tensors."""

    def score(self, tape: Tape, object_scene: List[Tensor], proposals: List[Tensor]) -> Tensor:
        spatial = self.config.spatial
        no_context = Tensor.zeros((self.config.c_global, spatial, spatial), dtype=self.config.dtype)
        local_blocks = build_object_scene_tensors(tape, proposals, no_context)
        return selector_scores(tape, local_blocks, self.params.selector)


class SingleActionNet(ObjectInducedNet):
    """Same trunk; a softmax over the 4 action logits commits to exactly one action."""

    def forward(self, scene: SceneRecord, tape: Optional[Tape] = None) -> ForwardOutput:
        tape = tape if tape is not None else Tape()
        output = super().forward(scene, tape)
        output.action_distribution = tape.softmax(output.action_logits)
        return output


NET_CLASSES: Dict[str, Type[ObjectInducedNet]] = {
    Ablation.FULL: ObjectInducedNet,
    Ablation.LOCAL_ONLY: LocalOnlyNet,
    Ablation.GLOBAL_ONLY: GlobalOnlyNet,
    Ablation.RANDOM_SELECTOR: RandomSelectorNet,
    Ablation.LOCAL_SELECTOR: LocalSelectorNet,
    Ablation.SINGLE_ACTION: SingleActionNet,
}


def build_network(params: ModelParams) -> ObjectInducedNet:
    return NET_CLASSES[params.config.ablation](params)


def model_forward(scene: SceneRecord, params: ModelParams, tape: Optional[Tape] = None) -> ForwardOutput:
    return build_network(params).forward(scene, tape)


def single_action_forward(scene: SceneRecord, params: ModelParams, tape: Optional[Tape] = None) -> ForwardOutput:
    return SingleActionNet(params).forward(scene, tape)
