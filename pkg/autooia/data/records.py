from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from autooia.const import ACTIONS, INTENT_PRIORITY, NUM_ACTIONS, NUM_EXPLANATIONS
from autooia.exceptions.exception import LabelError


def check_label(bits: Sequence[int], arity: int, what: str) -> np.ndarray:
    """
    Converts ``bits`` to an int8 vector of the given arity.

    Raises:
        LabelError: On a wrong arity or a value other than 0/1.
    """
    vector = np.asarray(bits)
    if vector.shape != (arity,):
        raise LabelError(f"{what} label needs {arity} flags, got shape {vector.shape}")
    if not np.all((vector == 0) | (vector == 1)):
        raise LabelError(f"{what} label must be binary, got {vector.tolist()}")
    return vector.astype(np.int8)


def action_label(bits: Sequence[int]) -> np.ndarray:
    return check_label(bits, NUM_ACTIONS, "action")


def explanation_label(bits: Sequence[int]) -> np.ndarray:
    return check_label(bits, NUM_EXPLANATIONS, "explanation")


def single_action_label(action: Sequence[int]) -> int:
    """
    Driver-intent index for the single-label variant: the first positive action in the
    priority order S, F, L, R; Stop when no action is possible.
    """
    action = action_label(action)
    for index in INTENT_PRIORITY:
        if action[index]:
            return index
    return ACTIONS.index("S")


@dataclass(frozen=True)
class SceneRecord:
    """
    One scene: frozen detector features and its labels.

    Attributes:
        scene_id (str): Unique identifier, also the feature file stem.
        backbone (np.ndarray): c_backbone×H_b×W_b feature map.
        proposals (np.ndarray): N×c_local×spatial×spatial proposal blocks (N may be 0).
        action (np.ndarray): 4 binary flags, order F, S, L, R.
        explanation (np.ndarray): 21 binary flags.
        archetypes (Tuple[int, ...]): Causal archetype ids a synthetic scene was generated from.
    """
    scene_id: str
    backbone: np.ndarray
    proposals: np.ndarray
    action: np.ndarray
    explanation: np.ndarray
    archetypes: Tuple[int, ...] = field(default=())

    @property
    def n_proposals(self) -> int:
        return int(self.proposals.shape[0])

    @property
    def intent(self) -> int:
        return single_action_label(self.action)
