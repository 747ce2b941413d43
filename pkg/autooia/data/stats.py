from dataclasses import dataclass
from typing import Dict, Iterable

import numpy as np

from autooia.const import ACTION_NAMES, EXPLANATIONS, NUM_ACTIONS, NUM_EXPLANATIONS


@dataclass
class LabelCounts:
    scenes: int
    actions: np.ndarray
    explanations: np.ndarray

    def action_table(self) -> Dict[str, int]:
        return {name: int(count) for name, count in zip(ACTION_NAMES, self.actions)}

    def explanation_table(self) -> Dict[str, int]:
        return {name: int(count) for name, count in zip(EXPLANATIONS, self.explanations)}


def dataset_stats(annotations: Iterable) -> LabelCounts:
    """
    Positive-flag counts per action and per explanation. Accepts anything with ``action``
    and ``explanation`` attributes (annotation records or scene records).
    """
    actions = np.zeros(NUM_ACTIONS, dtype=np.int64)
    explanations = np.zeros(NUM_EXPLANATIONS, dtype=np.int64)
    scenes = 0
    for record in annotations:
        actions += np.asarray(record.action, dtype=np.int64)
        explanations += np.asarray(record.explanation, dtype=np.int64)
        scenes += 1
    return LabelCounts(scenes, actions, explanations)
