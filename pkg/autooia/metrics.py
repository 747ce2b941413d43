"""
F1 metrics for multi-label predictions.

mF1 is the macro average of per-class F1; F1_all is the micro F1 over every (sample, class)
pair. F1 is 0 when a class has no positives in either predictions or truths.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from autooia.const import ABSENT, ACTIONS
from autooia.exceptions.exception import DimensionError, LabelError


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int

    @property
    def f1(self) -> float:
        denominator = 2 * self.tp + self.fp + self.fn
        return 0.0 if denominator == 0 else 2 * self.tp / denominator

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def _binary(array, what: str) -> np.ndarray:
    values = np.asarray(array)
    if not np.all((values == 0) | (values == 1)):
        raise LabelError(f"{what} must be binary")
    return values.astype(bool)


def _pair(predictions, truths, ndim: int) -> Tuple[np.ndarray, np.ndarray]:
    p, t = _binary(predictions, "predictions"), _binary(truths, "truths")
    if p.shape != t.shape or p.ndim != ndim or p.size == 0:
        raise DimensionError(f"predictions {p.shape} and truths {t.shape} must be equal, non-empty {ndim}-D arrays")
    return p, t


def confusion(predictions, truths) -> Confusion:
    p, t = np.asarray(predictions, dtype=bool), np.asarray(truths, dtype=bool)
    return Confusion(int(np.sum(p & t)), int(np.sum(p & ~t)), int(np.sum(~p & t)))


def f1_binary(predictions: Sequence[int], truths: Sequence[int]) -> float:
    """F1 = 2TP / (2TP + FP + FN), 0 when the denominator is 0."""
    return confusion(*_pair(predictions, truths, 1)).f1


def per_class_f1(predictions, truths) -> np.ndarray:
    p, t = _pair(predictions, truths, 2)
    return np.array([confusion(p[:, c], t[:, c]).f1 for c in range(p.shape[1])])


def macro_average(per_class: Sequence[float]) -> float:
    values = np.asarray(per_class, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise DimensionError(f"macro_average needs a non-empty vector, got shape {values.shape}")
    return float(np.mean(values))


def mf1(predictions, truths) -> float:
    """Macro average of per-class F1 computed down the sample axis."""
    return macro_average(per_class_f1(predictions, truths))


def f1_all(predictions, truths) -> float:
    """Micro F1 over the flattened S×C pairs."""
    p, t = _pair(predictions, truths, 2)
    return confusion(p.ravel(), t.ravel()).f1


def threshold_predict(logits) -> np.ndarray:
    """Flag is 1 iff logit > 0, i.e. sigmoid > 0.5."""
    return (np.asarray(logits) > 0).astype(np.int8)


def argmax_predict(scores) -> np.ndarray:
    """One-hot vector of the highest score; ties go to the lower index."""
    scores = np.asarray(scores)
    one_hot = np.zeros(scores.shape[-1], dtype=np.int8)
    one_hot[int(np.argmax(scores))] = 1
    return one_hot


@dataclass(frozen=True)
class MetricsBundle:
    """
    Attributes:
        action_f1 (Optional[Tuple[float, ...]]): Per-action F1 in F, S, L, R order.
        action_mf1, action_f1_all, explanation_mf1, explanation_f1_all (Optional[float]):
            None marks a task the run does not predict (λ = 0 or λ = inf).
    """
    action_f1: Optional[Tuple[float, ...]]
    action_mf1: Optional[float]
    action_f1_all: Optional[float]
    explanation_mf1: Optional[float]
    explanation_f1_all: Optional[float]

    @classmethod
    def from_predictions(cls, action_pred, action_true, expl_pred, expl_true,
                         with_actions: bool = True, with_explanations: bool = True) -> "MetricsBundle":
        actions = per_class_f1(action_pred, action_true) if with_actions else None
        return cls(
            action_f1=tuple(float(v) for v in actions) if actions is not None else None,
            action_mf1=macro_average(actions) if actions is not None else None,
            action_f1_all=f1_all(action_pred, action_true) if with_actions else None,
            explanation_mf1=mf1(expl_pred, expl_true) if with_explanations else None,
            explanation_f1_all=f1_all(expl_pred, expl_true) if with_explanations else None,
        )

    def selection_score(self) -> float:
        """Model-selection key: action F1_all, or explanation F1_all when actions are absent."""
        if self.action_f1_all is not None:
            return self.action_f1_all
        return self.explanation_f1_all if self.explanation_f1_all is not None else 0.0

    def values(self) -> Dict[str, Optional[float]]:
        """Metric values keyed by report column."""
        per_action = self.action_f1 if self.action_f1 is not None else (None,) * len(ACTIONS)
        return {
            **dict(zip(ACTIONS, per_action)),
            "action_mF1": self.action_mf1,
            "action_F1all": self.action_f1_all,
            "expl_mF1": self.explanation_mf1,
            "expl_F1all": self.explanation_f1_all,
        }

    def cells(self, digits: int = 4) -> Dict[str, str]:
        return {column: ABSENT if value is None else f"{value:.{digits}f}"
                for column, value in self.values().items()}
