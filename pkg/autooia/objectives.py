import math
from typing import Sequence

from autooia.autograd.tape import Tape
from autooia.autograd.tensor import Tensor
from autooia.data.records import action_label, explanation_label
from autooia.exceptions.exception import ConfigError

EXPLANATIONS_ONLY = math.inf


def _check_lambda(lam: float) -> None:
    if math.isnan(lam) or lam < 0:
        raise ConfigError(f"lambda must be >= 0 or inf, got {lam}")


def multitask_loss(tape: Tape, action_logits: Tensor, explanation_logits: Tensor,
                   action: Sequence[int], explanation: Sequence[int], lam: float) -> Tensor:
    """
    L = L_A + λ·L_E with L_A, L_E sums of binary cross entropies over the 4 actions and the
    21 explanations. λ = 0 returns L_A itself, λ = inf returns L_E alone.

    Raises:
        LabelError: For labels with the wrong arity or non-binary flags.
    """
    _check_lambda(lam)
    action, explanation = action_label(action), explanation_label(explanation)
    if lam == 0:
        return tape.bce_with_logits(action_logits, action)
    loss_e = tape.bce_with_logits(explanation_logits, explanation)
    if lam == EXPLANATIONS_ONLY:
        return loss_e
    return tape.add(tape.bce_with_logits(action_logits, action), tape.scale(loss_e, lam))


def single_action_loss(tape: Tape, action_logits: Tensor, explanation_logits: Tensor,
                       intent: int, explanation: Sequence[int], lam: float) -> Tensor:
    """
    Softmax cross-entropy on the driver-intent index plus λ·L_E, with the same λ conventions.
    """
    _check_lambda(lam)
    explanation = explanation_label(explanation)
    if lam == 0:
        return tape.cross_entropy(action_logits, intent)
    loss_e = tape.bce_with_logits(explanation_logits, explanation)
    if lam == EXPLANATIONS_ONLY:
        return loss_e
    return tape.add(tape.cross_entropy(action_logits, intent), tape.scale(loss_e, lam))
