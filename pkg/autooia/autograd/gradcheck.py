"""Central finite-difference checks for tape-recorded computations."""
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from autooia.autograd.tape import Tape
from autooia.autograd.tensor import Tensor

LossBuilder = Callable[[Tape], Tensor]


def _entries(tensor: Tensor, max_entries: Optional[int], rng: np.random.Generator) -> np.ndarray:
    flat = np.arange(tensor.size)
    if max_entries is not None and tensor.size > max_entries:
        flat = np.sort(rng.choice(tensor.size, size=max_entries, replace=False))
    return flat


def _evaluate(build: LossBuilder) -> float:
    return build(Tape()).item()


def analytic_gradients(build: LossBuilder, tensors: Sequence[Tensor]) -> Dict[int, np.ndarray]:
    for tensor in tensors:
        tensor.zero_grad()
    tape = Tape()
    loss = build(tape)
    tape.backward(loss)
    return {id(t): (t.grad if t.grad is not None else np.zeros(t.shape)).copy() for t in tensors}


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / max(||a||, ||n||), or the absolute difference when both are ~0."""
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    diff = float(np.linalg.norm(analytic - numeric))
    return diff if scale < 1e-12 else diff / scale


def check_gradients(build: LossBuilder, tensors: Sequence[Tensor], eps: float = 1e-5,
                    max_entries: Optional[int] = None, seed: int = 0) -> float:
    """
    Compares backward() against central differences for every tensor in ``tensors``.

    The tensors must hold float64 values; they are perturbed in place and restored.

    Args:
        build: Rebuilds the scalar loss on the given tape from the current tensor values.
        tensors: Tensors to differentiate with respect to.
        eps: Finite-difference step.
        max_entries: When set, only this many randomly chosen entries per tensor are checked.
        seed: Seed for that sampling.

    Returns:
        float: The largest relative error over the checked tensors.
    """
    rng = np.random.default_rng(seed)
    analytic = analytic_gradients(build, tensors)
    worst = 0.0
    for tensor in tensors:
        flat_values = tensor.values.reshape(-1)
        picked = _entries(tensor, max_entries, rng)
        numeric = np.empty(len(picked))
        for slot, position in enumerate(picked):
            original = flat_values[position]
            flat_values[position] = original + eps
            plus = _evaluate(build)
            flat_values[position] = original - eps
            minus = _evaluate(build)
            flat_values[position] = original
            numeric[slot] = (plus - minus) / (2 * eps)
        worst = max(worst, relative_error(analytic[id(tensor)].reshape(-1)[picked], numeric))
    return worst
