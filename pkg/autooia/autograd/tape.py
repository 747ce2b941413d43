import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from autooia.autograd.tensor import Tensor
from autooia.exceptions.exception import DimensionError, LabelError, TapeError

logger = logging.getLogger(__name__)

BackwardRule = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass
class Node:
    """
    One recorded operation: its output, its operands and the rule mapping the output
    gradient to one gradient per operand (None for operands that get nothing).
    """
    op: str
    output: Tensor
    inputs: Tuple[Tensor, ...]
    rule: BackwardRule


def _f64(tensor: Tensor) -> np.ndarray:
    return np.asarray(tensor.values, dtype=np.float64)


def _stable_sum(values: np.ndarray) -> float:
    # sorted so the result does not depend on element order
    return float(np.sum(np.sort(values, axis=None)))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass
class Tape:
    """
    Records differentiable operations in execution order and runs reverse-mode differentiation.

    A tape belongs to a single forward pass; concurrent passes need their own tapes.
    Every operation computes in float64 and stores its output in the widest operand dtype.
    Operations whose operands are all constants return constants and are not recorded;
    with ``enabled`` False nothing is recorded (inference).
    """
    nodes: List[Node] = field(default_factory=list)
    enabled: bool = True

    def _emit(self, op: str, values: np.ndarray, inputs: Sequence[Tensor], rule: BackwardRule) -> Tensor:
        dtype = np.result_type(*[t.dtype for t in inputs])
        needs_grad = self.enabled and any(t.requires_grad for t in inputs)
        out = Tensor(np.asarray(values).astype(dtype, copy=False), requires_grad=needs_grad)
        if needs_grad:
            self.nodes.append(Node(op, out, tuple(inputs), rule))
        return out

    def __len__(self) -> int:
        return len(self.nodes)

    def backward(self, loss: Tensor) -> None:
        """
        Populates ``grad`` on every requires_grad ancestor of ``loss``.

        Raises:
            DimensionError: If loss is not a scalar.
            TapeError: If loss requires grad but was not produced on this tape.
        """
        if loss.size != 1:
            raise DimensionError(f"backward needs a scalar loss, got shape {loss.shape}")
        if not loss.requires_grad:
            logger.debug("Loss has no differentiable ancestors, nothing to do")
            return
        if not any(node.output is loss for node in self.nodes):
            raise TapeError("loss was not recorded on this tape")

        loss.grad = np.ones(loss.shape, dtype=np.float64)
        for node in reversed(self.nodes):
            upstream = node.output.grad
            if upstream is None:
                continue
            for tensor, gradient in zip(node.inputs, node.rule(upstream)):
                if gradient is not None and tensor.requires_grad:
                    tensor.accumulate(gradient)

    # -- layers -------------------------------------------------------------------

    def conv2d(self, x: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
        """
        2-D cross-correlation of a C_in×H×W input with a C_out×C_in×kH×kW kernel, zero padding.
        """
        if x.values.ndim != 3 or weight.values.ndim != 4:
            raise DimensionError(f"conv2d expects C×H×W input and 4-D weight, got {x.shape} and {weight.shape}")
        c_in, height, width = x.shape
        c_out, w_in, kh, kw = weight.shape
        if w_in != c_in:
            raise DimensionError(f"conv2d channel axis: input has {c_in}, weight expects {w_in}")
        if bias.shape != (c_out,):
            raise DimensionError(f"conv2d bias axis: expected ({c_out},), got {bias.shape}")
        if stride < 1 or padding < 0:
            raise DimensionError(f"conv2d needs stride >= 1 and padding >= 0, got {stride}, {padding}")
        if kh > height + 2 * padding or kw > width + 2 * padding:
            raise DimensionError(
                f"conv2d spatial axes: kernel {kh}×{kw} larger than padded input "
                f"{height + 2 * padding}×{width + 2 * padding}")

        xv, wv, bv = _f64(x), _f64(weight), _f64(bias)
        xp = np.pad(xv, ((0, 0), (padding, padding), (padding, padding)))
        out_h = (height + 2 * padding - kh) // stride + 1
        out_w = (width + 2 * padding - kw) // stride + 1
        windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
        cols = windows.transpose(1, 2, 0, 3, 4).reshape(out_h * out_w, c_in * kh * kw)
        wmat = wv.reshape(c_out, -1)
        out = (cols @ wmat.T).T.reshape(c_out, out_h, out_w) + bv[:, None, None]

        def rule(g: np.ndarray):
            g2 = g.reshape(c_out, out_h * out_w)
            dw = (g2 @ cols).reshape(wv.shape)
            db = g.sum(axis=(1, 2))
            dcols = (g2.T @ wmat).reshape(out_h, out_w, c_in, kh, kw)
            dxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, i:i + stride * (out_h - 1) + 1:stride, j:j + stride * (out_w - 1) + 1:stride] += \
                        dcols[:, :, :, i, j].transpose(2, 0, 1)
            return dxp[:, padding:padding + height, padding:padding + width], dw, db

        return self._emit("conv2d", out, (x, weight, bias), rule)

    def linear(self, x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
        if x.values.ndim != 1 or weight.values.ndim != 2 or weight.shape[1] != x.shape[0]:
            raise DimensionError(f"linear: input {x.shape} does not match weight {weight.shape}")
        if bias.shape != (weight.shape[0],):
            raise DimensionError(f"linear: bias {bias.shape} does not match weight {weight.shape}")
        xv, wv = _f64(x), _f64(weight)
        out = wv @ xv + _f64(bias)

        def rule(g: np.ndarray):
            return wv.T @ g, np.outer(g, xv), g

        return self._emit("linear", out, (x, weight, bias), rule)

    def adaptive_avg_pool2d(self, x: Tensor, out_h: int, out_w: int) -> Tensor:
        """
        Cell (i, j) averages rows [floor(iH/out_h), ceil((i+1)H/out_h)) and the analogous columns.
        """
        if x.values.ndim != 3:
            raise DimensionError(f"adaptive_avg_pool2d expects C×H×W, got {x.shape}")
        channels, height, width = x.shape
        if out_h < 1 or out_w < 1 or height < out_h or width < out_w:
            raise DimensionError(f"adaptive_avg_pool2d: output {out_h}×{out_w} larger than input {height}×{width}")
        rows = [(i * height // out_h, -(-(i + 1) * height // out_h)) for i in range(out_h)]
        cols = [(j * width // out_w, -(-(j + 1) * width // out_w)) for j in range(out_w)]
        xv = _f64(x)
        out = np.empty((channels, out_h, out_w))
        for i, (r0, r1) in enumerate(rows):
            for j, (c0, c1) in enumerate(cols):
                out[:, i, j] = xv[:, r0:r1, c0:c1].mean(axis=(1, 2))

        def rule(g: np.ndarray):
            dx = np.zeros_like(xv)
            for i, (r0, r1) in enumerate(rows):
                for j, (c0, c1) in enumerate(cols):
                    dx[:, r0:r1, c0:c1] += g[:, i, j][:, None, None] / ((r1 - r0) * (c1 - c0))
            return (dx,)

        return self._emit("adaptive_avg_pool2d", out, (x,), rule)

    def mean_spatial(self, x: Tensor) -> Tensor:
        """Global average pool: C×H×W -> C."""
        if x.values.ndim != 3:
            raise DimensionError(f"mean_spatial expects C×H×W, got {x.shape}")
        _, height, width = x.shape
        out = _f64(x).mean(axis=(1, 2))

        def rule(g: np.ndarray):
            return (np.broadcast_to(g[:, None, None] / (height * width), x.shape).copy(),)

        return self._emit("mean_spatial", out, (x,), rule)

    # -- elementwise ----------------------------------------------------------------

    def relu(self, x: Tensor) -> Tensor:
        xv = _f64(x)
        mask = xv > 0

        def rule(g: np.ndarray):
            return (g * mask,)

        return self._emit("relu", np.where(mask, xv, 0.0), (x,), rule)

    def sigmoid(self, x: Tensor) -> Tensor:
        s = _sigmoid(_f64(x))

        def rule(g: np.ndarray):
            return (g * s * (1.0 - s),)

        return self._emit("sigmoid", s, (x,), rule)

    def softmax(self, x: Tensor) -> Tensor:
        if x.values.ndim != 1:
            raise DimensionError(f"softmax expects a vector, got {x.shape}")
        xv = _f64(x)
        e = np.exp(xv - xv.max())
        p = e / _stable_sum(e)

        def rule(g: np.ndarray):
            return (p * (g - np.dot(g, p)),)

        return self._emit("softmax", p, (x,), rule)

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise DimensionError(f"add: shapes {a.shape} and {b.shape} differ")

        def rule(g: np.ndarray):
            return g, g

        return self._emit("add", _f64(a) + _f64(b), (a, b), rule)

    def scale(self, x: Tensor, factor: float) -> Tensor:
        def rule(g: np.ndarray):
            return (g * factor,)

        return self._emit("scale", _f64(x) * factor, (x,), rule)

    def scale_by(self, x: Tensor, scores: Tensor, index: int) -> Tensor:
        """Multiplies every entry of ``x`` by ``scores[index]``; both operands receive gradient."""
        if scores.values.ndim != 1 or not 0 <= index < scores.shape[0]:
            raise DimensionError(f"scale_by: index {index} outside scores of shape {scores.shape}")
        xv, sv = _f64(x), _f64(scores)
        weight = sv[index]

        def rule(g: np.ndarray):
            ds = np.zeros_like(sv)
            ds[index] = float(np.sum(g * xv))
            return g * weight, ds

        return self._emit("scale_by", xv * weight, (x, scores), rule)

    def sum(self, x: Tensor) -> Tensor:
        def rule(g: np.ndarray):
            return (np.broadcast_to(g, x.shape).copy(),)

        return self._emit("sum", np.asarray(_f64(x).sum()), (x,), rule)

    # -- structural -----------------------------------------------------------------

    def concat_channels(self, a: Tensor, b: Tensor) -> Tensor:
        if a.values.ndim != 3 or b.values.ndim != 3:
            raise DimensionError(f"concat_channels expects C×H×W operands, got {a.shape} and {b.shape}")
        if a.shape[1:] != b.shape[1:]:
            raise DimensionError(f"concat_channels spatial axes: {a.shape[1:]} vs {b.shape[1:]}")
        split = a.shape[0]

        def rule(g: np.ndarray):
            return g[:split], g[split:]

        return self._emit("concat_channels", np.concatenate([_f64(a), _f64(b)], axis=0), (a, b), rule)

    def concat(self, parts: Sequence[Tensor]) -> Tensor:
        """Concatenates 1-D tensors in order."""
        if not parts or any(p.values.ndim != 1 for p in parts):
            raise DimensionError("concat expects a non-empty list of vectors")
        bounds = np.cumsum([0] + [p.shape[0] for p in parts])

        def rule(g: np.ndarray):
            return [g[bounds[i]:bounds[i + 1]] for i in range(len(parts))]

        return self._emit("concat", np.concatenate([_f64(p) for p in parts]), tuple(parts), rule)

    def narrow(self, x: Tensor, axis: int, start: int, stop: int) -> Tensor:
        """Slice [start, stop) along ``axis``."""
        if not 0 <= start < stop <= x.shape[axis]:
            raise DimensionError(f"narrow: [{start}, {stop}) outside axis {axis} of shape {x.shape}")
        index = [slice(None)] * x.values.ndim
        index[axis] = slice(start, stop)
        index = tuple(index)

        def rule(g: np.ndarray):
            dx = np.zeros(x.shape)
            dx[index] = g
            return (dx,)

        return self._emit("narrow", _f64(x)[index], (x,), rule)

    # -- losses ---------------------------------------------------------------------

    def bce_with_logits(self, logits: Tensor, targets) -> Tensor:
        """
        Sum over elements of -[t log σ(z) + (1 - t) log(1 - σ(z))], in the form
        max(z, 0) - z t + log(1 + exp(-|z|)).

        Raises:
            LabelError: If a target is not 0 or 1, or the shapes differ.
        """
        t = np.asarray(targets, dtype=np.float64)
        if t.shape != logits.shape:
            raise LabelError(f"bce_with_logits: target shape {t.shape} does not match logits {logits.shape}")
        if not np.all((t == 0) | (t == 1)):
            raise LabelError(f"bce_with_logits: targets must be 0 or 1, got {np.unique(t).tolist()}")
        z = _f64(logits)
        loss = np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))

        def rule(g: np.ndarray):
            return (g * (_sigmoid(z) - t),)

        return self._emit("bce_with_logits", np.asarray(float(np.sum(loss))), (logits,), rule)

    def cross_entropy(self, logits: Tensor, index: int) -> Tensor:
        """-log softmax(logits)[index] for a single class index."""
        if logits.values.ndim != 1 or not 0 <= index < logits.shape[0]:
            raise LabelError(f"cross_entropy: class {index} outside logits of shape {logits.shape}")
        z = _f64(logits)
        shift = z.max()
        e = np.exp(z - shift)
        total = _stable_sum(e)
        loss = np.log(total) + shift - z[index]

        def rule(g: np.ndarray):
            grad = e / total
            grad[index] -= 1.0
            return (g * grad,)

        return self._emit("cross_entropy", np.asarray(loss), (logits,), rule)
