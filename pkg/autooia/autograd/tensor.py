from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from autooia.exceptions.exception import DimensionError


@dataclass(eq=False)
class Tensor:
    """
    Dense real array with an optional gradient buffer.

    Attributes:
        values (np.ndarray): Row-major values. Integer input is promoted to float64.
        requires_grad (bool): Whether backward() accumulates into ``grad``.
        grad (Optional[np.ndarray]): float64 buffer with the shape of ``values``, created on first accumulation.
        name (str): Optional label used in error messages and checkpoints.
    """
    values: np.ndarray
    requires_grad: bool = False
    grad: Optional[np.ndarray] = field(default=None, repr=False)
    name: str = ""

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.dtype not in (np.float32, np.float64):
            values = values.astype(np.float64)
        if any(extent < 1 for extent in values.shape):
            raise DimensionError(f"tensor extents must be >= 1, got shape {values.shape}")
        self.values = values

    @classmethod
    def parameter(cls, values: np.ndarray, name: str = "") -> "Tensor":
        return cls(values, requires_grad=True, name=name)

    @classmethod
    def zeros(cls, shape: Tuple[int, ...], dtype=np.float64) -> "Tensor":
        return cls(np.zeros(shape, dtype=dtype))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def dtype(self):
        return self.values.dtype

    def item(self) -> float:
        if self.size != 1:
            raise DimensionError(f"item() needs a single element, got shape {self.shape}")
        return float(self.values.reshape(()))

    def accumulate(self, gradient: np.ndarray) -> None:
        """Adds ``gradient`` to the buffer, never overwriting what earlier consumers wrote."""
        gradient = np.asarray(gradient, dtype=np.float64)
        if gradient.shape != self.shape:
            raise DimensionError(f"gradient shape {gradient.shape} does not match tensor shape {self.shape}")
        if self.grad is None:
            self.grad = gradient.copy()
        else:
            self.grad += gradient

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"
