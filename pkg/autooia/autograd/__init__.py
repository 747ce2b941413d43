from autooia.autograd.tape import Node, Tape
from autooia.autograd.tensor import Tensor

__all__ = ["Node", "Tape", "Tensor"]
