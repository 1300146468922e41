"""
Adam optimizer state and update rule.

Classes:
    AdamState: Moments, step counter and hyperparameters of one optimization run.
"""

from __future__ import annotations

import dataclasses
import sys

import numpy as np

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.exceptions import ShapeMismatch
from semequal.tensor import Tensor

ParamDict = typing.Dict[str, Tensor]
GradDict = typing.Dict[str, np.ndarray]


@dataclasses.dataclass
class AdamState:
    """
    Adam moments and hyperparameters.

    Attributes:
        lr (float): Learning rate.
        beta1 (float): Decay of the first moment.
        beta2 (float): Decay of the second moment.
        eps (float): Denominator floor.
        t (int): Number of steps taken so far.
        m (dict[str, np.ndarray]): First moment per parameter name.
        v (dict[str, np.ndarray]): Second moment per parameter name.
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: GradDict = dataclasses.field(default_factory=dict)
    v: GradDict = dataclasses.field(default_factory=dict)

    def step(self, params: ParamDict, grads: GradDict) -> ParamDict:
        """
        Apply one bias-corrected Adam update.

        Args:
            params (ParamDict): Current parameters by name.
            grads (GradDict): Gradients by name, same shapes as the parameters.

        Returns:
            ParamDict: New parameter tensors; the inputs are left untouched.

        Raises:
            ShapeMismatch: If a gradient is missing or its shape differs.
        """
        self.t += 1
        correction1 = 1 - self.beta1**self.t
        correction2 = 1 - self.beta2**self.t

        updated: ParamDict = {}
        for name, param in params.items():
            grad = grads.get(name)
            if grad is None or grad.shape != param.shape:
                raise ShapeMismatch(f"Gradient for `{name}` does not match {param.shape}.")
            first = self.m.get(name, np.zeros_like(param.data))
            second = self.v.get(name, np.zeros_like(param.data))
            first = self.beta1 * first + (1 - self.beta1) * grad
            second = self.beta2 * second + (1 - self.beta2) * grad * grad
            self.m[name] = first
            self.v[name] = second

            step = self.lr * (first / correction1) / (np.sqrt(second / correction2) + self.eps)
            updated[name] = Tensor(param.data - step, requires_grad=True, name=name)
        return updated
