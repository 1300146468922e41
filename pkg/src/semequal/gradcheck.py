"""Finite-difference gradient checking in 64-bit precision."""

from __future__ import annotations

import sys

import numpy as np

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.tensor import Tape, Tensor, backward, float64_mode

TracedFunction = typing.Callable[[Tensor], Tensor]


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """
    Largest elementwise |a - n| / max(|a| + |n|, 1e-8).

    Args:
        analytic (np.ndarray): Gradient from `backward`.
        numeric (np.ndarray): Gradient from central differences.

    Returns:
        float: The worst relative error.
    """
    scale = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / scale))


def grad_check(function: TracedFunction, x: Tensor, h: float = 1e-4) -> float:
    """
    Compare the taped gradient of a scalar function against central differences.

    The function is evaluated in 64-bit precision. It must build its result from
    `semequal.ops` so that the tape sees every operation on `x`.

    Args:
        function (TracedFunction): Maps a tensor to a one-element tensor.
        x (Tensor): The point to check at.
        h (float): Finite-difference step.

    Returns:
        float: The maximum relative error over all coordinates of `x`.
    """
    with float64_mode():
        point = Tensor(x.data, requires_grad=True)
        with Tape() as tape:
            loss = function(point)
        (analytic,) = backward(tape, loss, [point])

        base = np.array(point.data, dtype=np.float64)
        numeric = np.zeros_like(base)
        flat = numeric.reshape(-1)
        for position in range(base.size):
            shifted = base.reshape(-1).copy()
            shifted[position] += h
            upper = function(Tensor(shifted.reshape(base.shape))).item()
            shifted[position] -= 2 * h
            lower = function(Tensor(shifted.reshape(base.shape))).item()
            flat[position] = (upper - lower) / (2 * h)
    return relative_error(analytic, numeric)
