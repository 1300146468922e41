"""
Differentiable operations on `semequal.tensor.Tensor`.

Every op checks shapes at its boundary, computes the forward value with numpy, and
records a vector-Jacobian product on the active tape through `record_op`.

Functions:
    constant: Wrap an array as an untracked tensor.
    add, sub, mul, div: Elementwise arithmetic with numpy broadcasting.
    scale: Multiply by a Python scalar.
    sqrt: Elementwise square root.
    sum, mean: Reductions.
    reshape, transpose, index: Layout ops.
    matmul: Matrix product, batched over leading axes.
    conv2d: 2-D convolution with stride and zero padding.
    upsample_nearest: Nearest-neighbour upsampling of a feature map.
    activation: tanh, leaky ReLU or sigmoid.
    normalize: softmax or layer normalization along an axis.
    mse_loss: Mean squared error between two tensors.
"""

from __future__ import annotations

import builtins
import sys

import numpy as np

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.exceptions import ShapeMismatch
from semequal.tensor import Tensor, record_op

ActivationMode = typing.Literal["tanh", "leaky_relu", "sigmoid"]
NormalizeMode = typing.Literal["softmax", "layernorm"]

_Shape = typing.Tuple[int, ...]


def constant(values: typing.Any) -> Tensor:
    """
    Wrap values as an untracked tensor in the current precision.

    Args:
        values (Any): Anything numpy can turn into an array.

    Returns:
        Tensor: A tensor that never receives gradients.
    """
    return Tensor(values)


def _unbroadcast(grad: np.ndarray, shape: _Shape) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(kind: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as error:
        raise ShapeMismatch(
            f"`{kind}` cannot broadcast {a.shape} with {b.shape}.",
        ) from error


def add(a: Tensor, b: Tensor) -> Tensor:
    """Return a + b with broadcasting."""
    _broadcast_shape("add", a, b)

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)

    return record_op("add", (a, b), a.data + b.data, vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    """Return a - b with broadcasting."""
    _broadcast_shape("sub", a, b)

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(grad, a.shape), _unbroadcast(-grad, b.shape)

    return record_op("sub", (a, b), a.data - b.data, vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Return a * b elementwise with broadcasting."""
    _broadcast_shape("mul", a, b)

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray]:
        return (
            _unbroadcast(grad * b.data, a.shape),
            _unbroadcast(grad * a.data, b.shape),
        )

    return record_op("mul", (a, b), a.data * b.data, vjp)


def div(a: Tensor, b: Tensor) -> Tensor:
    """Return a / b elementwise with broadcasting."""
    _broadcast_shape("div", a, b)
    quotient = a.data / b.data

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray]:
        return (
            _unbroadcast(grad / b.data, a.shape),
            _unbroadcast(-grad * quotient / b.data, b.shape),
        )

    return record_op("div", (a, b), quotient, vjp)


def scale(a: Tensor, factor: float) -> Tensor:
    """Return a multiplied by a Python scalar."""
    factor_value = a.data.dtype.type(factor)

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray]:
        return (grad * factor_value,)

    return record_op("scale", (a,), a.data * factor_value, vjp)


def sqrt(a: Tensor) -> Tensor:
    """Return the elementwise square root."""
    root = np.sqrt(a.data)

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray]:
        return (grad * 0.5 / root,)

    return record_op("sqrt", (a,), root, vjp)


def sum(  # noqa: WPS125
    a: Tensor,
    axis: typing.Union[int, typing.Tuple[int, ...], None] = None,
    keepdims: bool = False,
) -> Tensor:
    """
    Sum over the given axes.

    Args:
        a (Tensor): The input.
        axis (int | tuple[int, ...] | None): Axes to reduce; None reduces everything.
        keepdims (bool): Keep reduced axes with extent 1.

    Returns:
        Tensor: The reduced tensor.
    """
    total = np.sum(a.data, axis=axis, keepdims=keepdims)

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray]:
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, a.shape).copy(),)

    return record_op("sum", (a,), total, vjp)


def mean(a: Tensor) -> Tensor:
    """Return the mean of all values as a scalar tensor."""
    count = a.size

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray]:
        return (np.full(a.shape, grad / count, dtype=a.data.dtype),)

    return record_op("mean", (a,), np.mean(a.data), vjp)


def reshape(a: Tensor, shape: typing.Sequence[int]) -> Tensor:
    """
    Return the values of `a` under a new shape.

    Raises:
        ShapeMismatch: If the value counts differ.
    """
    target = tuple(shape)
    if int(np.prod(target)) != a.size and -1 not in target:
        raise ShapeMismatch(f"Cannot reshape {a.shape} to {target}.")

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray]:
        return (grad.reshape(a.shape),)

    return record_op("reshape", (a,), a.data.reshape(target), vjp)


def transpose(a: Tensor, axes: typing.Sequence[int]) -> Tensor:
    """Permute the axes of `a`."""
    order = tuple(axes)
    if sorted(order) != list(range(a.data.ndim)):
        raise ShapeMismatch(f"Invalid axes {order} for shape {a.shape}.")
    inverse = tuple(np.argsort(order))

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray]:
        return (grad.transpose(inverse),)

    return record_op("transpose", (a,), a.data.transpose(order), vjp)


def index(a: Tensor, key: typing.Any) -> Tensor:
    """Return a basic slice of `a` (no fancy indexing)."""
    selected = a.data[key]

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray]:
        full = np.zeros_like(a.data)
        full[key] = grad
        return (full,)

    return record_op("index", (a,), selected, vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product of the last two axes, batched over leading axes.

    Args:
        a (Tensor): Shape (..., m, k).
        b (Tensor): Shape (..., k, n) or (k, n).

    Returns:
        Tensor: Shape (..., m, n).

    Raises:
        ShapeMismatch: If either operand has rank < 2 or inner extents differ.
    """
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeMismatch(f"`matmul` needs rank >= 2, got {a.shape} and {b.shape}.")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeMismatch(f"`matmul` inner extents differ: {a.shape} and {b.shape}.")

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray]:
        grad_a = np.matmul(grad, np.swapaxes(b.data, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.data, -1, -2), grad)
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return record_op("matmul", (a, b), np.matmul(a.data, b.data), vjp)


def _windows(padded: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """Return strided kernel windows of shape (b, c, H', W', kh, kw)."""
    view = np.lib.stride_tricks.sliding_window_view(padded, (kh, kw), axis=(2, 3))
    return view[:, :, ::stride, ::stride]


def conv2d(x: Tensor, kernel: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """
    2-D cross-correlation with zero padding.

    Args:
        x (Tensor): Input of shape (b, cin, H, W).
        kernel (Tensor): Weights of shape (cout, cin, kh, kw).
        stride (int): Step between windows.
        pad (int): Zero padding added on every side.

    Returns:
        Tensor: Output of shape (b, cout, H', W') with
            H' = floor((H + 2 pad - kh) / stride) + 1.

    Raises:
        ShapeMismatch: If ranks, channel counts or kernel extents do not fit.
    """
    if x.data.ndim != 4 or kernel.data.ndim != 4:
        raise ShapeMismatch(f"`conv2d` needs rank-4 operands, got {x.shape}, {kernel.shape}.")
    batch, channels_in, height, width = x.shape
    channels_out, kernel_in, kh, kw = kernel.shape
    if kernel_in != channels_in:
        raise ShapeMismatch(
            f"`conv2d` kernel expects {kernel_in} input channels, got {channels_in}.",
        )
    if kh > height + 2 * pad or kw > width + 2 * pad:
        raise ShapeMismatch(f"`conv2d` kernel {kh}x{kw} larger than padded input.")
    if stride < 1:
        raise ShapeMismatch("`conv2d` stride must be >= 1.")

    padded = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = _windows(padded, kh, kw, stride)
    out_h, out_w = windows.shape[2], windows.shape[3]
    result = np.tensordot(windows, kernel.data, axes=([1, 4, 5], [1, 2, 3]))
    result = result.transpose(0, 3, 1, 2)

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray]:
        grad_kernel = np.tensordot(grad, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_windows = np.tensordot(grad, kernel.data, axes=([1], [0]))
        grad_padded = np.zeros_like(padded)
        row_end = stride * (out_h - 1) + 1
        col_end = stride * (out_w - 1) + 1
        for row in range(kh):
            for col in range(kw):
                grad_padded[
                    :,
                    :,
                    row : row + row_end : stride,
                    col : col + col_end : stride,
                ] += grad_windows[:, :, :, :, row, col].transpose(0, 3, 1, 2)
        grad_x = grad_padded[:, :, pad : pad + height, pad : pad + width]
        return grad_x, grad_kernel

    del batch, channels_out
    return record_op("conv2d", (x, kernel), result, vjp)


def upsample_nearest(x: Tensor, factor: int) -> Tensor:
    """
    Repeat every pixel of a (b, c, H, W) map `factor` times along both axes.

    Returns:
        Tensor: Shape (b, c, H * factor, W * factor).
    """
    if x.data.ndim != 4:
        raise ShapeMismatch(f"`upsample_nearest` needs rank 4, got {x.shape}.")
    batch, channels, height, width = x.shape
    result = np.repeat(np.repeat(x.data, factor, axis=2), factor, axis=3)

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray]:
        blocks = grad.reshape(batch, channels, height, factor, width, factor)
        return (blocks.sum(axis=(3, 5)),)

    return record_op("upsample_nearest", (x,), result, vjp)


def activation(x: Tensor, mode: ActivationMode, alpha: float = 0.2) -> Tensor:
    """
    Apply an elementwise nonlinearity.

    Args:
        x (Tensor): The input.
        mode (ActivationMode): `tanh`, `leaky_relu` or `sigmoid`.
        alpha (float): Negative slope of the leaky ReLU.

    Returns:
        Tensor: The activated values.

    Raises:
        ValueError: If the mode is unknown.
    """
    if mode == "tanh":
        out = np.tanh(x.data)
        slope = 1 - out * out
    elif mode == "leaky_relu":
        negative_slope = x.data.dtype.type(alpha)
        out = np.where(x.data > 0, x.data, x.data * negative_slope)
        slope = np.where(x.data > 0, 1, negative_slope).astype(x.data.dtype)
    elif mode == "sigmoid":
        out = 0.5 * (1 + np.tanh(0.5 * x.data))
        slope = out * (1 - out)
    else:
        raise ValueError(f"Unknown activation {mode!r}.")

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray]:
        return (grad * slope,)

    return record_op(mode, (x,), out, vjp)


def normalize(
    x: Tensor,
    mode: NormalizeMode,
    axis: int = -1,
    eps: float = 1e-5,
) -> Tensor:
    """
    Normalize along one axis.

    `softmax` yields positive values summing to 1; `layernorm` yields zero mean and
    unit variance (no affine part).

    Args:
        x (Tensor): The input.
        mode (NormalizeMode): `softmax` or `layernorm`.
        axis (int): The axis to normalize over.
        eps (float): Variance floor for layer normalization.

    Returns:
        Tensor: The normalized values.

    Raises:
        ShapeMismatch: If the axis does not exist.
        ValueError: If the mode is unknown.
    """
    if not -x.data.ndim <= axis < x.data.ndim:
        raise ShapeMismatch(f"Axis {axis} out of range for shape {x.shape}.")

    if mode == "softmax":
        shifted = np.exp(x.data - x.data.max(axis=axis, keepdims=True))
        probabilities = shifted / shifted.sum(axis=axis, keepdims=True)

        def softmax_vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray]:
            inner = (grad * probabilities).sum(axis=axis, keepdims=True)
            return (probabilities * (grad - inner),)

        return record_op("softmax", (x,), probabilities, softmax_vjp)

    if mode == "layernorm":
        centered = x.data - x.data.mean(axis=axis, keepdims=True)
        variance = (centered * centered).mean(axis=axis, keepdims=True)
        inv_std = 1 / np.sqrt(variance + x.data.dtype.type(eps))
        normed = centered * inv_std

        def layernorm_vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray]:
            grad_mean = grad.mean(axis=axis, keepdims=True)
            projection = (grad * normed).mean(axis=axis, keepdims=True)
            return (inv_std * (grad - grad_mean - normed * projection),)

        return record_op("layernorm", (x,), normed, layernorm_vjp)

    raise ValueError(f"Unknown normalization {mode!r}.")


def mse_loss(a: Tensor, b: Tensor) -> Tensor:
    """
    Mean of squared differences.

    Raises:
        ShapeMismatch: If the shapes differ.
    """
    if a.shape != b.shape:
        raise ShapeMismatch(f"`mse_loss` shapes differ: {a.shape} and {b.shape}.")
    diff = a.data - b.data
    count = builtins.max(a.size, 1)

    def vjp(grad: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray]:
        grad_a = grad * 2 * diff / count
        return grad_a, -grad_a

    return record_op("mse_loss", (a, b), np.mean(diff * diff), vjp)
