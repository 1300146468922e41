"""Tests for the differentiable operations."""

from __future__ import annotations

import math

import numpy as np
import pytest

from semequal import ops
from semequal.exceptions import NonFiniteError, ShapeMismatch
from semequal.gradcheck import grad_check
from semequal.tensor import Tape, Tensor, backward, float64_mode

GRAD_TOLERANCE = 1e-4


def test_matmul_identity() -> None:
    """Test that multiplying by the identity returns the operand."""
    product = ops.matmul(Tensor(np.eye(2)), Tensor([[5.0], [6.0]]))

    np.testing.assert_allclose(product.data, [[5.0], [6.0]])


def test_matmul_values() -> None:
    """Test a hand-computed matrix product."""
    product = ops.matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[5.0], [6.0]]))

    np.testing.assert_allclose(product.data, [[17.0], [39.0]])


def test_matmul_shape_mismatch() -> None:
    """Test that inner extents must agree."""
    with pytest.raises(ShapeMismatch):
        ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 1))))


def test_matmul_batched() -> None:
    """Test that a matrix broadcasts over a batch of operands."""
    product = ops.matmul(Tensor(np.ones((3, 2, 4))), Tensor(np.ones((4, 5))))

    assert product.shape == (3, 2, 5)
    np.testing.assert_allclose(product.data, 4.0)


def test_conv2d_sum_of_ones() -> None:
    """Test that an all-ones 3x3 kernel over an all-ones 3x3 input gives 9."""
    result = ops.conv2d(Tensor(np.ones((1, 1, 3, 3))), Tensor(np.ones((1, 1, 3, 3))))

    assert result.shape == (1, 1, 1, 1)
    assert result.item() == 9.0


def test_conv2d_unit_kernel() -> None:
    """Test that a 1x1 kernel of value 1 returns the input."""
    x = np.random.default_rng(0).normal(size=(2, 1, 5, 5))
    result = ops.conv2d(Tensor(x), Tensor(np.ones((1, 1, 1, 1))))

    np.testing.assert_allclose(result.data, x.astype(np.float32))


def test_conv2d_output_shape() -> None:
    """Test the output shape of a strided, padded convolution."""
    result = ops.conv2d(
        Tensor(np.zeros((1, 3, 64, 64))),
        Tensor(np.zeros((32, 3, 5, 5))),
        stride=2,
        pad=2,
    )

    assert result.shape == (1, 32, 32, 32)


def test_conv2d_channel_mismatch() -> None:
    """Test that the kernel must match the input channel count."""
    with pytest.raises(ShapeMismatch):
        ops.conv2d(Tensor(np.zeros((1, 2, 4, 4))), Tensor(np.zeros((1, 3, 1, 1))))


def test_upsample_nearest() -> None:
    """Test that every pixel is repeated into a factor x factor block."""
    result = ops.upsample_nearest(Tensor([[[[1.0, 2.0], [3.0, 4.0]]]]), 2)

    assert result.shape == (1, 1, 4, 4)
    np.testing.assert_allclose(result.data[0, 0, :2, :2], 1.0)
    np.testing.assert_allclose(result.data[0, 0, 2:, 2:], 4.0)


def test_activation_values() -> None:
    """Test tanh, leaky ReLU and sigmoid at known points."""
    assert ops.activation(Tensor(0.0), "tanh").item() == 0.0
    assert ops.activation(Tensor(-1.0), "leaky_relu", alpha=0.2).item() == pytest.approx(-0.2)
    assert ops.activation(Tensor(0.0), "sigmoid").item() == 0.5


def test_activation_unknown_mode() -> None:
    """Test that an unknown activation raises ValueError."""
    with pytest.raises(ValueError):
        ops.activation(Tensor([1.0]), "relu6")  # type: ignore[arg-type]


def test_softmax_uniform() -> None:
    """Test that softmax of a constant vector is uniform."""
    result = ops.normalize(Tensor([3.0, 3.0, 3.0, 3.0]), "softmax")

    np.testing.assert_allclose(result.data, [0.25, 0.25, 0.25, 0.25])


def test_softmax_values() -> None:
    """Test that softmax of [0, ln 2] is [1/3, 2/3]."""
    result = ops.normalize(Tensor([0.0, math.log(2.0)]), "softmax")

    np.testing.assert_allclose(result.data, [1 / 3, 2 / 3], rtol=1e-6)


def test_layernorm_values() -> None:
    """Test that layer normalization of [1, 3] is [-1, 1]."""
    result = ops.normalize(Tensor([1.0, 3.0]), "layernorm", eps=1e-12)

    np.testing.assert_allclose(result.data, [-1.0, 1.0], rtol=1e-6)


def test_normalize_axis_out_of_range() -> None:
    """Test that a missing axis raises ShapeMismatch."""
    with pytest.raises(ShapeMismatch):
        ops.normalize(Tensor([1.0, 2.0]), "softmax", axis=1)


def test_mse_loss() -> None:
    """Test the mean squared error at known points."""
    assert ops.mse_loss(Tensor([1.0, 2.0]), Tensor([1.0, 2.0])).item() == 0.0
    assert ops.mse_loss(Tensor([0.0, 2.0]), Tensor([0.0, 0.0])).item() == 2.0


def test_mse_loss_shape_mismatch() -> None:
    """Test that operands of different shapes are rejected."""
    with pytest.raises(ShapeMismatch):
        ops.mse_loss(Tensor([1.0, 2.0]), Tensor([[1.0, 2.0]]))


def test_reshape_count_mismatch() -> None:
    """Test that a reshape must keep the value count."""
    with pytest.raises(ShapeMismatch):
        ops.reshape(Tensor(np.ones((2, 3))), (4, 2))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_div_by_zero_is_non_finite() -> None:
    """Test that an op producing Inf raises NonFiniteError."""
    with pytest.raises(NonFiniteError):
        ops.div(Tensor([1.0]), Tensor([0.0]))


def test_index_gradient() -> None:
    """Test that slicing routes gradients back to the selected entries only."""
    x = Tensor([1.0, 2.0, 3.0, 4.0], requires_grad=True)
    with Tape() as tape:
        loss = ops.sum(ops.index(x, slice(1, 3)))
    (grad,) = backward(tape, loss, [x])

    np.testing.assert_array_equal(grad, [0.0, 1.0, 1.0, 0.0])


def test_sum_axis_gradient() -> None:
    """Test the gradient of a partial sum."""
    rng = np.random.default_rng(1)
    weights = Tensor(rng.normal(size=3))
    x = Tensor(rng.normal(size=(2, 3)))

    error = grad_check(lambda t: ops.sum(ops.mul(ops.sum(t, axis=0), weights)), x)

    assert error <= GRAD_TOLERANCE


@pytest.mark.parametrize(
    "mode",
    ["tanh", "leaky_relu", "sigmoid"],
)
def test_activation_gradients(mode: ops.ActivationMode) -> None:
    """Test the activation gradients against central differences."""
    x = Tensor(np.array([[-1.3, -0.4, 0.6], [0.9, 1.7, -2.1]]))
    target = Tensor(np.full((2, 3), 0.1))

    error = grad_check(lambda t: ops.mse_loss(ops.activation(t, mode), target), x)

    assert error <= GRAD_TOLERANCE


@pytest.mark.parametrize("mode", ["softmax", "layernorm"])
def test_normalize_gradients(mode: ops.NormalizeMode) -> None:
    """Test the normalization gradients against central differences."""
    rng = np.random.default_rng(2)
    x = Tensor(rng.normal(size=(3, 4)))
    weights = Tensor(rng.normal(size=(3, 4)))

    error = grad_check(lambda t: ops.sum(ops.mul(ops.normalize(t, mode), weights)), x)

    assert error <= GRAD_TOLERANCE


def test_matmul_gradient() -> None:
    """Test the matmul gradient against central differences."""
    rng = np.random.default_rng(3)
    right = Tensor(rng.normal(size=(4, 2)))
    x = Tensor(rng.normal(size=(2, 3, 4)))

    error = grad_check(lambda t: ops.sum(ops.mul(ops.matmul(t, right), ops.matmul(t, right))), x)

    assert error <= GRAD_TOLERANCE


def test_conv2d_gradient() -> None:
    """Test a conv2d, tanh and MSE composite against central differences."""
    rng = np.random.default_rng(4)
    kernel = Tensor(rng.normal(size=(2, 2, 3, 3)) * 0.3)
    target = Tensor(rng.normal(size=(1, 2, 3, 3)) * 0.2)
    x = Tensor(rng.normal(size=(1, 2, 5, 5)))

    error = grad_check(
        lambda t: ops.mse_loss(
            ops.activation(ops.conv2d(t, kernel, stride=2, pad=1), "tanh"),
            target,
        ),
        x,
    )

    assert error <= GRAD_TOLERANCE


def test_conv2d_kernel_gradient() -> None:
    """Test the conv2d kernel gradient against central differences."""
    rng = np.random.default_rng(5)
    with float64_mode():
        x = Tensor(rng.normal(size=(2, 1, 4, 4)))
        target = Tensor(rng.normal(size=(2, 3, 4, 4)))
    kernel = Tensor(rng.normal(size=(3, 1, 3, 3)))

    error = grad_check(lambda k: ops.mse_loss(ops.conv2d(x, k, pad=1), target), kernel)

    assert error <= GRAD_TOLERANCE


def test_upsample_gradient() -> None:
    """Test the upsampling gradient against central differences."""
    rng = np.random.default_rng(6)
    weights = Tensor(rng.normal(size=(1, 2, 4, 4)))
    x = Tensor(rng.normal(size=(1, 2, 2, 2)))

    error = grad_check(lambda t: ops.sum(ops.mul(ops.upsample_nearest(t, 2), weights)), x)

    assert error <= GRAD_TOLERANCE


def test_div_sqrt_gradient() -> None:
    """Test the division and square root gradients against central differences."""
    x = Tensor(np.array([0.5, 1.5, 2.5]))
    denominator = Tensor(np.array([2.0, 3.0, 4.0]))

    error = grad_check(lambda t: ops.sum(ops.div(ops.sqrt(t), ops.add(t, denominator))), x)

    assert error <= GRAD_TOLERANCE
