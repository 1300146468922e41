"""
This module provides dense tensors and the tape used for reverse-mode differentiation.

Classes:
    Tensor: An immutable n-dimensional array, optionally tracked by a tape.
    OpRecord: One recorded operation on a tape.
    Tape: Ordered record of operations, used by `backward`.

Functions:
    default_dtype: The floating point type new tensors are created with.
    float64_mode: Context manager switching the current thread to 64-bit reals.
    active_tape: The tape currently recording on this thread, if any.
    record_op: Wrap an op result as a Tensor and record it on the active tape.
    round_half_away: Round to the nearest integer with ties away from zero.
    backward: Propagate gradients from a scalar loss back to parameters.

Tensors are created in 32-bit precision for training. Gradient checks switch to
64-bit precision through `float64_mode`. A tape records only while it is entered as a
context manager and belongs to the thread that entered it.
"""

from __future__ import annotations

import contextlib
import sys
import threading

import numpy as np

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.exceptions import NonFiniteError, ShapeMismatch

_local = threading.local()

VectorJacobian = typing.Callable[
    [np.ndarray],
    typing.Sequence[typing.Union[np.ndarray, None]],
]


def default_dtype() -> np.dtype[typing.Any]:
    """
    Return the floating point type for newly created tensors on this thread.

    Returns:
        np.dtype: float32 normally, float64 inside `float64_mode`.
    """
    return typing.cast(np.dtype[typing.Any], getattr(_local, "dtype", np.dtype(np.float32)))


@contextlib.contextmanager
def float64_mode() -> typing.Iterator[None]:
    """
    Create tensors in 64-bit precision for the duration of the block.

    Yields:
        None
    """
    previous = default_dtype()
    _local.dtype = np.dtype(np.float64)
    try:
        yield
    finally:
        _local.dtype = previous


class Tensor:
    """
    Immutable dense array of reals with an optional handle into a tape.

    Attributes:
        data (np.ndarray): Row-major values; never written after construction.
        requires_grad (bool): Whether gradients are tracked for this leaf.
        node_id (int | None): Node index on the tape that produced this tensor.
        name (str | None): Optional parameter name.
    """

    __slots__ = ("data", "requires_grad", "node_id", "name", "_tape")

    def __init__(
        self,
        data: typing.Any,
        requires_grad: bool = False,
        name: typing.Union[str, None] = None,
    ) -> None:
        """
        Initialize a Tensor by copying `data` in the current default precision.

        Args:
            data (Any): Anything numpy can turn into an array.
            requires_grad (bool): Track gradients for this leaf tensor.
            name (str | None): Optional parameter name.

        Raises:
            ShapeMismatch: If an extent is zero.
            NonFiniteError: If the values contain NaN or Inf.
        """
        array = np.array(data, dtype=default_dtype())
        if any(extent < 1 for extent in array.shape):
            raise ShapeMismatch(f"Tensor extents must be >= 1, got {array.shape}.")
        if not np.all(np.isfinite(array)):
            raise NonFiniteError("Tensor values must be finite.")
        array.flags.writeable = False
        self.data = array
        self.requires_grad = requires_grad
        self.node_id: typing.Union[int, None] = None
        self.name = name
        self._tape: typing.Union[Tape, None] = None

    @classmethod
    def wrap(cls, array: np.ndarray) -> Tensor:
        """
        Wrap an op result without copying or re-casting it.

        Args:
            array (np.ndarray): The freshly computed values.

        Returns:
            Tensor: A tensor sharing the array, which becomes read-only.
        """
        tensor = cls.__new__(cls)
        array.flags.writeable = False
        tensor.data = array
        tensor.requires_grad = False
        tensor.node_id = None
        tensor.name = None
        tensor._tape = None
        return tensor

    @property
    def shape(self) -> typing.Tuple[int, ...]:
        """Return the extents of the tensor."""
        return typing.cast(typing.Tuple[int, ...], self.data.shape)

    @property
    def size(self) -> int:
        """Return the number of values."""
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        """Return a writable copy of the values."""
        return np.array(self.data)

    def item(self) -> float:
        """Return the single value of a one-element tensor."""
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        """Return a short description with shape and dtype."""
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{label})"


class OpRecord(typing.NamedTuple):
    """
    One operation recorded on a tape.

    Attributes:
        kind (str): Name of the op, for diagnostics.
        inputs (tuple[int | None, ...]): Node ids of the inputs, None for constants.
        output (int): Node id of the result.
        vjp (VectorJacobian): Maps the output gradient to input gradients.
    """

    kind: str
    inputs: typing.Tuple[typing.Union[int, None], ...]
    output: int
    vjp: VectorJacobian


class Tape:
    """
    Ordered record of differentiable operations.

    Insertion order is a topological order of the graph, so `backward` can walk the
    records once in reverse.

    Attributes:
        records (list[OpRecord]): The recorded operations.
        grads (dict[int, np.ndarray]): Gradient buffers keyed by node id.
    """

    def __init__(self) -> None:
        """Initialize an empty tape."""
        self.records: typing.List[OpRecord] = []
        self.grads: typing.Dict[int, np.ndarray] = {}
        self._leaves: typing.Dict[int, typing.Tuple[Tensor, int]] = {}
        self._next_node = 0

    def __enter__(self) -> Tape:
        """Start recording on the current thread."""
        stack = _tape_stack()
        stack.append(self)
        return self

    def __exit__(self, *exc_info: object) -> None:
        """Stop recording on the current thread."""
        _tape_stack().pop()

    def node_of(self, tensor: Tensor) -> typing.Union[int, None]:
        """
        Return the node id of a tensor on this tape.

        Leaf tensors with `requires_grad` get a node id the first time they are seen.

        Args:
            tensor (Tensor): The tensor to look up.

        Returns:
            int | None: The node id, or None when the tensor is a constant here.
        """
        if tensor._tape is self:
            return tensor.node_id
        if not tensor.requires_grad:
            return None
        leaf = self._leaves.get(id(tensor))
        if leaf is None:
            leaf = (tensor, self._new_node())
            self._leaves[id(tensor)] = leaf
        return leaf[1]

    def append(
        self,
        kind: str,
        inputs: typing.Tuple[typing.Union[int, None], ...],
        vjp: VectorJacobian,
    ) -> int:
        """
        Append an operation and return the node id of its output.

        Args:
            kind (str): Name of the op.
            inputs (tuple[int | None, ...]): Node ids of the inputs.
            vjp (VectorJacobian): Gradient function of the op.

        Returns:
            int: The node id assigned to the output.
        """
        output = self._new_node()
        self.records.append(OpRecord(kind, inputs, output, vjp))
        return output

    def _new_node(self) -> int:
        node = self._next_node
        self._next_node += 1
        return node


def _tape_stack() -> typing.List[Tape]:
    stack: typing.Union[typing.List[Tape], None] = getattr(_local, "tapes", None)
    if stack is None:
        stack = []
        _local.tapes = stack
    return stack


def active_tape() -> typing.Union[Tape, None]:
    """
    Return the innermost tape recording on this thread.

    Returns:
        Tape | None: The active tape, or None outside any `with Tape()` block.
    """
    stack = _tape_stack()
    return stack[-1] if stack else None


def record_op(
    kind: str,
    inputs: typing.Sequence[Tensor],
    result: np.ndarray,
    vjp: VectorJacobian,
) -> Tensor:
    """
    Wrap an op result as a Tensor and record it on the active tape.

    The result is cast to the dtype of the first input, checked for finiteness,
    and recorded only when a tape is active and some input is tracked on it.

    Args:
        kind (str): Name of the op.
        inputs (Sequence[Tensor]): The op inputs, in the order `vjp` returns grads.
        result (np.ndarray): The forward value.
        vjp (VectorJacobian): Gradient function of the op.

    Returns:
        Tensor: The wrapped result.

    Raises:
        NonFiniteError: If the result contains NaN or Inf.
    """
    result = np.asarray(result)
    if inputs:
        result = result.astype(inputs[0].data.dtype, copy=False)
    if not np.all(np.isfinite(result)):
        raise NonFiniteError(f"`{kind}` produced non-finite values.")
    if not result.flags.c_contiguous:
        result = np.ascontiguousarray(result)
    output = Tensor.wrap(result)

    tape = active_tape()
    if tape is None:
        return output
    node_ids = tuple(tape.node_of(tensor) for tensor in inputs)
    if all(node is None for node in node_ids):
        return output
    output.node_id = tape.append(kind, node_ids, vjp)
    output._tape = tape
    return output


def round_half_away(values: np.ndarray) -> np.ndarray:
    """
    Round to the nearest integer, ties away from zero.

    Args:
        values (np.ndarray): Real values.

    Returns:
        np.ndarray: Rounded values in the same dtype.
    """
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def backward(
    tape: Tape,
    loss: Tensor,
    params: typing.Sequence[Tensor],
) -> typing.List[np.ndarray]:
    """
    Propagate gradients from a scalar loss to the given parameters.

    Args:
        tape (Tape): The tape the loss was recorded on.
        loss (Tensor): A one-element tensor.
        params (Sequence[Tensor]): Parameters to return gradients for.

    Returns:
        list[np.ndarray]: One gradient per parameter; zeros when not on the loss path.

    Raises:
        ShapeMismatch: If the loss is not a scalar.
    """
    if loss.size != 1:
        raise ShapeMismatch(f"Loss must be scalar, got shape {loss.shape}.")

    grads: typing.Dict[int, np.ndarray] = {}
    loss_node = tape.node_of(loss)
    if loss_node is not None:
        grads[loss_node] = np.ones_like(loss.data)

    for op in reversed(tape.records):
        output_grad = grads.get(op.output)
        if output_grad is None:
            continue
        for node, input_grad in zip(op.inputs, op.vjp(output_grad)):
            if node is None or input_grad is None:
                continue
            if node in grads:
                grads[node] = grads[node] + input_grad
            else:
                grads[node] = input_grad

    tape.grads = grads
    gradients = []
    for param in params:
        node = tape.node_of(param)
        gradient = grads.get(node) if node is not None else None
        if gradient is None:
            gradient = np.zeros_like(param.data)
        gradients.append(np.asarray(gradient, dtype=param.data.dtype).reshape(param.shape))
    return gradients
