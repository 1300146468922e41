"""
This module splits quantized latents into semantic units and reassembles them.

Strategies:
    channel_of_map: unit i holds channels [i*g, (i+1)*g) at every location, row-major.
    spatial_block: unit i holds the i-th g x g block (row-major block order) of every
        channel; inside a unit values are ordered channel, then row, then column.
    token: unit i holds tokens [i*g, (i+1)*g).
    token_channel: unit i holds dimensions [i*g, (i+1)*g) of every token.

Classes:
    PartitionSpec: Strategy, group size and latent shape.
    SemanticUnit: One transmission block.

Functions:
    partition: Latent to units.
    aggregate: Units and loss mask back to a latent, zero-filling lost units.
"""

from __future__ import annotations

import dataclasses
import math
import sys
import types

import numpy as np

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.codec import LatentTensor, Layout
from semequal.exceptions import IllegalPartition, InconsistentUnits, ShapeMismatch
from semequal.quantizer import from_symbols, to_symbols

Strategy = typing.Literal["channel_of_map", "spatial_block", "token", "token_channel"]

STRATEGY_CODES: typing.Final[typing.Mapping[Strategy, int]] = types.MappingProxyType(
    {
        "channel_of_map": 0,
        "spatial_block": 1,
        "token": 2,
        "token_channel": 3,
    },
)
STRATEGY_NAMES: typing.Final[typing.Mapping[int, Strategy]] = types.MappingProxyType(
    {code: name for name, code in STRATEGY_CODES.items()},
)
STRATEGY_LAYOUTS: typing.Final[typing.Mapping[Strategy, Layout]] = types.MappingProxyType(
    {
        "channel_of_map": "channel_map",
        "spatial_block": "channel_map",
        "token": "tokens",
        "token_channel": "tokens",
    },
)

LossMask = np.ndarray


@dataclasses.dataclass(frozen=True)
class PartitionSpec:
    """
    How a latent is cut into units.

    Attributes:
        strategy (Strategy): The partitioning strategy.
        group (int): Channels, tokens or dimensions per unit, or the block edge.
        layout (Layout): Layout of the latent being partitioned.
        shape (tuple[int, ...]): (c, h, w) or (n, d).
    """

    strategy: Strategy
    group: int
    layout: Layout
    shape: typing.Tuple[int, ...]

    def __post_init__(self) -> None:
        """
        Check the strategy against the layout and the group size against the shape.

        Raises:
            IllegalPartition: If the pair is illegal or g does not divide its extent.
        """
        expected_layout = STRATEGY_LAYOUTS.get(self.strategy)
        if expected_layout is None:
            raise IllegalPartition(f"Unknown partition strategy {self.strategy!r}.")
        if expected_layout != self.layout:
            raise IllegalPartition(
                f"Strategy {self.strategy} needs a {expected_layout} latent, got {self.layout}.",
            )
        if self.group < 1:
            raise IllegalPartition("Group size must be >= 1.")
        for extent in self._partitioned_extents():
            if extent % self.group:
                raise IllegalPartition(
                    f"Group size {self.group} does not divide extent {extent}.",
                )

    def _partitioned_extents(self) -> typing.Tuple[int, ...]:
        if self.strategy == "channel_of_map":
            return (self.shape[0],)
        if self.strategy == "spatial_block":
            return (self.shape[1], self.shape[2])
        if self.strategy == "token":
            return (self.shape[0],)
        return (self.shape[1],)

    @property
    def unit_count(self) -> int:
        """Return N."""
        if self.strategy == "spatial_block":
            return (self.shape[1] // self.group) * (self.shape[2] // self.group)
        return self._partitioned_extents()[0] // self.group

    @property
    def unit_length(self) -> int:
        """Return the number of symbols per unit."""
        return math.prod(self.shape) // self.unit_count

    @property
    def code(self) -> int:
        """Return the wire code of the strategy."""
        return STRATEGY_CODES[self.strategy]


class SemanticUnit(typing.NamedTuple):
    """
    One transmission block.

    Attributes:
        index (int): Position i in [0, N).
        payload (np.ndarray): int8 symbols of fixed length.
    """

    index: int
    payload: np.ndarray


def _to_rows(values: np.ndarray, spec: PartitionSpec) -> np.ndarray:
    group = spec.group
    if spec.strategy == "channel_of_map":
        return values.reshape(spec.unit_count, -1)
    if spec.strategy == "spatial_block":
        channels, height, width = values.shape
        blocks = values.reshape(channels, height // group, group, width // group, group)
        return blocks.transpose(1, 3, 0, 2, 4).reshape(spec.unit_count, -1)
    if spec.strategy == "token":
        return values.reshape(spec.unit_count, -1)
    tokens, dims = values.shape
    return values.reshape(tokens, dims // group, group).transpose(1, 0, 2).reshape(
        spec.unit_count,
        -1,
    )


def _from_rows(rows: np.ndarray, spec: PartitionSpec) -> np.ndarray:
    group = spec.group
    if spec.strategy in ("channel_of_map", "token"):
        return rows.reshape(spec.shape)
    if spec.strategy == "spatial_block":
        channels, height, width = spec.shape
        blocks = rows.reshape(height // group, width // group, channels, group, group)
        return blocks.transpose(2, 0, 3, 1, 4).reshape(spec.shape)
    tokens, dims = spec.shape
    return rows.reshape(dims // group, tokens, group).transpose(1, 0, 2).reshape(spec.shape)


def partition(latent: LatentTensor, spec: PartitionSpec) -> typing.List[SemanticUnit]:
    """
    Split a quantized latent into semantic units.

    Args:
        latent (LatentTensor): A batch-of-one, test-quantized latent.
        spec (PartitionSpec): How to cut it.

    Returns:
        list[SemanticUnit]: N units in index order.

    Raises:
        IllegalPartition: If the latent layout differs from the spec.
        ShapeMismatch: If the latent shape differs or the batch is not one.
    """
    if latent.layout != spec.layout:
        raise IllegalPartition(
            f"Strategy {spec.strategy} cannot partition a {latent.layout} latent.",
        )
    if latent.batch != 1 or latent.item_shape != spec.shape:
        raise ShapeMismatch(
            f"Partition expects one latent of shape {spec.shape}, got {latent.values.shape}.",
        )
    rows = _to_rows(to_symbols(latent)[0], spec)
    return [SemanticUnit(index, row.copy()) for index, row in enumerate(rows)]


def aggregate(
    units: typing.Sequence[SemanticUnit],
    mask: LossMask,
    spec: PartitionSpec,
    step: float = 1.0,
) -> LatentTensor:
    """
    Rebuild a latent from units, writing symbol 0 wherever a unit was lost.

    Args:
        units (Sequence[SemanticUnit]): Units; at least every received index.
        mask (LossMask): N booleans, True where the unit was received.
        spec (PartitionSpec): How the latent was cut.
        step (float): Symbol step of the rebuilt latent.

    Returns:
        LatentTensor: A batch-of-one latent.

    Raises:
        InconsistentUnits: If counts, indices or payload lengths disagree.
    """
    received = np.asarray(mask, dtype=bool)
    if received.shape != (spec.unit_count,):
        raise InconsistentUnits(
            f"Mask holds {received.size} entries for {spec.unit_count} units.",
        )
    rows = np.zeros((spec.unit_count, spec.unit_length), dtype=np.int8)
    seen = np.zeros(spec.unit_count, dtype=bool)
    for unit in units:
        if not 0 <= unit.index < spec.unit_count:
            raise InconsistentUnits(f"Unit index {unit.index} out of range.")
        if unit.payload.shape != (spec.unit_length,):
            raise InconsistentUnits(
                f"Unit {unit.index} holds {unit.payload.size} of {spec.unit_length} symbols.",
            )
        seen[unit.index] = True
        if received[unit.index]:
            rows[unit.index] = unit.payload
    if np.any(received & ~seen):
        raise InconsistentUnits("The mask marks units as received that were not given.")
    symbols = _from_rows(rows, spec)
    return from_symbols(spec.layout, symbols[None, ...], step)
