"""
This module provides grouping of semantic units into packets and the reverse mapping.

Random grouping draws a permutation with `semequal.rng.fisher_yates`, packs the
permuted units U per packet and records the seed and explicit unit ids in every
header. Sequential grouping packs units in index order.

Classes:
    UngroupResult: Units restored to their indices, the loss mask and corruption count.

Functions:
    units_per_packet: U derived from the MTU.
    group: Units to packets.
    ungroup: Received packets (or datagrams) to units and a loss mask.
    transmit: Pass packets through an erasure channel.
"""

from __future__ import annotations

import sys

import numpy as np

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.channel import ChannelModel
from semequal.exceptions import (
    ChecksumMismatch,
    EmptyInput,
    FramingError,
    InconsistentUnits,
    MixedSession,
)
from semequal.logger import logger
from semequal.packet import FLAG_RANDOM_GROUPING, Packet, deframe
from semequal.partition import PartitionSpec, SemanticUnit
from semequal.rng import fisher_yates

Interleave = typing.Literal["random", "sequential"]
Received = typing.Sequence[typing.Union[Packet, bytes]]


class UngroupResult(typing.NamedTuple):
    """
    Output of `ungroup`.

    Attributes:
        units (list[SemanticUnit]): All N units in index order; lost ones are zero.
        mask (np.ndarray): N booleans, True where the unit was received.
        corrupted (int): Datagrams dropped because they failed to deframe.
    """

    units: typing.List[SemanticUnit]
    mask: np.ndarray
    corrupted: int


def units_per_packet(unit_length: int, mtu: int = 1400) -> int:
    """
    Return how many units fit in the MTU payload budget, at least one.

    Args:
        unit_length (int): Symbols (bytes) per unit.
        mtu (int): Payload bytes allowed per packet.

    Returns:
        int: U.
    """
    return max(1, mtu // unit_length)


def group(
    units: typing.Sequence[SemanticUnit],
    seed: int,
    per_packet: int,
    spec: PartitionSpec,
    session: int = 1,
    interleave: Interleave = "random",
) -> typing.List[Packet]:
    """
    Pack units into packets.

    Args:
        units (Sequence[SemanticUnit]): The N units of one latent.
        seed (int): Permutation seed, recorded in every header.
        per_packet (int): U; the last packet may be short.
        spec (PartitionSpec): Partition the units came from.
        session (int): Session id.
        interleave (Interleave): `random` permutes units first.

    Returns:
        list[Packet]: ceil(N / U) packets.

    Raises:
        EmptyInput: If there are no units.
        InconsistentUnits: If U < 1.
    """
    if not units:
        raise EmptyInput("Cannot group an empty unit list.")
    if per_packet < 1:
        raise InconsistentUnits("Units per packet must be >= 1.")

    if interleave == "random":
        order = [units[slot] for slot in fisher_yates(len(units), seed)]
        flags = FLAG_RANDOM_GROUPING
    else:
        order = list(units)
        flags = 0

    chunks = [order[start : start + per_packet] for start in range(0, len(order), per_packet)]
    return [
        Packet(
            session=session,
            index=position,
            total=len(chunks),
            seed=seed,
            strategy=spec.code,
            group=spec.group,
            unit_length=spec.unit_length,
            unit_ids=tuple(unit.index for unit in chunk),
            payload=np.concatenate([unit.payload for unit in chunk]).astype(np.int8),
            flags=flags,
        )
        for position, chunk in enumerate(chunks)
    ]


def _decode_all(received: Received) -> typing.Tuple[typing.List[Packet], int]:
    packets: typing.List[Packet] = []
    corrupted = 0
    for item in received:
        if isinstance(item, Packet):
            packets.append(item)
            continue
        try:
            packets.append(deframe(item))
        except ChecksumMismatch as error:
            corrupted += 1
            logger.warning("Dropping packet: %s", error)
        except FramingError as error:
            corrupted += 1
            logger.warning("Dropping malformed datagram: %s", error)
    return packets, corrupted


def ungroup(received: Received, spec: PartitionSpec) -> UngroupResult:
    """
    Restore units to their original indices.

    Datagrams that fail to deframe are treated as lost and counted.

    Args:
        received (Received): Packets or raw datagrams that arrived, any order.
        spec (PartitionSpec): Partition of the session.

    Returns:
        UngroupResult: Units, mask and the corrupted datagram count.

    Raises:
        MixedSession: If packets disagree on session or seed.
        InconsistentUnits: If a packet does not match the partition.
    """
    packets, corrupted = _decode_all(received)
    if len({(packet.session, packet.seed) for packet in packets}) > 1:
        raise MixedSession("Packets from different sessions or seeds cannot be combined.")

    mask = np.zeros(spec.unit_count, dtype=bool)
    rows = np.zeros((spec.unit_count, spec.unit_length), dtype=np.int8)
    for packet in packets:
        if packet.unit_length != spec.unit_length or packet.strategy != spec.code:
            raise InconsistentUnits(
                f"Packet {packet.index} does not match partition {spec.strategy}.",
            )
        for unit_id, payload in packet.units:
            if not 0 <= unit_id < spec.unit_count:
                raise InconsistentUnits(f"Unit id {unit_id} out of range.")
            rows[unit_id] = payload
            mask[unit_id] = True

    units = [SemanticUnit(index, rows[index].copy()) for index in range(spec.unit_count)]
    return UngroupResult(units, mask, corrupted)


def transmit(
    packets: typing.Sequence[Packet],
    model: ChannelModel,
    *key: int,
) -> typing.List[Packet]:
    """
    Pass packets through an erasure channel.

    Args:
        packets (Sequence[Packet]): Packets in sending order.
        model (ChannelModel): The channel.
        key (int): Identifies the trial's random stream.

    Returns:
        list[Packet]: The packets that survived, in sending order.
    """
    lost = model.losses(len(packets), *key)
    return [packet for packet, dropped in zip(packets, lost) if not dropped]
