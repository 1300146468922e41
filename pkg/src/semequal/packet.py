"""
This module provides the packet wire format.

Layout, all multi-byte fields little-endian:

    magic "SEMU" (4) | version u8 | flags u8 | session u32 | packet_index u16 |
    total_packets u16 | perm_seed u64 | strategy u8 | group_size u8 |
    unit_payload_len u16 | unit_count u16 | unit_ids u16 * count |
    payload i8 * (count * len) | crc32 u32

The CRC-32 (IEEE) covers every byte after the magic and before the checksum.

Classes:
    Packet: A framed group of semantic units.

Functions:
    frame: Packet to bytes.
    deframe: Bytes to packet.
"""

from __future__ import annotations

import dataclasses
import struct
import sys
import zlib

import numpy as np

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.exceptions import BadLength, BadMagic, BadVersion, ChecksumMismatch

MAGIC: typing.Final[bytes] = b"SEMU"
VERSION: typing.Final[int] = 1
FLAG_RANDOM_GROUPING: typing.Final[int] = 0x01

HEADER = struct.Struct("<4sBBIHHQBBHH")
CHECKSUM = struct.Struct("<I")


@dataclasses.dataclass(frozen=True, eq=False)
class Packet:
    """
    A framed group of semantic units.

    Attributes:
        session (int): Session id shared by all packets of one latent.
        index (int): Position of this packet in the session.
        total (int): Number of packets in the session.
        seed (int): Permutation seed used for grouping.
        strategy (int): Partition strategy code.
        group (int): Partition group size g.
        unit_length (int): Symbols per unit.
        unit_ids (tuple[int, ...]): Original indices of the carried units.
        payload (np.ndarray): int8 symbols, unit after unit.
        flags (int): Bit 0 set when units were randomly grouped.
        version (int): Wire format version.
    """

    session: int
    index: int
    total: int
    seed: int
    strategy: int
    group: int
    unit_length: int
    unit_ids: typing.Tuple[int, ...]
    payload: np.ndarray
    flags: int = FLAG_RANDOM_GROUPING
    version: int = VERSION

    def __post_init__(self) -> None:
        """Check that the payload holds exactly one block per unit id."""
        expected = len(self.unit_ids) * self.unit_length
        if self.payload.size != expected:
            raise BadLength(f"Payload holds {self.payload.size} symbols, expected {expected}.")

    @property
    def units(self) -> typing.List[typing.Tuple[int, np.ndarray]]:
        """Return (unit id, payload slice) pairs."""
        blocks = np.asarray(self.payload, dtype=np.int8).reshape(
            len(self.unit_ids),
            self.unit_length,
        )
        return list(zip(self.unit_ids, blocks))

    def __eq__(self, other: object) -> bool:
        """Compare every field, payload by value."""
        if not isinstance(other, Packet):
            return NotImplemented
        for field in dataclasses.fields(self):
            if field.name == "payload":
                continue
            if getattr(self, field.name) != getattr(other, field.name):
                return False
        return bool(np.array_equal(self.payload, other.payload))

    __hash__ = None  # type: ignore[assignment]


def frame(packet: Packet) -> bytes:
    """
    Encode a packet.

    Args:
        packet (Packet): The packet.

    Returns:
        bytes: The datagram, checksum included.
    """
    body = b"".join(
        (
            HEADER.pack(
                MAGIC,
                packet.version,
                packet.flags,
                packet.session,
                packet.index,
                packet.total,
                packet.seed,
                packet.strategy,
                packet.group,
                packet.unit_length,
                len(packet.unit_ids),
            ),
            struct.pack(f"<{len(packet.unit_ids)}H", *packet.unit_ids),
            np.asarray(packet.payload, dtype=np.int8).tobytes(),
        ),
    )
    return body + CHECKSUM.pack(zlib.crc32(body[len(MAGIC) :]))


def deframe(datagram: bytes) -> Packet:
    """
    Decode a datagram.

    Args:
        datagram (bytes): The received bytes.

    Returns:
        Packet: The decoded packet.

    Raises:
        BadMagic: If the magic is wrong.
        BadVersion: If the version is not 1.
        BadLength: If the size disagrees with the header.
        ChecksumMismatch: If the CRC does not match.
    """
    if datagram[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"Bad packet magic {datagram[:len(MAGIC)]!r}.")
    if len(datagram) < HEADER.size + CHECKSUM.size:
        raise BadLength(f"Datagram of {len(datagram)} bytes is shorter than a header.")
    (
        _,
        version,
        flags,
        session,
        index,
        total,
        seed,
        strategy,
        group,
        unit_length,
        count,
    ) = HEADER.unpack_from(datagram)
    if version != VERSION:
        raise BadVersion(f"Unsupported packet version {version}.")
    expected = HEADER.size + 2 * count + count * unit_length + CHECKSUM.size
    if len(datagram) != expected:
        raise BadLength(f"Datagram holds {len(datagram)} bytes, header implies {expected}.")
    (checksum,) = CHECKSUM.unpack_from(datagram, len(datagram) - CHECKSUM.size)
    if zlib.crc32(datagram[len(MAGIC) : -CHECKSUM.size]) != checksum:
        raise ChecksumMismatch(f"Checksum mismatch in packet {index} of session {session}.")

    ids_end = HEADER.size + 2 * count
    unit_ids = struct.unpack_from(f"<{count}H", datagram, HEADER.size)
    payload = np.frombuffer(datagram[ids_end : -CHECKSUM.size], dtype=np.int8).copy()
    return Packet(
        session=session,
        index=index,
        total=total,
        seed=seed,
        strategy=strategy,
        group=group,
        unit_length=unit_length,
        unit_ids=tuple(unit_ids),
        payload=payload,
        flags=flags,
        version=version,
    )
