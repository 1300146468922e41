"""
Reading and writing named parameter files.

Layout, little-endian: magic "SEMW", version u8, parameter count u32, then for every
parameter its UTF-8 name (u16 length + bytes), rank u8, extents u32 each, and the values
as 32-bit reals in row-major order.

Functions:
    dump_params: Serialize parameters to bytes.
    load_params: Parse bytes back into parameters.
    save_checkpoint: Write parameters to a file.
    load_checkpoint: Read parameters from a file.
"""

from __future__ import annotations

import os
import struct
import sys

import numpy as np

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.exceptions import CheckpointError
from semequal.tensor import Tensor

MAGIC: typing.Final[bytes] = b"SEMW"
VERSION: typing.Final[int] = 1

_HEADER = struct.Struct("<4sBI")
_NAME_LENGTH = struct.Struct("<H")
_RANK = struct.Struct("<B")

ParamDict = typing.Dict[str, Tensor]


def dump_params(params: ParamDict) -> bytes:
    """
    Serialize parameters in insertion order.

    Args:
        params (ParamDict): Parameters by name.

    Returns:
        bytes: The encoded parameter file.
    """
    chunks = [_HEADER.pack(MAGIC, VERSION, len(params))]
    for name, tensor in params.items():
        encoded_name = name.encode("utf-8")
        chunks.append(_NAME_LENGTH.pack(len(encoded_name)))
        chunks.append(encoded_name)
        chunks.append(_RANK.pack(len(tensor.shape)))
        chunks.append(struct.pack(f"<{len(tensor.shape)}I", *tensor.shape))
        chunks.append(np.asarray(tensor.data, dtype="<f4").tobytes())
    return b"".join(chunks)


class _Reader:
    def __init__(self, payload: bytes) -> None:
        self.payload = payload
        self.offset = 0

    def take(self, count: int) -> bytes:
        end = self.offset + count
        if end > len(self.payload):
            raise CheckpointError("Parameter file is truncated.")
        chunk = self.payload[self.offset : end]
        self.offset = end
        return chunk

    def unpack(self, layout: struct.Struct) -> typing.Tuple[typing.Any, ...]:
        return layout.unpack(self.take(layout.size))


def load_params(payload: bytes) -> ParamDict:
    """
    Parse a parameter file.

    Args:
        payload (bytes): The encoded parameter file.

    Returns:
        ParamDict: Parameters by name, in file order.

    Raises:
        CheckpointError: If the magic, version, lengths or names are malformed.
    """
    reader = _Reader(payload)
    magic, version, count = reader.unpack(_HEADER)
    if magic != MAGIC:
        raise CheckpointError(f"Bad parameter file magic {magic!r}.")
    if version != VERSION:
        raise CheckpointError(f"Unsupported parameter file version {version}.")

    params: ParamDict = {}
    for _ in range(count):
        (name_length,) = reader.unpack(_NAME_LENGTH)
        try:
            name = reader.take(name_length).decode("utf-8")
        except UnicodeDecodeError as error:
            raise CheckpointError("Parameter name is not valid UTF-8.") from error
        (rank,) = reader.unpack(_RANK)
        shape = struct.unpack(f"<{rank}I", reader.take(4 * rank))
        value_count = int(np.prod(shape)) if rank else 1
        values = np.frombuffer(reader.take(4 * value_count), dtype="<f4")
        params[name] = Tensor(values.reshape(shape), name=name)
    if reader.offset != len(payload):
        raise CheckpointError("Trailing bytes after the last parameter.")
    return params


def save_checkpoint(path: typing.Union[str, os.PathLike[str]], params: ParamDict) -> None:
    """Write parameters to `path`."""
    with open(path, "wb") as checkpoint_file:
        checkpoint_file.write(dump_params(params))


def load_checkpoint(path: typing.Union[str, os.PathLike[str]]) -> ParamDict:
    """Read parameters from `path`."""
    with open(path, "rb") as checkpoint_file:
        return load_params(checkpoint_file.read())
