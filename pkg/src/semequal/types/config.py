"""Configuration types for semequal experiments."""

import sys

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

ConfigValue = typing.Union[bool, int, float, str, typing.List[typing.Union[int, float, str]]]


class CodecSection(typing.TypedDict, total=False):
    """
    The `codec` section.

    Attributes:
        kind (str): `cnn` or `token`.
    """

    kind: typing.Literal["cnn", "token"]


class CnnSection(typing.TypedDict, total=False):
    """
    The `cnn` section.

    Attributes:
        layers (list[str] | str): Layers as `out:kernel:stride:pad` entries.
        alpha (float): Leaky ReLU slope.
    """

    layers: typing.Union[typing.List[str], str]
    alpha: float


class TokenSection(typing.TypedDict, total=False):
    """
    The `token` section.

    Attributes:
        patch (int): Patch edge length.
        dim (int): Embedding width.
        blocks (int): Attention blocks per side.
        heads (int): Attention heads.
        out_dim (int): Transmitted token width.
        positional (bool): Use positional embeddings.
    """

    patch: int
    dim: int
    blocks: int
    heads: int
    out_dim: int
    positional: bool


class SemSection(typing.TypedDict, total=False):
    """
    The `sem` section.

    Attributes:
        variant (str): `none`, `scale`, `broadcast` or `scale_broadcast`.
        k (int): Broadcast neighbourhood size.
        s (float): Channel state fed to the gain network.
        quant_factor (float): Scale applied before rounding.
    """

    variant: typing.Literal["none", "scale", "broadcast", "scale_broadcast"]
    k: int
    s: float
    quant_factor: float


class QuantSection(typing.TypedDict, total=False):
    """
    The `quant` section.

    Attributes:
        clamp (int): Largest symbol magnitude.
    """

    clamp: int


class PartitionSection(typing.TypedDict, total=False):
    """
    The `partition` section.

    Attributes:
        strategy (str): Partition strategy name.
        group (int): Group size g.
    """

    strategy: typing.Literal["channel_of_map", "spatial_block", "token", "token_channel"]
    group: int


class TransportSection(typing.TypedDict, total=False):
    """
    The `transport` section.

    Attributes:
        units_per_packet (int): U; 0 derives it from the MTU.
        mtu (int): Payload bytes per packet.
        session (int): Session id.
        interleave (str): `random` or `sequential`.
    """

    units_per_packet: int
    mtu: int
    session: int
    interleave: typing.Literal["random", "sequential"]


class ChannelSection(typing.TypedDict, total=False):
    """
    The `channel` section.

    Attributes:
        kind (str): `iid` or `gilbert_elliott`.
        p (float): i.i.d. drop probability for single runs.
        p_gb (float): Good to bad transition probability.
        p_bg (float): Bad to good transition probability.
        loss_good (float): Drop probability in the good state.
        loss_bad (float): Drop probability in the bad state.
    """

    kind: typing.Literal["iid", "gilbert_elliott"]
    p: float
    p_gb: float
    p_bg: float
    loss_good: float
    loss_bad: float


class DataSection(typing.TypedDict, total=False):
    """
    The `data` section.

    Attributes:
        count (int): Training images.
        size (int): Image edge length.
        weights (list[float]): Generator mixture weights.
        eval_count (int): Held-out images.
    """

    count: int
    size: int
    weights: typing.List[float]
    eval_count: int


class TrainSection(typing.TypedDict, total=False):
    """
    The `train` section.

    Attributes:
        epochs (int): Passes over the training set.
        batch (int): Images per step.
        lr (float): Adam learning rate.
    """

    epochs: int
    batch: int
    lr: float


class EvalSection(typing.TypedDict, total=False):
    """
    The `eval` section.

    Attributes:
        rates (list[float]): Loss rates to sweep.
        trials (int): Channel trials per image and rate.
        erasure (str): `packet` or `exact`.
        workers (int): Threads used by sweeps.
    """

    rates: typing.List[float]
    trials: int
    erasure: typing.Literal["packet", "exact"]
    workers: int


class SeedsSection(typing.TypedDict, total=False):
    """
    The `seeds` section.

    Attributes:
        data (int): Dataset master seed.
        train (int): Initialization, batching and noise seed.
        channel (int): Channel and permutation seed.
    """

    data: int
    train: int
    channel: int


class SemConfigDict(typing.TypedDict, total=False):
    """
    A full experiment configuration, one entry per section.

    Every section and key is optional; missing ones take their defaults.
    """

    codec: CodecSection
    cnn: CnnSection
    token: TokenSection
    sem: SemSection
    quant: QuantSection
    partition: PartitionSection
    transport: TransportSection
    channel: ChannelSection
    data: DataSection
    train: TrainSection
    eval: EvalSection
    seeds: SeedsSection


SECTION_KEYS: typing.Final[typing.Mapping[str, typing.FrozenSet[str]]] = {
    "codec": frozenset(CodecSection.__annotations__),
    "cnn": frozenset(CnnSection.__annotations__),
    "token": frozenset(TokenSection.__annotations__),
    "sem": frozenset(SemSection.__annotations__),
    "quant": frozenset(QuantSection.__annotations__),
    "partition": frozenset(PartitionSection.__annotations__),
    "transport": frozenset(TransportSection.__annotations__),
    "channel": frozenset(ChannelSection.__annotations__),
    "data": frozenset(DataSection.__annotations__),
    "train": frozenset(TrainSection.__annotations__),
    "eval": frozenset(EvalSection.__annotations__),
    "seeds": frozenset(SeedsSection.__annotations__),
}
