"""
This module provides the learned semantic codecs.

Classes:
    LatentTensor: Encoder output in channel-map or token layout.
    CnnLayer: One encoder convolution (out channels, kernel, stride, pad).
    CnnCodecConfig: Topology of the convolutional codec.
    TokenCodecConfig: Topology of the attention-based token codec.
    CnnCodec: Convolutional encoder with a mirrored upsampling decoder.
    TokenCodec: Patch embedding, pre-norm attention blocks and a mirrored decoder.

Functions:
    cbr: Channel bandwidth ratio of a codec configuration.
    build_codec: Instantiate the codec described by a configuration.

Every codec keeps its parameters outside the object, in a dict of named tensors, so
training can swap them after each optimizer step. Inputs carry a leading batch axis;
a single (3, H, W) image is accepted and treated as a batch of one.
"""

from __future__ import annotations

import dataclasses
import math
import sys

import numpy as np

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal import ops
from semequal.exceptions import ConfigError, IncompatibleSize, ShapeMismatch
from semequal.tensor import Tensor

Layout = typing.Literal["channel_map", "tokens"]
ParamDict = typing.Dict[str, Tensor]

_LATENT_RANK: typing.Final[typing.Mapping[Layout, int]] = {
    "channel_map": 4,
    "tokens": 3,
}


@dataclasses.dataclass(frozen=True)
class LatentTensor:
    """
    Encoder output, possibly quantized.

    Attributes:
        layout (Layout): `channel_map` for (b, c, h, w) or `tokens` for (b, n, d).
        values (Tensor): The latent values with a leading batch axis.
        step (float): Real value of one symbol; values * step is what the decoder sees.
    """

    layout: Layout
    values: Tensor
    step: float = 1.0

    def __post_init__(self) -> None:
        """Check the rank against the layout."""
        rank = _LATENT_RANK.get(self.layout)
        if rank is None:
            raise ShapeMismatch(f"Unknown latent layout {self.layout!r}.")
        if len(self.values.shape) != rank:
            raise ShapeMismatch(
                f"A {self.layout} latent needs rank {rank}, got {self.values.shape}.",
            )

    @property
    def batch(self) -> int:
        """Return the number of latents in the batch."""
        return self.values.shape[0]

    @property
    def item_shape(self) -> typing.Tuple[int, ...]:
        """Return the shape of one latent, (c, h, w) or (n, d)."""
        return self.values.shape[1:]

    def real(self) -> Tensor:
        """Return the values scaled back by `step`."""
        if self.step == 1.0:
            return self.values
        return ops.scale(self.values, self.step)

    def select(self, item: int) -> LatentTensor:
        """Return latent `item` of the batch as a batch of one."""
        return LatentTensor(
            self.layout,
            ops.index(self.values, slice(item, item + 1)),
            self.step,
        )


class CnnLayer(typing.NamedTuple):
    """One encoder convolution."""

    out_channels: int
    kernel: int
    stride: int
    pad: int


DEFAULT_CNN_LAYERS: typing.Final[typing.Tuple[CnnLayer, ...]] = (
    CnnLayer(32, 5, 2, 2),
    CnnLayer(64, 5, 2, 2),
    CnnLayer(16, 1, 1, 0),
)


@dataclasses.dataclass(frozen=True)
class CnnCodecConfig:
    """
    Topology of the convolutional codec.

    Attributes:
        layers (tuple[CnnLayer, ...]): Encoder layers; the last one is the projection
            producing the latent channels.
        alpha (float): Leaky ReLU slope between layers.
        image_size (int): Edge length of the square input images.
    """

    layers: typing.Tuple[CnnLayer, ...] = DEFAULT_CNN_LAYERS
    alpha: float = 0.2
    image_size: int = 64

    def __post_init__(self) -> None:
        """
        Check that every layer downsamples exactly by its stride.

        Raises:
            ConfigError: If a layer does not fit the image size.
        """
        if not self.layers:
            raise ConfigError("`cnn.layers` must name at least one layer.")
        extent = self.image_size
        for position, layer in enumerate(self.layers):
            if layer.kernel % 2 == 0:
                raise ConfigError(f"`cnn.layers` entry {position} needs an odd kernel.")
            if layer.stride < 1 or extent % layer.stride:
                raise ConfigError(
                    f"`cnn.layers` entry {position} stride does not divide {extent}.",
                )
            produced = (extent + 2 * layer.pad - layer.kernel) // layer.stride + 1
            if produced != extent // layer.stride:
                raise ConfigError(
                    f"`cnn.layers` entry {position} maps {extent} to {produced},"
                    + f" expected {extent // layer.stride}.",
                )
            extent = produced

    @property
    def latent_channels(self) -> int:
        """Return c, the channel count of the latent."""
        return self.layers[-1].out_channels

    @property
    def pre_channels(self) -> int:
        """Return the channel count entering the final projection."""
        return self.layers[-2].out_channels if len(self.layers) > 1 else 3

    @property
    def downsample(self) -> int:
        """Return the total downsampling factor."""
        return math.prod(layer.stride for layer in self.layers)

    @property
    def latent_shape(self) -> typing.Tuple[int, int, int]:
        """Return (c, h, w)."""
        extent = self.image_size // self.downsample
        return (self.latent_channels, extent, extent)


@dataclasses.dataclass(frozen=True)
class TokenCodecConfig:
    """
    Topology of the token codec.

    Attributes:
        patch (int): Patch edge length.
        dim (int): Embedding width d.
        blocks (int): Attention blocks in the encoder and in the decoder.
        heads (int): Attention heads per block.
        out_dim (int): Width of the transmitted tokens.
        positional (bool): Add learned positional embeddings.
        image_size (int): Edge length of the square input images.
    """

    patch: int = 8
    dim: int = 64
    blocks: int = 2
    heads: int = 1
    out_dim: int = 24
    positional: bool = True
    image_size: int = 64

    def __post_init__(self) -> None:
        """
        Validate the topology.

        Raises:
            ConfigError: If the patch or head count does not divide its extent.
        """
        if self.patch < 1 or self.image_size % self.patch:
            raise ConfigError("`token.patch` must divide the image size.")
        if self.heads < 1 or self.dim % self.heads:
            raise ConfigError("`token.heads` must divide `token.dim`.")
        if self.out_dim < 1 or self.blocks < 0:
            raise ConfigError("`token.out_dim` must be >= 1 and `token.blocks` >= 0.")

    @property
    def grid(self) -> int:
        """Return the number of patches along one edge."""
        return self.image_size // self.patch

    @property
    def tokens(self) -> int:
        """Return n, the number of tokens."""
        return self.grid * self.grid

    @property
    def latent_shape(self) -> typing.Tuple[int, int]:
        """Return (n, d_out)."""
        return (self.tokens, self.out_dim)


CodecConfig = typing.Union[CnnCodecConfig, TokenCodecConfig]


def cbr(config: CodecConfig) -> float:
    """
    Return the channel bandwidth ratio: latent values per input value.

    Args:
        config (CodecConfig): The codec topology.

    Returns:
        float: math.prod(latent shape) / (3 * image_size**2).
    """
    return math.prod(config.latent_shape) / (3 * config.image_size * config.image_size)


def _batched(x: Tensor) -> Tensor:
    if len(x.shape) == 3:
        return ops.reshape(x, (1, *x.shape))
    return x


def _check_image(x: Tensor, image_size: int) -> Tensor:
    batch = _batched(x)
    if len(batch.shape) != 4 or batch.shape[1] != 3:
        raise ShapeMismatch(f"Expected (b, 3, H, W) images, got {x.shape}.")
    if batch.shape[2:] != (image_size, image_size):
        raise IncompatibleSize(
            f"Codec expects {image_size}x{image_size} images, got"
            + f" {batch.shape[2]}x{batch.shape[3]}.",
        )
    return batch


def _he_normal(
    rng: np.random.Generator,
    shape: typing.Tuple[int, ...],
    fan_in: int,
    name: str,
) -> Tensor:
    values = rng.normal(0, math.sqrt(2 / fan_in), size=shape)
    return Tensor(values, requires_grad=True, name=name)


def _zeros(shape: typing.Tuple[int, ...], name: str) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


class CnnCodec:
    """
    Convolutional codec producing a channel-map latent.

    The decoder mirrors the encoder: for every encoder layer, in reverse, a
    nearest-neighbour upsample by its stride followed by a stride-1 convolution
    with the same kernel.

    Attributes:
        config (CnnCodecConfig): The topology.
    """

    layout: typing.Final[Layout] = "channel_map"

    def __init__(self, config: CnnCodecConfig) -> None:
        """Initialize the codec for a topology."""
        self.config = config
        self.latent_shape: typing.Tuple[int, ...] = config.latent_shape

    def _in_channels(self, position: int) -> int:
        return self.config.layers[position - 1].out_channels if position else 3

    def init_params(self, rng: np.random.Generator) -> ParamDict:
        """
        Draw fresh encoder and decoder parameters.

        Args:
            rng (np.random.Generator): Source of the initial weights.

        Returns:
            ParamDict: `enc.<i>.w/b` and `dec.<i>.w/b` entries.
        """
        params: ParamDict = {}
        for position, layer in enumerate(self.config.layers):
            channels_in = self._in_channels(position)
            shape = (layer.out_channels, channels_in, layer.kernel, layer.kernel)
            fan_in = channels_in * layer.kernel * layer.kernel
            params[f"enc.{position}.w"] = _he_normal(rng, shape, fan_in, f"enc.{position}.w")
            params[f"enc.{position}.b"] = _zeros((1, layer.out_channels, 1, 1), f"enc.{position}.b")
        for mirror, position in enumerate(reversed(range(len(self.config.layers)))):
            layer = self.config.layers[position]
            channels_out = self._in_channels(position)
            shape = (channels_out, layer.out_channels, layer.kernel, layer.kernel)
            fan_in = layer.out_channels * layer.kernel * layer.kernel
            params[f"dec.{mirror}.w"] = _he_normal(rng, shape, fan_in, f"dec.{mirror}.w")
            params[f"dec.{mirror}.b"] = _zeros((1, channels_out, 1, 1), f"dec.{mirror}.b")
        return params

    def _layer(self, x: Tensor, params: ParamDict, position: int) -> Tensor:
        layer = self.config.layers[position]
        convolved = ops.conv2d(x, params[f"enc.{position}.w"], layer.stride, layer.pad)
        return ops.add(convolved, params[f"enc.{position}.b"])

    def features(self, x: Tensor, params: ParamDict) -> Tensor:
        """
        Run every encoder layer except the final projection.

        Args:
            x (Tensor): Images (b, 3, H, W) or one image (3, H, W).
            params (ParamDict): Codec parameters.

        Returns:
            Tensor: The penultimate feature map f.

        Raises:
            IncompatibleSize: If the image size does not match the topology.
        """
        hidden = _check_image(x, self.config.image_size)
        for position in range(len(self.config.layers) - 1):
            hidden = ops.activation(
                self._layer(hidden, params, position),
                "leaky_relu",
                self.config.alpha,
            )
        return hidden

    def project(self, features: Tensor, params: ParamDict) -> Tensor:
        """Apply the final encoder projection to penultimate features."""
        return self._layer(features, params, len(self.config.layers) - 1)

    def encode(self, x: Tensor, params: ParamDict) -> LatentTensor:
        """
        Encode images into a channel-map latent.

        Args:
            x (Tensor): Images (b, 3, H, W) or one image (3, H, W).
            params (ParamDict): Codec parameters.

        Returns:
            LatentTensor: Shape (b, c, h, w).
        """
        return LatentTensor("channel_map", self.project(self.features(x, params), params))

    def decode(self, latent: LatentTensor, params: ParamDict) -> Tensor:
        """
        Decode a channel-map latent into real-valued images.

        Args:
            latent (LatentTensor): Shape (b, c, h, w).
            params (ParamDict): Codec parameters.

        Returns:
            Tensor: Images (b, 3, H, W), unclamped.

        Raises:
            ShapeMismatch: If the latent does not match the topology.
        """
        if latent.layout != "channel_map" or latent.item_shape != self.latent_shape:
            raise ShapeMismatch(
                f"Decoder expects a channel_map latent {self.latent_shape},"
                + f" got {latent.layout} {latent.item_shape}.",
            )
        hidden = latent.real()
        depth = len(self.config.layers)
        for mirror, position in enumerate(reversed(range(depth))):
            layer = self.config.layers[position]
            if layer.stride > 1:
                hidden = ops.upsample_nearest(hidden, layer.stride)
            hidden = ops.add(
                ops.conv2d(hidden, params[f"dec.{mirror}.w"], 1, layer.kernel // 2),
                params[f"dec.{mirror}.b"],
            )
            if mirror < depth - 1:
                hidden = ops.activation(hidden, "leaky_relu", self.config.alpha)
        return hidden


class TokenCodec:
    """
    Token codec with global self-attention.

    The encoder splits the image into patches, embeds them linearly, adds positional
    embeddings, runs pre-norm attention blocks and projects to `out_dim`. The decoder
    lifts tokens back to `dim`, runs its own blocks and maps every token to a patch.

    Attributes:
        config (TokenCodecConfig): The topology.
    """

    layout: typing.Final[Layout] = "tokens"

    def __init__(self, config: TokenCodecConfig) -> None:
        """Initialize the codec for a topology."""
        self.config = config
        self.latent_shape: typing.Tuple[int, ...] = config.latent_shape

    def init_params(self, rng: np.random.Generator) -> ParamDict:
        """
        Draw fresh encoder and decoder parameters.

        Args:
            rng (np.random.Generator): Source of the initial weights.

        Returns:
            ParamDict: Parameters prefixed `enc.` and `dec.`.
        """
        config = self.config
        patch_values = 3 * config.patch * config.patch
        params: ParamDict = {}
        for side in ("enc", "dec"):
            width_in = patch_values if side == "enc" else config.out_dim
            self._linear_params(params, rng, f"{side}.embed", width_in, config.dim)
            params[f"{side}.pos"] = Tensor(
                rng.normal(0, 0.02, size=(config.tokens, config.dim)),
                requires_grad=True,
                name=f"{side}.pos",
            )
            for block in range(config.blocks):
                prefix = f"{side}.block{block}"
                self._norm_params(params, f"{prefix}.ln1", config.dim)
                for projection in ("q", "k", "v", "o"):
                    self._linear_params(
                        params, rng, f"{prefix}.{projection}", config.dim, config.dim,
                    )
                self._norm_params(params, f"{prefix}.ln2", config.dim)
                self._linear_params(params, rng, f"{prefix}.mlp1", config.dim, 2 * config.dim)
                self._linear_params(params, rng, f"{prefix}.mlp2", 2 * config.dim, config.dim)
            self._norm_params(params, f"{side}.ln", config.dim)
            width_out = config.out_dim if side == "enc" else patch_values
            self._linear_params(params, rng, f"{side}.head", config.dim, width_out)
        return params

    @staticmethod
    def _linear_params(
        params: ParamDict,
        rng: np.random.Generator,
        name: str,
        width_in: int,
        width_out: int,
    ) -> None:
        params[f"{name}.w"] = Tensor(
            rng.normal(0, 1 / math.sqrt(width_in), size=(width_in, width_out)),
            requires_grad=True,
            name=f"{name}.w",
        )
        params[f"{name}.b"] = _zeros((width_out,), f"{name}.b")

    @staticmethod
    def _norm_params(params: ParamDict, name: str, width: int) -> None:
        params[f"{name}.g"] = Tensor(np.ones(width), requires_grad=True, name=f"{name}.g")
        params[f"{name}.b"] = _zeros((width,), f"{name}.b")

    @staticmethod
    def _linear(x: Tensor, params: ParamDict, name: str) -> Tensor:
        return ops.add(ops.matmul(x, params[f"{name}.w"]), params[f"{name}.b"])

    @staticmethod
    def _layernorm(x: Tensor, params: ParamDict, name: str) -> Tensor:
        normed = ops.normalize(x, "layernorm", axis=-1)
        return ops.add(ops.mul(normed, params[f"{name}.g"]), params[f"{name}.b"])

    def _split_heads(self, x: Tensor) -> Tensor:
        batch, count, width = x.shape
        heads = self.config.heads
        split = ops.reshape(x, (batch, count, heads, width // heads))
        return ops.transpose(split, (0, 2, 1, 3))

    def attention(
        self,
        x: Tensor,
        params: ParamDict,
        prefix: str,
    ) -> typing.Tuple[Tensor, Tensor]:
        """
        Multi-head self-attention over all tokens.

        Args:
            x (Tensor): Tokens (b, n, d).
            params (ParamDict): Codec parameters.
            prefix (str): Parameter prefix of the block.

        Returns:
            tuple[Tensor, Tensor]: The attended tokens (b, n, d) and the attention
                weights (b, heads, n, n), whose rows sum to 1.
        """
        batch, count, width = x.shape
        query = self._split_heads(self._linear(x, params, f"{prefix}.q"))
        key = self._split_heads(self._linear(x, params, f"{prefix}.k"))
        value = self._split_heads(self._linear(x, params, f"{prefix}.v"))
        scores = ops.scale(
            ops.matmul(query, ops.transpose(key, (0, 1, 3, 2))),
            1 / math.sqrt(width // self.config.heads),
        )
        weights = ops.normalize(scores, "softmax", axis=-1)
        mixed = ops.transpose(ops.matmul(weights, value), (0, 2, 1, 3))
        merged = ops.reshape(mixed, (batch, count, width))
        return self._linear(merged, params, f"{prefix}.o"), weights

    def _blocks(
        self,
        hidden: Tensor,
        params: ParamDict,
        side: str,
    ) -> typing.Tuple[Tensor, typing.List[Tensor]]:
        maps = []
        for block in range(self.config.blocks):
            prefix = f"{side}.block{block}"
            attended, weights = self.attention(
                self._layernorm(hidden, params, f"{prefix}.ln1"), params, prefix,
            )
            maps.append(weights)
            hidden = ops.add(hidden, attended)
            expanded = ops.activation(
                self._linear(self._layernorm(hidden, params, f"{prefix}.ln2"), params, f"{prefix}.mlp1"),
                "leaky_relu",
            )
            hidden = ops.add(hidden, self._linear(expanded, params, f"{prefix}.mlp2"))
        return self._layernorm(hidden, params, f"{side}.ln"), maps

    def patchify(self, x: Tensor) -> Tensor:
        """
        Split images into row-major patch vectors.

        Args:
            x (Tensor): Images (b, 3, H, W) or one image (3, H, W).

        Returns:
            Tensor: Patches (b, n, 3 * patch * patch).
        """
        images = _check_image(x, self.config.image_size)
        batch = images.shape[0]
        grid, patch = self.config.grid, self.config.patch
        split = ops.reshape(images, (batch, 3, grid, patch, grid, patch))
        ordered = ops.transpose(split, (0, 2, 4, 1, 3, 5))
        return ops.reshape(ordered, (batch, grid * grid, 3 * patch * patch))

    def unpatchify(self, patches: Tensor) -> Tensor:
        """Reassemble (b, n, 3 * patch * patch) patch vectors into images."""
        batch = patches.shape[0]
        grid, patch = self.config.grid, self.config.patch
        split = ops.reshape(patches, (batch, grid, grid, 3, patch, patch))
        ordered = ops.transpose(split, (0, 3, 1, 4, 2, 5))
        return ops.reshape(ordered, (batch, 3, grid * patch, grid * patch))

    def encode_with_attention(
        self,
        x: Tensor,
        params: ParamDict,
    ) -> typing.Tuple[LatentTensor, typing.List[Tensor]]:
        """
        Encode images and also return the encoder attention maps.

        Args:
            x (Tensor): Images (b, 3, H, W) or one image (3, H, W).
            params (ParamDict): Codec parameters.

        Returns:
            tuple[LatentTensor, list[Tensor]]: Tokens (b, n, d_out) and one
                attention map per encoder block.
        """
        hidden = self._linear(self.patchify(x), params, "enc.embed")
        if self.config.positional:
            hidden = ops.add(hidden, params["enc.pos"])
        hidden, maps = self._blocks(hidden, params, "enc")
        return LatentTensor("tokens", self._linear(hidden, params, "enc.head")), maps

    def encode(self, x: Tensor, params: ParamDict) -> LatentTensor:
        """Encode images into a token latent (b, n, d_out)."""
        return self.encode_with_attention(x, params)[0]

    def decode(self, latent: LatentTensor, params: ParamDict) -> Tensor:
        """
        Decode a token latent into real-valued images.

        Args:
            latent (LatentTensor): Tokens (b, n, d_out).
            params (ParamDict): Codec parameters.

        Returns:
            Tensor: Images (b, 3, H, W), unclamped.

        Raises:
            ShapeMismatch: If the latent does not match the topology.
        """
        if latent.layout != "tokens" or latent.item_shape != self.latent_shape:
            raise ShapeMismatch(
                f"Decoder expects a token latent {self.latent_shape},"
                + f" got {latent.layout} {latent.item_shape}.",
            )
        hidden = self._linear(latent.real(), params, "dec.embed")
        if self.config.positional:
            hidden = ops.add(hidden, params["dec.pos"])
        hidden, _ = self._blocks(hidden, params, "dec")
        return self.unpatchify(self._linear(hidden, params, "dec.head"))


Codec = typing.Union[CnnCodec, TokenCodec]


def build_codec(config: CodecConfig) -> Codec:
    """Return the codec for a topology."""
    if isinstance(config, CnnCodecConfig):
        return CnnCodec(config)
    return TokenCodec(config)
