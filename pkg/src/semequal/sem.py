"""
This module provides the semantic equalization operators.

Dynamic scaling replaces the encoder's final projection with a weight-normalized
projection whose per-channel gains come from a tiny fully connected network, followed
by tanh. Neighbouring broadcast mixes every channel with its ring neighbours at each
spatial location through a fixed row-stochastic matrix.

Classes:
    GammaNet: Four fully connected layers mapping a scalar state to channel gains.
    ScaledProjection: Weight-normalized 1x1 projection with a bias column.
    BroadcastMatrix: Fixed sparse diffusion matrix over channels.
    SemanticEqualizer: Applies one of the equalization variants to encoder features.

Functions:
    build_broadcast: Construct the ring broadcast matrix.
"""

from __future__ import annotations

import dataclasses
import sys

import numpy as np

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal import ops
from semequal.exceptions import ConfigError, ShapeMismatch, ZeroNormRow
from semequal.tensor import Tensor

SemVariant = typing.Literal["none", "scale", "broadcast", "scale_broadcast"]
SEM_VARIANTS: typing.Final[typing.Tuple[SemVariant, ...]] = (
    "none",
    "scale",
    "broadcast",
    "scale_broadcast",
)
SCALE_VARIANTS: typing.Final[typing.FrozenSet[str]] = frozenset(("scale", "scale_broadcast"))
BROADCAST_VARIANTS: typing.Final[typing.FrozenSet[str]] = frozenset(
    ("broadcast", "scale_broadcast"),
)

ParamDict = typing.Dict[str, Tensor]
Projection = typing.Callable[[Tensor], Tensor]


class GammaNet:
    """
    Fully connected network producing positive channel gains that sum to c.

    Attributes:
        dims (tuple[int, ...]): Layer widths, (1, 16, 16, 16, c).
        alpha (float): Leaky ReLU slope between layers.
        prefix (str): Parameter name prefix.
    """

    hidden: typing.Final[int] = 16

    def __init__(self, channels: int, alpha: float = 0.2, prefix: str = "gamma") -> None:
        """
        Initialize the network for `channels` output gains.

        Args:
            channels (int): c, the latent channel count.
            alpha (float): Leaky ReLU slope.
            prefix (str): Parameter name prefix.
        """
        self.dims = (1, self.hidden, self.hidden, self.hidden, channels)
        self.alpha = alpha
        self.prefix = prefix

    @property
    def channels(self) -> int:
        """Return c."""
        return self.dims[-1]

    def parameter_count(self) -> int:
        """Return the number of weights and biases (576 + 17c for the default dims)."""
        return sum(
            width_in * width_out + width_out
            for width_in, width_out in zip(self.dims, self.dims[1:])
        )

    def flops(self) -> int:
        """Return the multiplications of one forward pass."""
        return sum(width_in * width_out for width_in, width_out in zip(self.dims, self.dims[1:]))

    def init_params(self, rng: np.random.Generator) -> ParamDict:
        """Draw fresh weights; biases start at zero."""
        params: ParamDict = {}
        for layer, (width_in, width_out) in enumerate(zip(self.dims, self.dims[1:])):
            weight_name = f"{self.prefix}.{layer}.w"
            bias_name = f"{self.prefix}.{layer}.b"
            params[weight_name] = Tensor(
                rng.normal(0, np.sqrt(2 / width_in), size=(width_in, width_out)),
                requires_grad=True,
                name=weight_name,
            )
            params[bias_name] = Tensor(
                np.zeros((1, width_out)),
                requires_grad=True,
                name=bias_name,
            )
        return params

    def forward(self, state: float, params: ParamDict) -> Tensor:
        """
        Compute the channel gains for a channel state.

        Args:
            state (float): The scalar channel state s.
            params (ParamDict): Network parameters.

        Returns:
            Tensor: Gains of shape (c,), positive, summing to c.
        """
        hidden = ops.constant([[state]])
        last = len(self.dims) - 2
        for layer in range(len(self.dims) - 1):
            hidden = ops.add(
                ops.matmul(hidden, params[f"{self.prefix}.{layer}.w"]),
                params[f"{self.prefix}.{layer}.b"],
            )
            if layer < last:
                hidden = ops.activation(hidden, "leaky_relu", self.alpha)
        gains = ops.scale(ops.normalize(hidden, "softmax", axis=-1), self.channels)
        return ops.reshape(gains, (self.channels,))


class ScaledProjection:
    """
    Weight-normalized projection z = tanh(gamma * W / ||W||_2 [f; 1]).

    Every row of the augmented weight is normalized to unit length and scaled by its
    gain, then applied at each spatial location.

    Attributes:
        pre_channels (int): c_pre, channels of the incoming features.
        channels (int): c, channels produced.
        name (str): Parameter name of the augmented weight.
    """

    def __init__(self, pre_channels: int, channels: int, name: str = "proj.w") -> None:
        """Initialize a projection from `pre_channels` to `channels`."""
        self.pre_channels = pre_channels
        self.channels = channels
        self.name = name

    def init_params(self, rng: np.random.Generator) -> ParamDict:
        """Draw a fresh augmented weight of shape (c, c_pre + 1)."""
        shape = (self.channels, self.pre_channels + 1)
        weight = rng.normal(0, 1 / np.sqrt(self.pre_channels + 1), size=shape)
        return {self.name: Tensor(weight, requires_grad=True, name=self.name)}

    def effective_weight(self, weight: Tensor, gains: Tensor) -> Tensor:
        """
        Return rows gamma_i * W_i / ||W_i||_2.

        Raises:
            ZeroNormRow: If a row of the weight is all zeros.
            ShapeMismatch: If the weight or gains do not match the channel counts.
        """
        if weight.shape != (self.channels, self.pre_channels + 1):
            raise ShapeMismatch(
                f"Projection weight must be {(self.channels, self.pre_channels + 1)},"
                + f" got {weight.shape}.",
            )
        if gains.shape != (self.channels,):
            raise ShapeMismatch(f"Expected {self.channels} gains, got {gains.shape}.")
        if np.any(np.all(weight.data == 0, axis=1)):
            raise ZeroNormRow("A projection weight row is the zero vector.")
        norms = ops.sqrt(ops.sum(ops.mul(weight, weight), axis=1, keepdims=True))
        unit_rows = ops.div(weight, norms)
        return ops.mul(unit_rows, ops.reshape(gains, (self.channels, 1)))

    def forward(self, features: Tensor, gains: Tensor, params: ParamDict) -> Tensor:
        """
        Project features and squash them into (-1, 1).

        Args:
            features (Tensor): Feature map (b, c_pre, h, w).
            gains (Tensor): Per-channel gains (c,).
            params (ParamDict): Holds the augmented weight.

        Returns:
            Tensor: Map (b, c, h, w) with values strictly inside (-1, 1).

        Raises:
            ShapeMismatch: If the feature channels differ from c_pre.
        """
        if len(features.shape) != 4 or features.shape[1] != self.pre_channels:
            raise ShapeMismatch(
                f"Projection expects {self.pre_channels} input channels, got {features.shape}.",
            )
        rows = self.effective_weight(params[self.name], gains)
        kernel = ops.reshape(
            ops.index(rows, (slice(None), slice(0, self.pre_channels))),
            (self.channels, self.pre_channels, 1, 1),
        )
        bias = ops.reshape(
            ops.index(rows, (slice(None), slice(self.pre_channels, self.pre_channels + 1))),
            (1, self.channels, 1, 1),
        )
        return ops.activation(ops.add(ops.conv2d(features, kernel), bias), "tanh")


@dataclasses.dataclass(frozen=True, eq=False)
class BroadcastMatrix:
    """
    Fixed row-stochastic matrix mixing each channel with its ring neighbours.

    Attributes:
        channels (int): c.
        k (int): Neighbourhood size K.
        matrix (np.ndarray): Dense (c, c) matrix with K entries of 1/K per row.
    """

    channels: int
    k: int
    matrix: np.ndarray

    def neighbours(self, channel: int) -> typing.List[int]:
        """Return N_K(channel) = {(channel + m) mod c : m < K}."""
        return [(channel + offset) % self.channels for offset in range(self.k)]

    def apply(self, latent: Tensor) -> Tensor:
        """
        Mix channels independently at every spatial location.

        Args:
            latent (Tensor): Map (b, c, h, w).

        Returns:
            Tensor: The diffused map, same shape.

        Raises:
            ShapeMismatch: If the channel count differs from the matrix size.
        """
        if len(latent.shape) != 4 or latent.shape[1] != self.channels:
            raise ShapeMismatch(
                f"Broadcast over {self.channels} channels got shape {latent.shape}.",
            )
        kernel = ops.constant(self.matrix.reshape(self.channels, self.channels, 1, 1))
        return ops.conv2d(latent, kernel)


def build_broadcast(channels: int, k: int) -> BroadcastMatrix:
    """
    Build the forward-ring broadcast matrix.

    Args:
        channels (int): c.
        k (int): Neighbourhood size, 1 <= K <= c.

    Returns:
        BroadcastMatrix: Row i holds 1/K at columns (i + m) mod c for m < K.

    Raises:
        ConfigError: If K is out of range.
    """
    if not 1 <= k <= channels:
        raise ConfigError(f"`sem.k` must lie in [1, {channels}], got {k}.")
    matrix = np.zeros((channels, channels))
    for row in range(channels):
        for offset in range(k):
            matrix[row, (row + offset) % channels] = 1 / k
    matrix.flags.writeable = False
    return BroadcastMatrix(channels, k, matrix)


class SemanticEqualizer:
    """
    One equalization variant bound to a CNN codec's channel counts.

    Attributes:
        variant (SemVariant): `none`, `scale`, `broadcast` or `scale_broadcast`.
        state (float): The channel state s fed to the gain network.
        gamma (GammaNet | None): Gain network for scale variants.
        projection (ScaledProjection | None): Projection for scale variants.
        broadcast (BroadcastMatrix | None): Matrix for broadcast variants.
    """

    def __init__(
        self,
        variant: SemVariant,
        pre_channels: int,
        channels: int,
        k: int = 4,
        state: float = 1.0,
        alpha: float = 0.2,
    ) -> None:
        """
        Initialize the operators a variant needs.

        Raises:
            ConfigError: If the variant is unknown or K is out of range.
        """
        if variant not in SEM_VARIANTS:
            raise ConfigError(f"Unknown SEM variant {variant!r}.")
        self.variant = variant
        self.state = state
        self.gamma: typing.Union[GammaNet, None] = None
        self.projection: typing.Union[ScaledProjection, None] = None
        self.broadcast: typing.Union[BroadcastMatrix, None] = None
        if variant in SCALE_VARIANTS:
            self.gamma = GammaNet(channels, alpha)
            self.projection = ScaledProjection(pre_channels, channels)
        if variant in BROADCAST_VARIANTS:
            self.broadcast = build_broadcast(channels, k)

    def init_params(self, rng: np.random.Generator) -> ParamDict:
        """Draw parameters for the learnable parts of the variant."""
        params: ParamDict = {}
        if self.gamma is not None and self.projection is not None:
            params.update(self.gamma.init_params(rng))
            params.update(self.projection.init_params(rng))
        return params

    def gains(self, params: ParamDict) -> Tensor:
        """Return gamma for the configured channel state."""
        if self.gamma is None:
            raise ConfigError(f"SEM variant {self.variant!r} has no gain network.")
        return self.gamma.forward(self.state, params)

    def apply(self, features: Tensor, params: ParamDict, project: Projection) -> Tensor:
        """
        Produce the equalized latent map from penultimate encoder features.

        `none` and `broadcast` use the codec's own projection; the scale variants
        replace it with the scaled projection.

        Args:
            features (Tensor): Penultimate feature map (b, c_pre, h, w).
            params (ParamDict): Codec and equalizer parameters.
            project (Projection): The codec's final projection.

        Returns:
            Tensor: The equalized latent map (b, c, h, w).
        """
        if self.projection is not None:
            latent = self.projection.forward(features, self.gains(params), params)
        else:
            latent = project(features)
        if self.broadcast is not None:
            latent = self.broadcast.apply(latent)
        return latent
