"""
This module wires a codec, an equalizer and a quantizer into one semantic system.

Classes:
    SemanticSystem: Encoder, equalizer, quantizer and decoder bound to one configuration.

The system holds no parameters itself; every method takes the parameter dict, so the
same system serves freshly initialized, training and checkpointed weights.
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
from semequal.codec import CnnCodec, Codec, LatentTensor, ParamDict, build_codec
from semequal.configuration import Configuration
from semequal.dataio import Image, from_unit_tensor, to_unit_tensor
from semequal.exceptions import CheckpointError
from semequal.quantizer import Quantizer
from semequal.sem import SemanticEqualizer
from semequal.tensor import Tensor


class SemanticSystem:
    """
    The transmitter and receiver of one experiment.

    Attributes:
        config (Configuration): The experiment configuration.
        codec (Codec): The learned codec.
        equalizer (SemanticEqualizer | None): Equalization for channel-map codecs.
        quantizer (Quantizer): The test-mode quantizer.
    """

    def __init__(self, config: Configuration) -> None:
        """
        Initialize the system described by a configuration.

        Args:
            config (Configuration): The experiment configuration.
        """
        self.config = config
        self.codec: Codec = build_codec(config.codec)
        self.equalizer: typing.Union[SemanticEqualizer, None] = None
        if isinstance(self.codec, CnnCodec):
            self.equalizer = SemanticEqualizer(
                config.sem.variant,
                self.codec.config.pre_channels,
                self.codec.config.latent_channels,
                k=config.sem.k,
                state=config.sem.s,
                alpha=self.codec.config.alpha,
            )
        self.quantizer = Quantizer(config.quantizer)

    @property
    def layout(self) -> typing.Literal["channel_map", "tokens"]:
        """Return the latent layout of the codec."""
        return self.codec.layout

    def init_params(self) -> ParamDict:
        """
        Draw initial codec and equalizer parameters from the training seed.

        Returns:
            ParamDict: Every learnable tensor by name.
        """
        rng = np.random.default_rng(self.config.seeds.train)
        params = self.codec.init_params(rng)
        if self.equalizer is not None:
            params.update(self.equalizer.init_params(rng))
        return params

    def check_params(self, params: ParamDict) -> None:
        """
        Check that loaded parameters fit this system.

        Raises:
            CheckpointError: If a name is missing or unexpected, or a shape differs.
        """
        expected = {name: tensor.shape for name, tensor in self.init_params().items()}
        missing = sorted(set(expected) - set(params))
        unexpected = sorted(set(params) - set(expected))
        if missing or unexpected:
            raise CheckpointError(
                f"Checkpoint does not fit the configuration: missing {missing},"
                + f" unexpected {unexpected}.",
            )
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise CheckpointError(
                    f"Parameter `{name}` has shape {params[name].shape}, expected {shape}.",
                )

    def training_quantizer(self) -> Quantizer:
        """Return a quantizer that adds uniform noise, seeded from the training seed."""
        return Quantizer(dataclasses.replace(self.quantizer.config, mode="train_noise"))

    def encode(self, x: Tensor, params: ParamDict) -> LatentTensor:
        """
        Encode images into the real-valued latent, equalized when configured.

        Args:
            x (Tensor): Images (b, 3, H, W) or one image (3, H, W).
            params (ParamDict): System parameters.

        Returns:
            LatentTensor: The latent before quantization.
        """
        if self.equalizer is None or not isinstance(self.codec, CnnCodec):
            return self.codec.encode(x, params)
        codec = self.codec
        features = codec.features(x, params)
        latent = self.equalizer.apply(
            features,
            params,
            lambda hidden: codec.project(hidden, params),
        )
        return LatentTensor("channel_map", latent)

    def decode(self, latent: LatentTensor, params: ParamDict) -> Tensor:
        """Decode a latent into real-valued images (b, 3, H, W)."""
        return self.codec.decode(latent, params)

    def training_loss(
        self,
        batch: Tensor,
        params: ParamDict,
        quantizer: Quantizer,
    ) -> Tensor:
        """
        Run one noisy forward pass and return the reconstruction MSE.

        Args:
            batch (Tensor): Images (b, 3, H, W) in [0, 1].
            params (ParamDict): System parameters.
            quantizer (Quantizer): A train-mode quantizer.

        Returns:
            Tensor: The scalar loss.
        """
        noisy = quantizer.quantize(self.encode(batch, params), "train_noise")
        return ops.mse_loss(self.decode(noisy, params), batch)

    def quantize(self, image: Image, params: ParamDict) -> LatentTensor:
        """Encode one image and quantize it for transmission."""
        return self.quantizer.quantize(self.encode(to_unit_tensor(image), params))

    def render(self, latent: LatentTensor, params: ParamDict) -> Image:
        """Decode a batch-of-one latent into an 8-bit image."""
        return from_unit_tensor(self.decode(latent, params))

    def lossless(self, image: Image, params: ParamDict) -> Image:
        """Reconstruct an image with no transport in the loop."""
        return self.render(self.quantize(image, params), params)
