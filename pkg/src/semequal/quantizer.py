"""
Scalar quantization of latents.

Training adds uniform noise in place of rounding so gradients flow; evaluation rounds
half away from zero and clamps to the symbol range. Both work in the scaled domain
(latent * factor) and return a latent whose `step` is 1 / factor.

Classes:
    QuantizerConfig: Mode, clamp and scale factor.
    Quantizer: Stateful quantizer owning the noise stream.
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
from semequal.codec import LatentTensor
from semequal.exceptions import ConfigError
from semequal.tensor import Tensor, round_half_away

QuantizeMode = typing.Literal["train_noise", "test_round"]


@dataclasses.dataclass(frozen=True)
class QuantizerConfig:
    """
    Quantizer settings.

    Attributes:
        mode (QuantizeMode): `train_noise` or `test_round`.
        clamp (int): Symbols are clamped to [-clamp, clamp] in test mode.
        factor (float): Latents are multiplied by this before quantization.
        seed (int): Seed of the training noise stream.
    """

    mode: QuantizeMode = "test_round"
    clamp: int = 127
    factor: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate the settings."""
        if self.mode not in ("train_noise", "test_round"):
            raise ConfigError(f"Unknown quantizer mode {self.mode!r}.")
        if not 1 <= self.clamp <= 127:
            raise ConfigError("`quant.clamp` must lie in [1, 127].")
        if self.factor <= 0:
            raise ConfigError("`sem.quant_factor` must be positive.")


class Quantizer:
    """
    Quantizer with its own noise stream.

    Attributes:
        config (QuantizerConfig): The settings.
    """

    def __init__(self, config: QuantizerConfig) -> None:
        """Initialize the quantizer and seed its noise stream."""
        self.config = config
        self._rng = np.random.default_rng(config.seed)

    def noise(self, shape: typing.Tuple[int, ...]) -> np.ndarray:
        """Draw i.i.d. U(-0.5, 0.5) noise."""
        return self._rng.random(shape) - 0.5

    def quantize(
        self,
        latent: LatentTensor,
        mode: typing.Union[QuantizeMode, None] = None,
    ) -> LatentTensor:
        """
        Quantize a latent.

        Args:
            latent (LatentTensor): The real-valued latent (`step` 1).
            mode (QuantizeMode | None): Overrides the configured mode.

        Returns:
            LatentTensor: Symbols in the scaled domain with `step` = 1 / factor. In
                train mode the result stays on the tape.
        """
        active_mode = mode or self.config.mode
        scaled = latent.values
        if self.config.factor != 1.0:
            scaled = ops.scale(scaled, self.config.factor)
        step = 1.0 / self.config.factor

        if active_mode == "train_noise":
            noisy = ops.add(scaled, ops.constant(self.noise(scaled.shape)))
            return LatentTensor(latent.layout, noisy, step)

        symbols = np.clip(
            round_half_away(np.asarray(scaled.data)),
            -self.config.clamp,
            self.config.clamp,
        )
        return LatentTensor(latent.layout, Tensor(symbols), step)


def to_symbols(latent: LatentTensor) -> np.ndarray:
    """
    Return the integer symbols of a test-quantized latent.

    Args:
        latent (LatentTensor): Output of test-mode quantization.

    Returns:
        np.ndarray: int8 symbols with the latent's shape.
    """
    return np.asarray(latent.values.data).astype(np.int8)


def from_symbols(
    layout: typing.Literal["channel_map", "tokens"],
    symbols: np.ndarray,
    step: float,
) -> LatentTensor:
    """Wrap int8 symbols back into a latent with the given step."""
    return LatentTensor(layout, Tensor(symbols.astype(np.float64)), step)
