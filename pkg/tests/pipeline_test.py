"""Tests for the SemanticSystem class."""

from __future__ import annotations

import numpy as np
import pytest

from semequal import ops
from semequal.codec import ParamDict
from semequal.configuration import Configuration
from semequal.dataio import Image, to_unit_tensor
from semequal.exceptions import CheckpointError
from semequal.gradcheck import grad_check
from semequal.pipeline import SemanticSystem
from semequal.quantizer import to_symbols
from semequal.tensor import Tape, Tensor, backward, float64_mode
from semequal.types.config import SemConfigDict


def test_init(small_cnn_system: SemanticSystem) -> None:
    """Test that the system binds codec, equalizer and quantizer to its configuration."""
    assert small_cnn_system.layout == "channel_map"
    assert small_cnn_system.equalizer is not None
    assert small_cnn_system.equalizer.variant == "none"
    assert small_cnn_system.quantizer.config.mode == "test_round"


def test_token_system_has_no_equalizer(small_token_system: SemanticSystem) -> None:
    """Test that the token codec runs without an equalizer."""
    assert small_token_system.layout == "tokens"
    assert small_token_system.equalizer is None


def test_init_params_deterministic(small_cnn_config_dict: SemConfigDict) -> None:
    """Test that initial parameters depend only on the training seed."""
    first = SemanticSystem(Configuration(small_cnn_config_dict)).init_params()
    second = SemanticSystem(Configuration(small_cnn_config_dict)).init_params()
    small_cnn_config_dict["seeds"] = {"train": 99}
    other = SemanticSystem(Configuration(small_cnn_config_dict)).init_params()

    assert list(first) == list(second)
    for name in first:
        np.testing.assert_array_equal(first[name].data, second[name].data)
    assert any(
        not np.array_equal(first[name].data, other[name].data) for name in first
    )


def test_scale_variant_adds_gain_params(small_cnn_config_dict: SemConfigDict) -> None:
    """Test that equalization parameters join the codec parameters."""
    plain = SemanticSystem(Configuration(small_cnn_config_dict)).init_params()
    small_cnn_config_dict["sem"] = {"variant": "scale"}
    scaled = SemanticSystem(Configuration(small_cnn_config_dict)).init_params()

    assert set(plain) < set(scaled)


def test_check_params(
    small_cnn_system: SemanticSystem,
    small_cnn_params: ParamDict,
) -> None:
    """Test that matching parameters pass and missing or reshaped ones raise."""
    small_cnn_system.check_params(small_cnn_params)

    missing = dict(small_cnn_params)
    removed = next(iter(missing))
    del missing[removed]
    with pytest.raises(CheckpointError, match="missing"):
        small_cnn_system.check_params(missing)

    reshaped = dict(small_cnn_params)
    reshaped[removed] = Tensor(np.zeros((1,) + small_cnn_params[removed].shape))
    with pytest.raises(CheckpointError, match="has shape"):
        small_cnn_system.check_params(reshaped)


def test_quantize_produces_integer_symbols(
    small_cnn_system: SemanticSystem,
    small_cnn_params: ParamDict,
    eval_images: list[Image],
) -> None:
    """Test that one image quantizes to a batch-of-one integer latent."""
    latent = small_cnn_system.quantize(eval_images[0], small_cnn_params)

    assert latent.layout == "channel_map"
    assert latent.batch == 1
    assert latent.item_shape == (4, 4, 4)
    assert to_symbols(latent).dtype == np.int8


def test_lossless_round_trip_shape(
    small_cnn_system: SemanticSystem,
    small_cnn_params: ParamDict,
    eval_images: list[Image],
) -> None:
    """Test that the lossless reconstruction is an image of the input size."""
    reconstruction = small_cnn_system.lossless(eval_images[0], small_cnn_params)

    assert reconstruction.pixels.shape == eval_images[0].pixels.shape
    assert reconstruction.pixels.dtype == np.uint8


def test_token_system_round_trip(
    small_token_system: SemanticSystem,
    eval_images: list[Image],
) -> None:
    """Test that the token system quantizes to (1, tokens, width) and reconstructs."""
    params = small_token_system.init_params()

    latent = small_token_system.quantize(eval_images[0], params)
    reconstruction = small_token_system.render(latent, params)

    assert latent.layout == "tokens"
    assert latent.item_shape == (16, 4)
    assert reconstruction.pixels.shape == (16, 16, 3)


def test_training_loss_reaches_every_parameter(
    small_cnn_config_dict: SemConfigDict,
    eval_images: list[Image],
) -> None:
    """Test that the noisy training loss back-propagates into every parameter."""
    small_cnn_config_dict["sem"] = {"variant": "scale_broadcast", "k": 2}
    system = SemanticSystem(Configuration(small_cnn_config_dict))
    params = system.init_params()
    batch = Tensor(np.stack([np.asarray(to_unit_tensor(image).data) for image in eval_images]))
    names = list(params)

    with Tape() as tape:
        loss = system.training_loss(batch, params, system.training_quantizer())
    grads = backward(tape, loss, [params[name] for name in names])

    assert loss.shape == ()
    assert loss.item() > 0
    for name, grad in zip(names, grads):
        assert grad.shape == params[name].shape
        assert np.all(np.isfinite(grad)), name


@pytest.mark.parametrize("variant", ["none", "scale", "scale_broadcast"])
def test_reconstruction_gradient_check(
    small_cnn_config_dict: SemConfigDict,
    variant: str,
) -> None:
    """Test the taped gradient of the encode, equalize and decode loss against differences."""
    small_cnn_config_dict["sem"] = {"variant": variant}  # type: ignore[typeddict-item]
    system = SemanticSystem(Configuration(small_cnn_config_dict))
    with float64_mode():
        params = system.init_params()
    x = Tensor(np.random.default_rng(21).uniform(size=(1, 3, 16, 16)))

    def reconstruction_loss(images: Tensor) -> Tensor:
        return ops.mse_loss(system.decode(system.encode(images, params), params), images)

    assert grad_check(reconstruction_loss, x) <= 1e-4
