"""Tests for the CNN and token codecs."""

from __future__ import annotations

import numpy as np
import pytest

from semequal import ops
from semequal.codec import (
    DEFAULT_CNN_LAYERS,
    CnnCodec,
    CnnCodecConfig,
    CnnLayer,
    LatentTensor,
    TokenCodec,
    TokenCodecConfig,
    build_codec,
    cbr,
)
from semequal.exceptions import ConfigError, IncompatibleSize, ShapeMismatch
from semequal.tensor import Tape, Tensor, backward

SMALL_LAYERS = (CnnLayer(4, 3, 2, 1), CnnLayer(8, 3, 2, 1), CnnLayer(4, 1, 1, 0))


def test_default_cnn_shapes() -> None:
    """Test the latent shape and CBR of the default CNN topology."""
    config = CnnCodecConfig()

    assert config.layers == DEFAULT_CNN_LAYERS
    assert config.latent_shape == (16, 16, 16)
    assert config.pre_channels == 64
    assert config.downsample == 4
    assert cbr(config) == pytest.approx(1 / 3)
    assert round(cbr(config), 3) == 0.333


def test_default_token_shapes() -> None:
    """Test the latent shape and CBR of the default token topology."""
    config = TokenCodecConfig()

    assert config.tokens == 64
    assert config.latent_shape == (64, 24)
    assert cbr(config) == 0.125


def test_cbr_of_identity_sized_latent() -> None:
    """Test that a latent as large as the input has CBR 1."""
    config = CnnCodecConfig(layers=(CnnLayer(3, 1, 1, 0),), image_size=8)

    assert cbr(config) == 1.0


def test_cnn_config_rejects_even_kernel() -> None:
    """Test that even kernels are rejected."""
    with pytest.raises(ConfigError):
        CnnCodecConfig(layers=(CnnLayer(4, 4, 2, 1),), image_size=16)


def test_cnn_config_rejects_inexact_downsampling() -> None:
    """Test that a layer must shrink the map exactly by its stride."""
    with pytest.raises(ConfigError):
        CnnCodecConfig(layers=(CnnLayer(4, 5, 2, 0),), image_size=16)


def test_token_config_validation() -> None:
    """Test that patch and head counts must divide their extents."""
    with pytest.raises(ConfigError):
        TokenCodecConfig(patch=5)
    with pytest.raises(ConfigError):
        TokenCodecConfig(dim=10, heads=3)


def test_default_cnn_encode_decode_shapes() -> None:
    """Test that a 64x64 image maps to a 16x16x16 latent and back."""
    codec = CnnCodec(CnnCodecConfig())
    params = codec.init_params(np.random.default_rng(0))
    image = Tensor(np.random.default_rng(1).random((3, 64, 64)))

    latent = codec.encode(image, params)
    decoded = codec.decode(latent, params)

    assert latent.layout == "channel_map"
    assert latent.values.shape == (1, 16, 16, 16)
    assert decoded.shape == (1, 3, 64, 64)


def test_cnn_rejects_wrong_image_size() -> None:
    """Test that a 60x60 input raises IncompatibleSize."""
    codec = CnnCodec(CnnCodecConfig())
    params = codec.init_params(np.random.default_rng(0))

    with pytest.raises(IncompatibleSize):
        codec.encode(Tensor(np.zeros((3, 60, 60))), params)


def test_cnn_decode_zero_latent_is_finite() -> None:
    """Test that decoding the zero latent gives finite values."""
    codec = CnnCodec(CnnCodecConfig(layers=SMALL_LAYERS, image_size=16))
    params = codec.init_params(np.random.default_rng(0))
    decoded = codec.decode(LatentTensor("channel_map", Tensor(np.zeros((1, 4, 4, 4)))), params)

    assert decoded.shape == (1, 3, 16, 16)
    assert np.all(np.isfinite(decoded.data))


def test_cnn_decode_rejects_wrong_latent() -> None:
    """Test that a latent with the wrong channel count raises ShapeMismatch."""
    codec = CnnCodec(CnnCodecConfig())
    params = codec.init_params(np.random.default_rng(0))

    with pytest.raises(ShapeMismatch):
        codec.decode(LatentTensor("channel_map", Tensor(np.zeros((1, 8, 16, 16)))), params)


def test_cnn_parameter_names() -> None:
    """Test the encoder and decoder parameter names and shapes."""
    codec = CnnCodec(CnnCodecConfig(layers=SMALL_LAYERS, image_size=16))
    params = codec.init_params(np.random.default_rng(0))

    assert params["enc.0.w"].shape == (4, 3, 3, 3)
    assert params["enc.2.w"].shape == (4, 8, 1, 1)
    assert params["dec.0.w"].shape == (8, 4, 1, 1)
    assert params["dec.2.w"].shape == (3, 4, 3, 3)
    assert all(tensor.requires_grad for tensor in params.values())


def test_cnn_gradients_reach_every_parameter() -> None:
    """Test that the reconstruction loss depends on every codec parameter."""
    codec = CnnCodec(CnnCodecConfig(layers=SMALL_LAYERS, image_size=16))
    params = codec.init_params(np.random.default_rng(0))
    images = Tensor(np.random.default_rng(1).random((2, 3, 16, 16)))
    with Tape() as tape:
        loss = ops.mse_loss(codec.decode(codec.encode(images, params), params), images)
    grads = backward(tape, loss, list(params.values()))

    assert all(np.any(grad != 0) for grad in grads)


def test_latent_tensor_rank_check() -> None:
    """Test that the latent rank must fit its layout."""
    with pytest.raises(ShapeMismatch):
        LatentTensor("tokens", Tensor(np.zeros((1, 4, 4, 4))))


def test_latent_tensor_real_and_select() -> None:
    """Test scaling by the step and selecting one batch item."""
    latent = LatentTensor("tokens", Tensor(np.arange(8.0).reshape(2, 2, 2)), step=0.5)

    np.testing.assert_allclose(latent.real().data[1, 1], [3.0, 3.5])
    assert latent.select(1).values.shape == (1, 2, 2)
    assert latent.select(1).step == 0.5
    assert latent.batch == 2
    assert latent.item_shape == (2, 2)


def test_token_codec_shapes() -> None:
    """Test the token codec on the default topology."""
    codec = TokenCodec(TokenCodecConfig())
    params = codec.init_params(np.random.default_rng(0))
    image = Tensor(np.random.default_rng(1).random((3, 64, 64)))

    latent, maps = codec.encode_with_attention(image, params)

    assert latent.values.shape == (1, 64, 24)
    assert len(maps) == 2
    assert maps[0].shape == (1, 1, 64, 64)
    np.testing.assert_allclose(maps[0].data.sum(axis=-1), 1.0, rtol=1e-5)
    assert codec.decode(latent, params).shape == (1, 3, 64, 64)


def test_patchify_round_trip() -> None:
    """Test that unpatchify inverts patchify."""
    codec = TokenCodec(TokenCodecConfig(patch=4, image_size=16))
    images = Tensor(np.random.default_rng(2).random((2, 3, 16, 16)))
    patches = codec.patchify(images)

    assert patches.shape == (2, 16, 48)
    np.testing.assert_array_equal(codec.unpatchify(patches).data, images.data)


def test_patchify_orders_patches_row_major() -> None:
    """Test that patch 1 is the second patch of the first row."""
    codec = TokenCodec(TokenCodecConfig(patch=4, image_size=8))
    values = np.zeros((1, 3, 8, 8))
    values[0, :, 0:4, 4:8] = 1.0
    patches = codec.patchify(Tensor(values))

    np.testing.assert_array_equal(patches.data[0, 1], 1.0)
    np.testing.assert_array_equal(patches.data[0, 2], 0.0)


def test_token_codec_rejects_wrong_latent() -> None:
    """Test that a token latent of the wrong width raises ShapeMismatch."""
    codec = TokenCodec(TokenCodecConfig(patch=4, dim=8, blocks=1, out_dim=4, image_size=16))
    params = codec.init_params(np.random.default_rng(0))

    with pytest.raises(ShapeMismatch):
        codec.decode(LatentTensor("tokens", Tensor(np.zeros((1, 16, 5)))), params)


def test_build_codec() -> None:
    """Test that build_codec picks the codec for the topology."""
    assert isinstance(build_codec(CnnCodecConfig()), CnnCodec)
    assert isinstance(build_codec(TokenCodecConfig()), TokenCodec)
