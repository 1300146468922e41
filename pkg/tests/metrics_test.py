"""Tests for image quality and distribution metrics."""

from __future__ import annotations

import math

import numpy as np
import pytest

from semequal.codec import LatentTensor
from semequal.dataio import Image
from semequal.exceptions import EmptyInput, ShapeMismatch
from semequal.metrics import (
    QualityReport,
    channel_means,
    channel_stats,
    entropy,
    histogram_report,
    psnr,
    ssim,
)
from semequal.tensor import Tensor


def _constant(value: int, size: int = 16) -> Image:
    return Image(np.full((size, size, 3), value, dtype=np.uint8))


def _pattern(size: int = 32) -> Image:
    rng = np.random.default_rng(0)
    dark = rng.integers(0, 90, size=(size, size, 3))
    light = rng.integers(165, 256, size=(size, size, 3))
    mask = rng.random((size, size, 1)) < 0.5
    return Image(np.where(mask, dark, light).astype(np.uint8))


def _channel_latent(means: np.ndarray) -> LatentTensor:
    return LatentTensor("channel_map", Tensor(means.reshape(1, -1, 1, 1)))


def test_psnr_identical_is_capped() -> None:
    """Test that identical images score the 100 dB cap."""
    assert psnr(_constant(40), _constant(40)) == 100.0


def test_psnr_endpoints() -> None:
    """Test PSNR at MSE = 255^2 and MSE = 1."""
    assert psnr(_constant(0), _constant(255)) == pytest.approx(0.0)
    assert psnr(_constant(10), _constant(11)) == pytest.approx(48.13, abs=0.01)
    assert psnr(_constant(10), _constant(11)) == pytest.approx(10 * math.log10(65025))


def test_psnr_shape_mismatch() -> None:
    """Test that images of different shapes raise ShapeMismatch."""
    with pytest.raises(ShapeMismatch):
        psnr(_constant(0, 16), _constant(0, 17))


def test_ssim_identical() -> None:
    """Test that identical images have SSIM 1."""
    image = _pattern()

    assert ssim(image, image) == pytest.approx(1.0)
    assert ssim(_constant(90), _constant(90)) == pytest.approx(1.0)


def test_ssim_negative_image() -> None:
    """Test that an image against its negative scores below 0.5."""
    image = _pattern()
    negative = Image(255 - image.pixels)

    assert ssim(image, negative) < 0.5


def test_ssim_needs_window_sized_images() -> None:
    """Test that images smaller than the window raise ShapeMismatch."""
    with pytest.raises(ShapeMismatch):
        ssim(_constant(0, 8), _constant(0, 8))


def test_entropy_values() -> None:
    """Test entropy of uniform, constant and two-bin samples."""
    assert entropy([0, 1, 2, 3], 4) == pytest.approx(2.0)
    assert entropy([5, 5, 5, 5], 8) == 0.0
    expected = -(1 / 3 * math.log2(1 / 3) + 2 / 3 * math.log2(2 / 3))
    assert entropy([0, 0, 1, 1, 1, 1], 2) == pytest.approx(expected)
    assert entropy([0, 0, 1, 1, 1, 1], 2) == pytest.approx(0.918, abs=1e-3)


def test_entropy_rejects_bad_input() -> None:
    """Test that empty samples and bins < 1 are rejected."""
    with pytest.raises(EmptyInput):
        entropy([], 4)
    with pytest.raises(ValueError):
        entropy([1.0], 0)


def test_histogram_report() -> None:
    """Test the modal bin and probabilities of a report."""
    report = histogram_report([0.0, 0.1, 0.2, 3.9, 4.0], 4, label="demo")

    assert report.label == "demo"
    assert report.edges.size == 5
    assert report.probabilities.sum() == pytest.approx(1.0)
    assert report.modal_mass == pytest.approx(0.6)
    assert report.modal_bin == (0.0, 1.0)


def test_channel_stats_of_zero_latents() -> None:
    """Test that all-zero latents occupy one bin."""
    report = channel_stats([_channel_latent(np.zeros(16)) for _ in range(3)])

    assert report.entropy == 0.0
    assert report.modal_mass == 1.0


def test_channel_stats_of_uniform_means() -> None:
    """Test that uniformly drawn channel means approach log2(64) bits."""
    rng = np.random.default_rng(1)
    latents = [_channel_latent(rng.uniform(-1, 1, size=64)) for _ in range(200)]

    assert channel_stats(latents).entropy > 5.9


def test_channel_stats_of_dominant_channel() -> None:
    """Test that one dominant channel concentrates the mass."""
    means = np.zeros(32)
    means[0] = 5.0
    report = channel_stats([_channel_latent(means)])

    assert report.entropy < 0.25
    assert report.modal_mass > 0.95


def test_channel_means_use_step() -> None:
    """Test that channel means are taken on the real-valued latent."""
    latent = LatentTensor("channel_map", Tensor(np.full((1, 2, 2, 2), 8.0)), step=0.25)

    np.testing.assert_allclose(channel_means([latent]), [2.0, 2.0])


def test_channel_means_reject_tokens() -> None:
    """Test that token latents have no channel statistics."""
    with pytest.raises(ShapeMismatch):
        channel_means([LatentTensor("tokens", Tensor(np.zeros((1, 4, 3))))])
    with pytest.raises(EmptyInput):
        channel_means([])


def test_quality_report() -> None:
    """Test the aggregates of a quality report."""
    report = QualityReport((30.0, 34.0), (0.8, 0.9), baseline_psnr=35.0)

    assert report.mean_psnr == 32.0
    assert report.std_psnr == 2.0
    assert report.min_psnr == 30.0
    assert report.mean_ssim == pytest.approx(0.85)
    assert report.delta_psnr == -3.0
    assert QualityReport((30.0,), (0.8,)).delta_psnr == 0.0


def test_quality_report_measure() -> None:
    """Test measuring a batch of reconstructions."""
    image = _pattern()
    report = QualityReport.measure([image, image], [image, image])

    assert report.psnr == (100.0, 100.0)
    assert report.mean_ssim == pytest.approx(1.0)
    with pytest.raises(ShapeMismatch):
        QualityReport.measure([image], [])
