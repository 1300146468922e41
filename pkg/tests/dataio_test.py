"""Tests for synthetic images and the PPM codec."""

from __future__ import annotations

import pathlib

import numpy as np
import pytest

from semequal.dataio import (
    GENERATORS,
    DatasetSpec,
    Image,
    dataset_manifest,
    from_unit_tensor,
    generate_image,
    generate_synthetic,
    image_seed,
    load_ppm,
    read_ppm,
    save_ppm,
    to_unit_tensor,
    write_ppm,
)
from semequal.exceptions import ConfigError, ImageFormatError, UnsupportedFormat
from semequal.rng import SplitMix64
from semequal.tensor import Tensor


def _white(height: int, width: int) -> Image:
    return Image(np.full((height, width, 3), 255, dtype=np.uint8))


def test_image_rejects_bad_layout() -> None:
    """Test that images must be uint8 H x W x 3."""
    with pytest.raises(ImageFormatError):
        Image(np.zeros((4, 4, 3), dtype=np.float32))
    with pytest.raises(ImageFormatError):
        Image(np.zeros((4, 4), dtype=np.uint8))


def test_dataset_spec_validation() -> None:
    """Test that invalid dataset settings raise ConfigError."""
    with pytest.raises(ConfigError):
        DatasetSpec(count=-1)
    with pytest.raises(ConfigError):
        DatasetSpec(count=1, size=4)
    with pytest.raises(ConfigError):
        DatasetSpec(count=1, weights=(0.5, 0.5))
    with pytest.raises(ConfigError):
        DatasetSpec(count=1, weights=(0.5, 0.5, 0.5, 0.0, 0.0))


def test_image_seed_is_splitmix_output() -> None:
    """Test that image i uses the (i + 1)-th splitmix64 output of the master seed."""
    generator = SplitMix64(7)
    expected = [generator.next() for _ in range(3)]

    assert [image_seed(7, index) for index in range(3)] == expected


def test_empty_dataset() -> None:
    """Test that a dataset of zero images is empty."""
    assert generate_synthetic(DatasetSpec(count=0)) == []
    assert dataset_manifest(DatasetSpec(count=0)) == ""


def test_generation_is_deterministic() -> None:
    """Test that the same spec gives byte-identical images."""
    spec = DatasetSpec(count=4, size=16, seed=11)
    first = generate_synthetic(spec)
    second = generate_synthetic(spec)

    assert [save_ppm(image) for image in first] == [save_ppm(image) for image in second]
    assert all(image.height == 16 and image.width == 16 for image in first)


def test_generation_depends_on_seed() -> None:
    """Test that a different master seed changes the images."""
    first = generate_synthetic(DatasetSpec(count=2, size=16, seed=1))
    second = generate_synthetic(DatasetSpec(count=2, size=16, seed=2))

    assert first != second


@pytest.mark.parametrize("generator", GENERATORS)
def test_single_generator_weights(generator: str) -> None:
    """Test that a one-hot mixture only draws from that generator."""
    weights = tuple(1.0 if name == generator else 0.0 for name in GENERATORS)
    spec = DatasetSpec(count=3, size=16, weights=weights)

    assert {generate_image(spec, index)[1] for index in range(3)} == {generator}


def test_manifest_lines() -> None:
    """Test the manifest format."""
    spec = DatasetSpec(count=2, size=16, seed=5)
    lines = dataset_manifest(spec).splitlines()

    assert len(lines) == 2
    index, seed, generator = lines[1].split("\t")
    assert index == "1"
    assert int(seed) == image_seed(5, 1)
    assert generator == generate_image(spec, 1)[1]


def test_save_ppm_exact_bytes() -> None:
    """Test the encoding of a 2x1 white image."""
    assert save_ppm(_white(1, 2)) == b"P6\n2 1\n255\n" + b"\xff" * 6


def test_ppm_file_round_trip(tmp_path: pathlib.Path) -> None:
    """Test writing and reading back a generated image."""
    image = generate_image(DatasetSpec(count=1, size=16), 0)[0]
    path = tmp_path / "image.ppm"
    write_ppm(path, image)

    assert read_ppm(path) == image


def test_load_ppm_with_comments() -> None:
    """Test that header comments are skipped."""
    payload = b"P6\n# made by hand\n2 1\n# maxval next\n255\n" + b"\x00\x01\x02\x03\x04\x05"
    image = load_ppm(payload)

    assert image.width == 2
    assert image.height == 1
    np.testing.assert_array_equal(image.pixels[0, 1], [3, 4, 5])


def test_load_ppm_ascii_variant() -> None:
    """Test that the ASCII P3 variant is unsupported."""
    with pytest.raises(UnsupportedFormat):
        load_ppm(b"P3\n1 1\n255\n255 255 255\n")


def test_load_ppm_bad_maxval() -> None:
    """Test that a maxval other than 255 is unsupported."""
    with pytest.raises(UnsupportedFormat):
        load_ppm(b"P6\n1 1\n65535\n" + b"\x00" * 6)


def test_load_ppm_truncated() -> None:
    """Test that missing samples raise ImageFormatError."""
    with pytest.raises(ImageFormatError):
        load_ppm(b"P6\n2 2\n255\n" + b"\x00" * 5)
    with pytest.raises(ImageFormatError):
        load_ppm(b"P6\n2 2")


def test_load_ppm_trailing_bytes() -> None:
    """Test that samples past the last pixel raise ImageFormatError."""
    with pytest.raises(ImageFormatError, match="7 of 6 bytes"):
        load_ppm(b"P6\n2 1\n255\n" + b"\x00" * 7)


def test_unit_tensor_round_trip() -> None:
    """Test that pixel 255 maps to 1.0 and back."""
    tensor = to_unit_tensor(_white(2, 3))

    assert tensor.shape == (3, 2, 3)
    np.testing.assert_allclose(tensor.data, 1.0)
    assert from_unit_tensor(tensor) == _white(2, 3)


def test_from_unit_tensor_clamps_and_rounds() -> None:
    """Test saturation above 1 and rounding half away from zero."""
    values = np.zeros((1, 3, 1, 3))
    values[0, :, 0, 0] = 1.7
    values[0, :, 0, 1] = 0.5
    values[0, :, 0, 2] = -0.3
    image = from_unit_tensor(Tensor(values))

    np.testing.assert_array_equal(image.pixels[0, :, 0], [255, 128, 0])


def test_from_unit_tensor_rejects_batches() -> None:
    """Test that only a single 3-channel image converts."""
    with pytest.raises(ImageFormatError):
        from_unit_tensor(Tensor(np.zeros((2, 3, 4, 4))))
