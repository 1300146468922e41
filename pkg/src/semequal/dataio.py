"""
This module provides synthetic images and binary PPM input/output.

The synthetic corpus stands in for a natural image dataset. Every image is a pure
function of the dataset master seed and its index, so two runs with the same
`DatasetSpec` yield byte-identical data.

Classes:
    Image: An 8-bit RGB image.
    DatasetSpec: Description of a synthetic dataset.

Functions:
    image_seed: Per-image seed derived from the master seed.
    generate_image: Render one synthetic image.
    generate_synthetic: Render a whole dataset.
    dataset_manifest: Line-oriented description of a dataset.
    load_ppm / save_ppm: Binary P6 PPM codec.
    read_ppm / write_ppm: File variants of the PPM codec.
    to_unit_tensor / from_unit_tensor: Conversion between images and real tensors.
"""

from __future__ import annotations

import dataclasses
import math
import os
import sys

import numpy as np

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.exceptions import ConfigError, ImageFormatError, UnsupportedFormat
from semequal.rng import GOLDEN_GAMMA, MASK64, Xoshiro256StarStar, splitmix64_mix
from semequal.tensor import Tensor, round_half_away

GeneratorName = typing.Literal[
    "gradient",
    "checkerboard",
    "blobs",
    "value_noise",
    "stripes",
]

GENERATORS: typing.Final[typing.Tuple[GeneratorName, ...]] = (
    "gradient",
    "checkerboard",
    "blobs",
    "value_noise",
    "stripes",
)

_PPM_WHITESPACE = b" \t\r\n"


@dataclasses.dataclass(frozen=True, eq=False)
class Image:
    """
    An RGB image with 8-bit samples.

    Attributes:
        pixels (np.ndarray): Array of shape (height, width, 3) and dtype uint8.
    """

    pixels: np.ndarray

    def __post_init__(self) -> None:
        """Check the pixel layout."""
        if self.pixels.dtype != np.uint8:
            raise ImageFormatError(f"Pixels must be uint8, got {self.pixels.dtype}.")
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ImageFormatError(f"Pixels must be H x W x 3, got {self.pixels.shape}.")

    @property
    def height(self) -> int:
        """Return the number of rows."""
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        """Return the number of columns."""
        return int(self.pixels.shape[1])

    def __eq__(self, other: object) -> bool:
        """Compare pixel values."""
        if not isinstance(other, Image):
            return NotImplemented
        return bool(np.array_equal(self.pixels, other.pixels))

    __hash__ = None  # type: ignore[assignment]


@dataclasses.dataclass(frozen=True)
class DatasetSpec:
    """
    Description of a synthetic dataset.

    Attributes:
        count (int): Number of images.
        size (int): Edge length of the square images.
        seed (int): Master seed.
        weights (tuple[float, ...]): Mixture weights over `GENERATORS`.
    """

    count: int
    size: int = 64
    seed: int = 7
    weights: typing.Tuple[float, ...] = (0.2, 0.2, 0.2, 0.2, 0.2)

    def __post_init__(self) -> None:
        """
        Validate the dataset description.

        Raises:
            ConfigError: If counts, size or weights are invalid.
        """
        if self.count < 0:
            raise ConfigError("`data.count` must be >= 0.")
        if self.size < 8:
            raise ConfigError("`data.size` must be >= 8.")
        if len(self.weights) != len(GENERATORS):
            raise ConfigError(f"`data.weights` needs {len(GENERATORS)} entries.")
        if any(weight < 0 for weight in self.weights):
            raise ConfigError("`data.weights` must be nonnegative.")
        if not math.isclose(sum(self.weights), 1.0, abs_tol=1e-6):
            raise ConfigError("`data.weights` must sum to 1.")


def image_seed(master_seed: int, index: int) -> int:
    """
    Return the seed of image `index`: the (index + 1)-th splitmix64 output.

    Args:
        master_seed (int): The dataset master seed.
        index (int): Image index.

    Returns:
        int: A 64-bit seed.
    """
    return splitmix64_mix((master_seed + (index + 1) * GOLDEN_GAMMA) & MASK64)


def _color(stream: Xoshiro256StarStar) -> np.ndarray:
    return np.array([stream.uniform() for _ in range(3)])


def _grid(size: int) -> typing.Tuple[np.ndarray, np.ndarray]:
    coords = np.arange(size, dtype=np.float64)
    return np.meshgrid(coords, coords, indexing="ij")


def _gradient(stream: Xoshiro256StarStar, size: int, seed: int) -> np.ndarray:
    angle = stream.uniform_range(0, 2 * math.pi)
    start, end = _color(stream), _color(stream)
    rows, cols = _grid(size)
    ramp = cols * math.cos(angle) + rows * math.sin(angle)
    ramp = (ramp - ramp.min()) / max(float(ramp.max() - ramp.min()), 1e-9)
    return start + ramp[..., None] * (end - start)


def _checkerboard(stream: Xoshiro256StarStar, size: int, seed: int) -> np.ndarray:
    cell = (4, 8, 16)[stream.below(3)]
    row_phase, col_phase = stream.below(cell), stream.below(cell)
    first, second = _color(stream), _color(stream)
    rows, cols = _grid(size)
    parity = ((rows + row_phase) // cell + (cols + col_phase) // cell) % 2
    return np.where(parity[..., None] == 0, first, second)


def _blobs(stream: Xoshiro256StarStar, size: int, seed: int) -> np.ndarray:
    canvas = np.broadcast_to(_color(stream), (size, size, 3)).copy()
    rows, cols = _grid(size)
    for _ in range(1 + stream.below(5)):
        center_row = stream.uniform_range(0, size)
        center_col = stream.uniform_range(0, size)
        sigma = stream.uniform_range(3, max(size / 4, 4))
        amplitude = stream.uniform_range(0.4, 1.0)
        tint = _color(stream)
        distance = (rows - center_row) ** 2 + (cols - center_col) ** 2
        weight = amplitude * np.exp(-distance / (2 * sigma * sigma))
        canvas = canvas * (1 - weight[..., None]) + tint * weight[..., None]
    return canvas


def _value_noise(stream: Xoshiro256StarStar, size: int, seed: int) -> np.ndarray:
    cells = (2, 4, 8)[stream.below(3)]
    lattice = np.random.default_rng(seed).random((cells + 1, cells + 1, 3))
    position = np.linspace(0, cells, size)
    base = np.minimum(position.astype(np.int64), cells - 1)
    frac = position - base
    row_base, col_base = np.meshgrid(base, base, indexing="ij")
    row_frac, col_frac = np.meshgrid(frac, frac, indexing="ij")
    row_frac, col_frac = row_frac[..., None], col_frac[..., None]
    top = lattice[row_base, col_base] * (1 - col_frac)
    top = top + lattice[row_base, col_base + 1] * col_frac
    bottom = lattice[row_base + 1, col_base] * (1 - col_frac)
    bottom = bottom + lattice[row_base + 1, col_base + 1] * col_frac
    return top * (1 - row_frac) + bottom * row_frac


def _stripes(stream: Xoshiro256StarStar, size: int, seed: int) -> np.ndarray:
    angle = stream.uniform_range(0, math.pi)
    period = stream.uniform_range(4, size / 2)
    phase = stream.uniform_range(0, 2 * math.pi)
    first, second = _color(stream), _color(stream)
    rows, cols = _grid(size)
    along = cols * math.cos(angle) + rows * math.sin(angle)
    wave = 0.5 + 0.5 * np.sin(2 * math.pi * along / period + phase)
    return first + wave[..., None] * (second - first)


_RENDERERS: typing.Final[
    typing.Mapping[
        GeneratorName,
        typing.Callable[[Xoshiro256StarStar, int, int], np.ndarray],
    ]
] = {
    "gradient": _gradient,
    "checkerboard": _checkerboard,
    "blobs": _blobs,
    "value_noise": _value_noise,
    "stripes": _stripes,
}


def choose_generator(spec: DatasetSpec, stream: Xoshiro256StarStar) -> GeneratorName:
    """Draw a generator name according to the mixture weights."""
    draw = stream.uniform()
    cumulative = 0.0
    for name, weight in zip(GENERATORS, spec.weights):
        cumulative += weight
        if weight > 0 and draw < cumulative:
            return name
    return [name for name, weight in zip(GENERATORS, spec.weights) if weight > 0][-1]


def generate_image(spec: DatasetSpec, index: int) -> typing.Tuple[Image, GeneratorName]:
    """
    Render image `index` of a dataset.

    Args:
        spec (DatasetSpec): The dataset.
        index (int): Image index.

    Returns:
        tuple[Image, GeneratorName]: The image and the generator that drew it.
    """
    seed = image_seed(spec.seed, index)
    stream = Xoshiro256StarStar(seed)
    name = choose_generator(spec, stream)
    values = _RENDERERS[name](stream, spec.size, seed)
    pixels = round_half_away(np.clip(values, 0, 1) * 255).astype(np.uint8)
    return Image(pixels), name


def generate_synthetic(spec: DatasetSpec) -> typing.List[Image]:
    """
    Render every image of a dataset.

    Args:
        spec (DatasetSpec): The dataset.

    Returns:
        list[Image]: `spec.count` images, in index order.
    """
    return [generate_image(spec, index)[0] for index in range(spec.count)]


def dataset_manifest(spec: DatasetSpec) -> str:
    """
    Describe a dataset as one "index<TAB>seed<TAB>generator" line per image.

    Args:
        spec (DatasetSpec): The dataset.

    Returns:
        str: The manifest text, newline terminated when not empty.
    """
    lines = []
    for index in range(spec.count):
        seed = image_seed(spec.seed, index)
        name = choose_generator(spec, Xoshiro256StarStar(seed))
        lines.append(f"{index}\t{seed}\t{name}\n")
    return "".join(lines)


def save_ppm(image: Image) -> bytes:
    """
    Encode an image as binary PPM.

    Args:
        image (Image): The image.

    Returns:
        bytes: "P6\\n<width> <height>\\n255\\n" followed by RGB samples.
    """
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.tobytes()


def _header_tokens(payload: bytes) -> typing.Tuple[typing.List[bytes], int]:
    tokens: typing.List[bytes] = []
    offset = 0
    while len(tokens) < 4:
        if offset >= len(payload):
            raise ImageFormatError("PPM header is truncated.")
        byte = payload[offset : offset + 1]
        if byte == b"#":
            newline = payload.find(b"\n", offset)
            if newline < 0:
                raise ImageFormatError("PPM header is truncated.")
            offset = newline + 1
        elif byte in _PPM_WHITESPACE:
            offset += 1
        else:
            end = offset
            while end < len(payload) and payload[end : end + 1] not in _PPM_WHITESPACE:
                end += 1
            tokens.append(payload[offset:end])
            offset = end
    if offset >= len(payload) or payload[offset : offset + 1] not in _PPM_WHITESPACE:
        raise ImageFormatError("PPM header must end with one whitespace byte.")
    return tokens, offset + 1


def load_ppm(payload: bytes) -> Image:
    """
    Decode a binary PPM.

    Args:
        payload (bytes): The file contents.

    Returns:
        Image: The decoded image.

    Raises:
        UnsupportedFormat: If the magic is not P6 or maxval is not 255.
        ImageFormatError: If the header is malformed or the samples are truncated or padded.
    """
    if payload[:2] != b"P6":
        raise UnsupportedFormat(f"Only binary P6 PPM is supported, got {payload[:2]!r}.")
    tokens, offset = _header_tokens(payload)
    try:
        width, height, maxval = (int(token) for token in tokens[1:])
    except ValueError as error:
        raise ImageFormatError("PPM header fields must be integers.") from error
    if maxval != 255:
        raise UnsupportedFormat(f"Only maxval 255 is supported, got {maxval}.")
    if width < 1 or height < 1:
        raise ImageFormatError("PPM extents must be positive.")
    expected = width * height * 3
    samples = payload[offset:]
    if len(samples) != expected:
        raise ImageFormatError(f"PPM payload holds {len(samples)} of {expected} bytes.")
    pixels = np.frombuffer(samples, dtype=np.uint8).reshape(height, width, 3)
    return Image(pixels.copy())


def read_ppm(path: typing.Union[str, os.PathLike[str]]) -> Image:
    """Read a PPM file."""
    with open(path, "rb") as image_file:
        return load_ppm(image_file.read())


def write_ppm(path: typing.Union[str, os.PathLike[str]], image: Image) -> None:
    """Write a PPM file."""
    with open(path, "wb") as image_file:
        image_file.write(save_ppm(image))


def to_unit_tensor(image: Image) -> Tensor:
    """
    Convert an image to a (3, H, W) tensor with values in [0, 1].

    Args:
        image (Image): The image.

    Returns:
        Tensor: Samples divided by 255, channel-first.
    """
    return Tensor(image.pixels.transpose(2, 0, 1).astype(np.float64) / 255)


def from_unit_tensor(tensor: Tensor) -> Image:
    """
    Convert a (3, H, W) or (1, 3, H, W) tensor back to an image.

    Values are clamped to [0, 1], scaled by 255 and rounded half away from zero.

    Args:
        tensor (Tensor): Real values, channel-first.

    Returns:
        Image: The 8-bit image.

    Raises:
        ImageFormatError: If the tensor is not a single 3-channel image.
    """
    values = np.asarray(tensor.data, dtype=np.float64)
    if values.ndim == 4 and values.shape[0] == 1:
        values = values[0]
    if values.ndim != 3 or values.shape[0] != 3:
        raise ImageFormatError(f"Expected a 3 x H x W tensor, got {tensor.shape}.")
    scaled = round_half_away(np.clip(values, 0, 1) * 255)
    return Image(scaled.transpose(1, 2, 0).astype(np.uint8))
