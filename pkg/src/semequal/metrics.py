"""
This module provides reconstruction quality and distribution metrics.

Classes:
    QualityReport: PSNR and SSIM of a set of images with aggregates.
    DistributionReport: Histogram probabilities and their entropy.

Functions:
    psnr: Peak signal-to-noise ratio of two 8-bit images, capped at 100 dB.
    ssim: Mean structural similarity with an 11x11 Gaussian window.
    entropy: Base-2 entropy of a sample histogram.
    histogram_report: DistributionReport of arbitrary samples.
    channel_stats: Distribution of per-channel spatial means of channel-map latents.
"""

from __future__ import annotations

import dataclasses
import math
import sys

import numpy as np
from scipy.signal import convolve2d

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.codec import LatentTensor
from semequal.dataio import Image
from semequal.exceptions import EmptyInput, ShapeMismatch

PSNR_CAP: typing.Final[float] = 100.0
MAX_VALUE: typing.Final[float] = 255.0
SSIM_WINDOW: typing.Final[int] = 11
SSIM_SIGMA: typing.Final[float] = 1.5
SSIM_C1: typing.Final[float] = (0.01 * MAX_VALUE) ** 2
SSIM_C2: typing.Final[float] = (0.03 * MAX_VALUE) ** 2
CHANNEL_BINS: typing.Final[int] = 64


def _pair(first: Image, second: Image) -> typing.Tuple[np.ndarray, np.ndarray]:
    if first.pixels.shape != second.pixels.shape:
        raise ShapeMismatch(
            f"Images differ in shape: {first.pixels.shape} and {second.pixels.shape}.",
        )
    return first.pixels.astype(np.float64), second.pixels.astype(np.float64)


def psnr(first: Image, second: Image) -> float:
    """
    Return 10 log10(255^2 / MSE), or 100 dB when the images are identical.

    Args:
        first (Image): One image.
        second (Image): The other image, same shape.

    Returns:
        float: PSNR in dB, at most 100.

    Raises:
        ShapeMismatch: If the shapes differ.
    """
    left, right = _pair(first, second)
    mse = float(np.mean((left - right) ** 2))
    if mse == 0:
        return PSNR_CAP
    return min(PSNR_CAP, 10 * math.log10(MAX_VALUE * MAX_VALUE / mse))


def _gaussian_window() -> np.ndarray:
    offsets = np.arange(SSIM_WINDOW) - SSIM_WINDOW // 2
    profile = np.exp(-(offsets**2) / (2 * SSIM_SIGMA * SSIM_SIGMA))
    profile /= profile.sum()
    return np.outer(profile, profile)


def _ssim_plane(left: np.ndarray, right: np.ndarray, window: np.ndarray) -> float:
    def local(values: np.ndarray) -> np.ndarray:
        return convolve2d(values, window, mode="valid")

    mean_left, mean_right = local(left), local(right)
    var_left = local(left * left) - mean_left * mean_left
    var_right = local(right * right) - mean_right * mean_right
    covariance = local(left * right) - mean_left * mean_right
    numerator = (2 * mean_left * mean_right + SSIM_C1) * (2 * covariance + SSIM_C2)
    denominator = (mean_left**2 + mean_right**2 + SSIM_C1) * (var_left + var_right + SSIM_C2)
    return float(np.mean(numerator / denominator))


def ssim(first: Image, second: Image) -> float:
    """
    Return the mean local SSIM averaged over the three color channels.

    Args:
        first (Image): One image.
        second (Image): The other image, same shape, both extents >= 11.

    Returns:
        float: SSIM in [-1, 1]; exactly 1 for identical images.

    Raises:
        ShapeMismatch: If the shapes differ or the images are smaller than the window.
    """
    left, right = _pair(first, second)
    if min(left.shape[:2]) < SSIM_WINDOW:
        raise ShapeMismatch(f"SSIM needs extents >= {SSIM_WINDOW}, got {left.shape[:2]}.")
    window = _gaussian_window()
    planes = [_ssim_plane(left[..., plane], right[..., plane], window) for plane in range(3)]
    return float(np.mean(planes))


def entropy(samples: typing.Sequence[float], bins: int) -> float:
    """
    Return the base-2 entropy of the histogram of `samples`.

    Args:
        samples (Sequence[float]): The samples.
        bins (int): Number of equal-width bins over the observed range.

    Returns:
        float: Entropy in bits, with 0 log 0 taken as 0.

    Raises:
        EmptyInput: If there are no samples.
        ValueError: If bins < 1.
    """
    return histogram_report(samples, bins).entropy


@dataclasses.dataclass(frozen=True, eq=False)
class DistributionReport:
    """
    A normalized histogram.

    Attributes:
        label (str): What was measured.
        edges (np.ndarray): bins + 1 bin edges.
        probabilities (np.ndarray): Probability per bin, summing to 1.
        entropy (float): Base-2 entropy of the probabilities.
    """

    label: str
    edges: np.ndarray
    probabilities: np.ndarray
    entropy: float

    @property
    def modal_mass(self) -> float:
        """Return the probability of the most populated bin."""
        return float(self.probabilities.max())

    @property
    def modal_bin(self) -> typing.Tuple[float, float]:
        """Return the edges of the most populated bin."""
        position = int(np.argmax(self.probabilities))
        return float(self.edges[position]), float(self.edges[position + 1])


def histogram_report(
    samples: typing.Sequence[float],
    bins: int,
    label: str = "samples",
) -> DistributionReport:
    """
    Histogram samples over their observed range.

    Args:
        samples (Sequence[float]): The samples.
        bins (int): Number of bins.
        label (str): Report label.

    Returns:
        DistributionReport: Probabilities and entropy.

    Raises:
        EmptyInput: If there are no samples.
        ValueError: If bins < 1.
    """
    values = np.asarray(samples, dtype=np.float64).reshape(-1)
    if values.size == 0:
        raise EmptyInput("Entropy of an empty sample set is undefined.")
    if bins < 1:
        raise ValueError("`bins` must be >= 1.")
    counts, edges = np.histogram(values, bins=bins)
    probabilities = counts / counts.sum()
    occupied = probabilities[probabilities > 0]
    bits = float(-np.sum(occupied * np.log2(occupied)))
    return DistributionReport(label, edges, probabilities, max(bits, 0.0))


def channel_means(latents: typing.Sequence[LatentTensor]) -> np.ndarray:
    """
    Return the spatial mean of every channel of every latent, pooled.

    Raises:
        EmptyInput: If there are no latents.
        ShapeMismatch: If a latent is not a channel map or shapes differ.
    """
    if not latents:
        raise EmptyInput("No latents to summarize.")
    shapes = {latent.item_shape for latent in latents}
    if len(shapes) > 1 or any(latent.layout != "channel_map" for latent in latents):
        raise ShapeMismatch("Channel statistics need channel-map latents of one shape.")
    pooled = [np.asarray(latent.real().data).mean(axis=(2, 3)).reshape(-1) for latent in latents]
    return np.concatenate(pooled)


def channel_stats(
    latents: typing.Sequence[LatentTensor],
    label: str = "channel_means",
) -> DistributionReport:
    """
    Histogram the per-channel spatial means of channel-map latents over 64 bins.

    Args:
        latents (Sequence[LatentTensor]): Latents of one shape.
        label (str): Report label.

    Returns:
        DistributionReport: The channel-mean distribution and its entropy.
    """
    return histogram_report(channel_means(latents), CHANNEL_BINS, label)


@dataclasses.dataclass(frozen=True)
class QualityReport:
    """
    Per-image quality and its aggregates.

    Attributes:
        psnr (tuple[float, ...]): Per-image PSNR in dB.
        ssim (tuple[float, ...]): Per-image SSIM.
        baseline_psnr (float | None): Mean lossless PSNR the delta refers to.
    """

    psnr: typing.Tuple[float, ...]
    ssim: typing.Tuple[float, ...]
    baseline_psnr: typing.Union[float, None] = None

    @classmethod
    def measure(
        cls,
        originals: typing.Sequence[Image],
        reconstructions: typing.Sequence[Image],
        baseline_psnr: typing.Union[float, None] = None,
    ) -> QualityReport:
        """Measure PSNR and SSIM image by image."""
        if len(originals) != len(reconstructions):
            raise ShapeMismatch("Originals and reconstructions differ in count.")
        return cls(
            tuple(psnr(first, second) for first, second in zip(originals, reconstructions)),
            tuple(ssim(first, second) for first, second in zip(originals, reconstructions)),
            baseline_psnr,
        )

    @property
    def mean_psnr(self) -> float:
        """Return the mean PSNR."""
        return float(np.mean(self.psnr))

    @property
    def std_psnr(self) -> float:
        """Return the population standard deviation of PSNR."""
        return float(np.std(self.psnr))

    @property
    def min_psnr(self) -> float:
        """Return the worst PSNR."""
        return float(np.min(self.psnr))

    @property
    def mean_ssim(self) -> float:
        """Return the mean SSIM."""
        return float(np.mean(self.ssim))

    @property
    def delta_psnr(self) -> float:
        """Return mean PSNR with loss minus the lossless baseline (0 without one)."""
        if self.baseline_psnr is None:
            return 0.0
        return self.mean_psnr - self.baseline_psnr
