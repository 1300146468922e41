"""Row types of the CSV files written by semequal reports."""

import sys

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing


class LossCurveRow(typing.TypedDict):
    """
    One training epoch.

    Attributes:
        epoch (int): Epoch number, starting at 1.
        mse (float): Mean training loss over the epoch.
    """

    epoch: int
    mse: float


class SweepRow(typing.TypedDict):
    """
    One sweep cell.

    Attributes:
        rate (float): Loss rate.
        trial (int): Trial number.
        image (int): Image index in the evaluation set.
        psnr (float): PSNR of the reconstruction.
        ssim (float): SSIM of the reconstruction.
        lost_units (int): Units erased in this cell.
        total_units (int): Units transmitted in this cell.
    """

    rate: float
    trial: int
    image: int
    psnr: float
    ssim: float
    lost_units: int
    total_units: int


class SweepSummaryRow(typing.TypedDict):
    """
    Aggregates of one loss rate.

    Attributes:
        rate (float): Loss rate.
        mean_psnr (float): Mean PSNR over trials and images.
        std_psnr (float): Standard deviation of PSNR.
        min_psnr (float): Worst PSNR.
        ci95_psnr (float): Half width of the 95% confidence interval of the mean.
        mean_ssim (float): Mean SSIM.
        delta_psnr (float): Mean PSNR minus the lossless mean PSNR.
        retention (float): Mean PSNR divided by the lossless mean PSNR.
        loss_fraction (float): Lost units over transmitted units.
    """

    rate: float
    mean_psnr: float
    std_psnr: float
    min_psnr: float
    ci95_psnr: float
    mean_ssim: float
    delta_psnr: float
    retention: float
    loss_fraction: float


class PerImageRow(typing.TypedDict):
    """
    One image at one loss rate.

    Attributes:
        rate (float): Loss rate.
        image (int): Image index.
        mean_psnr (float): Mean PSNR over trials.
        delta_psnr (float): Mean PSNR minus this image's lossless PSNR.
    """

    rate: float
    image: int
    mean_psnr: float
    delta_psnr: float


class ProfileRow(typing.TypedDict):
    """
    One channel group of an ablation profile.

    Attributes:
        rank (int): 1 for the group whose removal hurts most.
        channel_group (int): Index of the zeroed channel group.
        delta_psnr (float): Mean PSNR change when the group is zeroed.
    """

    rank: int
    channel_group: int
    delta_psnr: float


class DistributionRow(typing.TypedDict):
    """
    One histogram bin.

    Attributes:
        report (str): Label of the distribution.
        bin_left (float): Left bin edge.
        bin_right (float): Right bin edge.
        probability (float): Probability mass of the bin.
    """

    report: str
    bin_left: float
    bin_right: float
    probability: float


LOSS_CURVE_COLUMNS: typing.Final[typing.Tuple[str, ...]] = ("epoch", "mse")
SWEEP_COLUMNS: typing.Final[typing.Tuple[str, ...]] = (
    "rate",
    "trial",
    "image",
    "psnr",
    "ssim",
    "lost_units",
    "total_units",
)
SWEEP_SUMMARY_COLUMNS: typing.Final[typing.Tuple[str, ...]] = (
    "rate",
    "mean_psnr",
    "std_psnr",
    "min_psnr",
    "ci95_psnr",
    "mean_ssim",
    "delta_psnr",
    "retention",
    "loss_fraction",
)
PER_IMAGE_COLUMNS: typing.Final[typing.Tuple[str, ...]] = (
    "rate",
    "image",
    "mean_psnr",
    "delta_psnr",
)
PROFILE_COLUMNS: typing.Final[typing.Tuple[str, ...]] = ("rank", "channel_group", "delta_psnr")
DISTRIBUTION_COLUMNS: typing.Final[typing.Tuple[str, ...]] = (
    "report",
    "bin_left",
    "bin_right",
    "probability",
)
