"""
This module runs the experiments of a semantic transmission system.

Classes:
    TrainResult: Trained parameters and the loss curve.
    SweepResult: Per-cell quality of a loss-rate sweep and its aggregates.
    ProfileResult: Per-channel-group ablation table.
    SimulationResult: One image sent through the full chain, with its stage log.
    UdpDemoResult: Loopback transmission compared with the simulated channel.

Functions:
    train: Fit codec and equalizer parameters on the synthetic training set.
    sweep: Measure reconstruction quality over loss rates and trials.
    profile_channels: Zero one channel group at a time and record the PSNR change.
    distribution_report: Latent value distributions of the evaluation set.
    simulate: Send one image through partition, transport and the channel.
    error_map: Amplified per-pixel absolute error of a reconstruction.
    channel_mosaic: Grayscale tiles of every latent channel.
    udp_demo: Send one image over loopback UDP with sender-side drops.

Every random draw comes from the three master seeds: batching and noise from the
training seed, permutations and losses from the channel seed keyed by the cell.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import math
import sys

import numpy as np

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.channel import ChannelModel
from semequal.codec import LatentTensor, ParamDict
from semequal.dataio import Image, generate_synthetic, to_unit_tensor
from semequal.exceptions import ConfigError, EmptyInput, NonFiniteError, TrainingDiverged
from semequal.logger import logger
from semequal.metrics import (
    DistributionReport,
    QualityReport,
    channel_stats,
    histogram_report,
    psnr,
    ssim,
)
from semequal.optim import AdamState
from semequal.packet import frame
from semequal.partition import PartitionSpec, aggregate, partition
from semequal.pipeline import SemanticSystem
from semequal.quantizer import to_symbols
from semequal.rng import derive_seed
from semequal.tensor import Tape, Tensor, backward
from semequal.transport import group, transmit, ungroup
from semequal.types.report import (
    LossCurveRow,
    PerImageRow,
    ProfileRow,
    SweepRow,
    SweepSummaryRow,
)
from semequal.udp import UdpReceiver, udp_send

CI95_Z: typing.Final[float] = 1.96
ERROR_GAIN: typing.Final[int] = 4
DISTRIBUTION_TOKENS: typing.Final[int] = 4
BATCH_STREAM: typing.Final[int] = 1
TOKEN_STREAM: typing.Final[int] = 2
PERMUTATION_STREAM: typing.Final[int] = 3
SIMULATION_KEY: typing.Final[typing.Tuple[int, ...]] = (0,)


@dataclasses.dataclass(frozen=True)
class TrainResult:
    """
    Output of `train`.

    Attributes:
        params (ParamDict): The trained parameters.
        loss_curve (list[LossCurveRow]): Mean training MSE per epoch.
    """

    params: ParamDict
    loss_curve: typing.List[LossCurveRow]


def _stack_images(images: typing.Sequence[Image]) -> np.ndarray:
    return np.stack([np.asarray(to_unit_tensor(image).data) for image in images])


def train(
    system: SemanticSystem,
    images: typing.Union[typing.Sequence[Image], None] = None,
) -> TrainResult:
    """
    Train the system end to end over a lossless channel.

    Each step encodes a batch, equalizes, adds uniform quantization noise, decodes
    and takes one Adam step on the reconstruction MSE.

    Args:
        system (SemanticSystem): The system to train.
        images (Sequence[Image] | None): Training images; None generates the
            configured synthetic set.

    Returns:
        TrainResult: Parameters after the last epoch and the loss curve.

    Raises:
        TrainingDiverged: If a loss or an update becomes non-finite.
    """
    settings = system.config.train
    params = system.init_params()
    if settings.epochs == 0:
        return TrainResult(params, [])

    if images is None:
        images = generate_synthetic(system.config.dataset)
    if not images:
        raise EmptyInput("Training needs at least one image.")
    pixels = _stack_images(images)
    optimizer = AdamState(lr=settings.lr)
    quantizer = system.training_quantizer()
    batches = np.random.default_rng([system.config.seeds.train, BATCH_STREAM])
    names = list(params)

    curve: typing.List[LossCurveRow] = []
    for epoch in range(1, settings.epochs + 1):
        order = batches.permutation(len(pixels))
        losses = []
        for start in range(0, len(order), settings.batch):
            batch = Tensor(pixels[order[start : start + settings.batch]])
            try:
                with Tape() as tape:
                    loss = system.training_loss(batch, params, quantizer)
                grads = backward(tape, loss, [params[name] for name in names])
                params = optimizer.step(params, dict(zip(names, grads)))
            except NonFiniteError as error:
                raise TrainingDiverged(
                    f"Training diverged in epoch {epoch} at batch offset {start}"
                    + f" (last finite loss {losses[-1] if losses else 'none'}): {error}",
                ) from error
            losses.append(loss.item())
            logger.debug("epoch %d offset %d loss %.6f", epoch, start, losses[-1])
        mean_loss = float(np.mean(losses))
        logger.info("epoch %d mse %.6f", epoch, mean_loss)
        curve.append(LossCurveRow(epoch=epoch, mse=mean_loss))
    return TrainResult(params, curve)


def _exact_mask(count: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    erased = int(math.floor(rate * count + 0.5))
    mask = np.ones(count, dtype=bool)
    mask[rng.choice(count, size=erased, replace=False)] = False
    return mask


def _receive(
    system: SemanticSystem,
    latent: LatentTensor,
    model: ChannelModel,
    key: typing.Tuple[int, ...],
) -> typing.Tuple[LatentTensor, int]:
    """Send one latent through the configured erasure and return it with the unit loss count."""
    spec = system.config.partition
    units = partition(latent, spec)
    if system.config.evaluation.erasure == "exact":
        mask = _exact_mask(len(units), model.mean_loss, model.stream(*key))
    else:
        packets = group(
            units,
            derive_seed(system.config.seeds.channel, PERMUTATION_STREAM, *key),
            system.config.units_per_packet,
            spec,
            session=system.config.transport.session,
            interleave=system.config.transport.interleave,
        )
        received = ungroup(transmit(packets, model, *key), spec)
        units, mask = received.units, received.mask
    rebuilt = aggregate(units, mask, spec, latent.step)
    return rebuilt, int(spec.unit_count - np.count_nonzero(mask))


@dataclasses.dataclass(frozen=True)
class SweepResult:
    """
    Per-cell quality of a sweep.

    Attributes:
        rows (tuple[SweepRow, ...]): One row per (rate, trial, image), in that order.
        lossless_psnr (tuple[float, ...]): Lossless PSNR per image.
        lossless_ssim (tuple[float, ...]): Lossless SSIM per image.
    """

    rows: typing.Tuple[SweepRow, ...]
    lossless_psnr: typing.Tuple[float, ...]
    lossless_ssim: typing.Tuple[float, ...]

    @property
    def rates(self) -> typing.List[float]:
        """Return the swept rates in sweep order."""
        return list(dict.fromkeys(row["rate"] for row in self.rows))

    @property
    def baseline_psnr(self) -> float:
        """Return the mean lossless PSNR."""
        return float(np.mean(self.lossless_psnr))

    def rows_at(self, rate: float) -> typing.List[SweepRow]:
        """Return the rows of one rate."""
        return [row for row in self.rows if row["rate"] == rate]

    def quality(self, rate: float) -> QualityReport:
        """Return the pooled quality at one rate against the lossless baseline."""
        rows = self.rows_at(rate)
        return QualityReport(
            tuple(row["psnr"] for row in rows),
            tuple(row["ssim"] for row in rows),
            self.baseline_psnr,
        )

    def summary(self) -> typing.List[SweepSummaryRow]:
        """
        Aggregate every rate over trials and images.

        Returns:
            list[SweepSummaryRow]: One row per rate.
        """
        summary: typing.List[SweepSummaryRow] = []
        baseline = self.baseline_psnr
        for rate in self.rates:
            rows = self.rows_at(rate)
            report = self.quality(rate)
            lost = sum(row["lost_units"] for row in rows)
            total = sum(row["total_units"] for row in rows)
            summary.append(
                SweepSummaryRow(
                    rate=rate,
                    mean_psnr=report.mean_psnr,
                    std_psnr=report.std_psnr,
                    min_psnr=report.min_psnr,
                    ci95_psnr=CI95_Z * report.std_psnr / math.sqrt(len(rows)),
                    mean_ssim=report.mean_ssim,
                    delta_psnr=report.delta_psnr,
                    retention=report.mean_psnr / baseline if baseline else 0.0,
                    loss_fraction=lost / total if total else 0.0,
                ),
            )
        return summary

    def per_image(self) -> typing.List[PerImageRow]:
        """
        Mean PSNR of every image at every rate, relative to its lossless PSNR.

        Returns:
            list[PerImageRow]: One row per (rate, image).
        """
        table: typing.List[PerImageRow] = []
        for rate in self.rates:
            rows = self.rows_at(rate)
            for image, lossless in enumerate(self.lossless_psnr):
                values = [row["psnr"] for row in rows if row["image"] == image]
                mean_value = float(np.mean(values))
                table.append(
                    PerImageRow(
                        rate=rate,
                        image=image,
                        mean_psnr=mean_value,
                        delta_psnr=mean_value - lossless,
                    ),
                )
        return table


def _evaluation_images(
    system: SemanticSystem,
    images: typing.Union[typing.Sequence[Image], None],
) -> typing.Sequence[Image]:
    if images is None:
        return generate_synthetic(system.config.eval_dataset)
    return images


def sweep(
    system: SemanticSystem,
    params: ParamDict,
    images: typing.Union[typing.Sequence[Image], None] = None,
    rates: typing.Union[typing.Sequence[float], None] = None,
    trials: typing.Union[int, None] = None,
) -> SweepResult:
    """
    Measure PSNR and SSIM for every loss rate, trial and image.

    Every cell draws its permutation and its losses from its own stream keyed by
    (rate position, trial, image), so results do not depend on scheduling.

    Args:
        system (SemanticSystem): The system.
        params (ParamDict): Trained parameters.
        images (Sequence[Image] | None): Evaluation images; None generates the
            configured held-out set.
        rates (Sequence[float] | None): Loss rates; None uses `eval.rates`.
        trials (int | None): Trials per image and rate; None uses `eval.trials`.

    Returns:
        SweepResult: |rates| x trials x images rows.

    Raises:
        ConfigError: If the channel cannot reach a rate.
    """
    images = _evaluation_images(system, images)
    rates = list(system.config.evaluation.rates if rates is None else rates)
    trials = system.config.evaluation.trials if trials is None else trials
    models = [system.config.channel.with_rate(rate) for rate in rates]

    latents = [system.quantize(image, params) for image in images]
    lossless = [system.render(latent, params) for latent in latents]
    lossless_psnr = tuple(psnr(image, out) for image, out in zip(images, lossless))
    lossless_ssim = tuple(ssim(image, out) for image, out in zip(images, lossless))

    cells = [
        (position, trial, image_index)
        for position in range(len(rates))
        for trial in range(trials)
        for image_index in range(len(images))
    ]

    def run_cell(cell: typing.Tuple[int, int, int]) -> SweepRow:
        position, trial, image_index = cell
        rebuilt, lost = _receive(system, latents[image_index], models[position], cell)
        reconstruction = system.render(rebuilt, params)
        original = images[image_index]
        return SweepRow(
            rate=rates[position],
            trial=trial,
            image=image_index,
            psnr=psnr(original, reconstruction),
            ssim=ssim(original, reconstruction),
            lost_units=lost,
            total_units=system.config.partition.unit_count,
        )

    workers = system.config.evaluation.workers
    logger.info("Sweeping %d rates x %d trials x %d images", len(rates), trials, len(images))
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(cell) for cell in cells]
    return SweepResult(tuple(rows), lossless_psnr, lossless_ssim)


@dataclasses.dataclass(frozen=True)
class ProfileResult:
    """
    Ablation table of channel groups.

    Attributes:
        rows (tuple[ProfileRow, ...]): Groups ranked from most to least harmful to lose.
    """

    rows: typing.Tuple[ProfileRow, ...]

    @property
    def deltas(self) -> np.ndarray:
        """Return the mean PSNR change of every group, in group order."""
        ordered = sorted(self.rows, key=lambda row: row["channel_group"])
        return np.array([row["delta_psnr"] for row in ordered])

    @property
    def std(self) -> float:
        """Return the spread of the PSNR change across groups."""
        return float(np.std(self.deltas))


def profile_channels(
    system: SemanticSystem,
    params: ParamDict,
    images: typing.Union[typing.Sequence[Image], None] = None,
) -> ProfileResult:
    """
    Zero one channel group at a time and record the mean PSNR change.

    The group size is `partition.group` under channel partitioning and 1 otherwise.

    Args:
        system (SemanticSystem): A system with a channel-map codec.
        params (ParamDict): Trained parameters.
        images (Sequence[Image] | None): Evaluation images.

    Returns:
        ProfileResult: One row per group.

    Raises:
        ConfigError: If the codec does not produce channel maps.
    """
    if system.layout != "channel_map":
        raise ConfigError("Channel profiling needs `codec.kind = cnn`.")
    configured = system.config.partition
    spec = PartitionSpec(
        "channel_of_map",
        configured.group if configured.strategy == "channel_of_map" else 1,
        "channel_map",
        configured.shape,
    )
    images = _evaluation_images(system, images)
    deltas = np.zeros((len(images), spec.unit_count))
    for image_index, image in enumerate(images):
        latent = system.quantize(image, params)
        units = partition(latent, spec)
        baseline = psnr(image, system.render(latent, params))
        for unit in range(spec.unit_count):
            mask = np.ones(spec.unit_count, dtype=bool)
            mask[unit] = False
            ablated = system.render(aggregate(units, mask, spec, latent.step), params)
            deltas[image_index, unit] = psnr(image, ablated) - baseline
        logger.debug("Profiled image %d", image_index)

    means = deltas.mean(axis=0)
    ranking = np.argsort(means, kind="stable")
    rows = tuple(
        ProfileRow(rank=rank, channel_group=int(unit), delta_psnr=float(means[unit]))
        for rank, unit in enumerate(ranking, start=1)
    )
    return ProfileResult(rows)


def distribution_report(
    system: SemanticSystem,
    params: ParamDict,
    images: typing.Union[typing.Sequence[Image], None] = None,
) -> typing.List[DistributionReport]:
    """
    Summarize how latent values are distributed over the evaluation set.

    Channel-map codecs report the distribution of per-channel spatial means of the
    latent before quantization. Token codecs report the quantized values of four
    randomly chosen tokens, one integer per bin.

    Args:
        system (SemanticSystem): The system.
        params (ParamDict): Trained parameters.
        images (Sequence[Image] | None): Evaluation images.

    Returns:
        list[DistributionReport]: One report for channel maps, four for tokens.
    """
    images = _evaluation_images(system, images)
    if system.layout == "channel_map":
        latents = [system.encode(to_unit_tensor(image), params) for image in images]
        return [channel_stats(latents)]

    symbols = np.stack([to_symbols(system.quantize(image, params))[0] for image in images])
    tokens = symbols.shape[1]
    chooser = np.random.default_rng([system.config.seeds.data, TOKEN_STREAM])
    chosen = sorted(chooser.choice(tokens, size=min(DISTRIBUTION_TOKENS, tokens), replace=False))
    reports = []
    for token in chosen:
        values = symbols[:, token, :].astype(np.int64).reshape(-1)
        bins = int(values.max() - values.min()) + 1
        reports.append(histogram_report(values, bins, f"token_{token}"))
    return reports


def error_map(original: Image, reconstruction: Image) -> Image:
    """Return |original - reconstruction| amplified four times and clamped to 255."""
    difference = np.abs(original.pixels.astype(np.int32) - reconstruction.pixels.astype(np.int32))
    return Image(np.minimum(difference * ERROR_GAIN, 255).astype(np.uint8))


@dataclasses.dataclass(frozen=True)
class SimulationResult:
    """
    Output of `simulate`.

    Attributes:
        reconstruction (Image): The received image.
        error (Image): Amplified error map.
        psnr (float): PSNR against the input.
        ssim (float): SSIM against the input.
        log (list[str]): Per-stage log lines.
    """

    reconstruction: Image
    error: Image
    psnr: float
    ssim: float
    log: typing.List[str]


def simulate(
    system: SemanticSystem,
    params: ParamDict,
    image: Image,
    rate: typing.Union[float, None] = None,
) -> SimulationResult:
    """
    Send one image through partitioning, packetization and the channel.

    Packets are framed to bytes and the survivors deframed on the receiving side.

    Args:
        system (SemanticSystem): The system.
        params (ParamDict): Trained parameters.
        image (Image): Input image of the configured size.
        rate (float | None): Loss rate; None uses the configured channel as is.

    Returns:
        SimulationResult: The reconstruction, its quality and the stage log.

    Raises:
        IncompatibleSize: If the image size does not fit the codec.
    """
    config = system.config
    model = config.channel if rate is None else config.channel.with_rate(rate)
    spec = config.partition
    latent = system.quantize(image, params)
    units = partition(latent, spec)
    packets = group(
        units,
        derive_seed(config.seeds.channel, PERMUTATION_STREAM, *SIMULATION_KEY),
        config.units_per_packet,
        spec,
        session=config.transport.session,
        interleave=config.transport.interleave,
    )
    datagrams = [frame(packet) for packet in transmit(packets, model, *SIMULATION_KEY)]
    received = ungroup(datagrams, spec)
    rebuilt = aggregate(received.units, received.mask, spec, latent.step)
    reconstruction = system.render(rebuilt, params)
    quality = (psnr(image, reconstruction), ssim(image, reconstruction))

    log = [
        f"config_hash: {config.config_hash}",
        f"image: {image.height}x{image.width}",
        f"latent: {latent.layout} {'x'.join(str(extent) for extent in latent.item_shape)}",
        f"units: {spec.unit_count} of {spec.unit_length} symbols ({spec.strategy}, g={spec.group})",
        f"packets: {len(packets)} ({config.units_per_packet} units per packet)",
        f"channel: {model.kind} mean loss {model.mean_loss:.4f}",
        f"packets lost: {len(packets) - len(datagrams)}",
        f"units lost: {spec.unit_count - int(np.count_nonzero(received.mask))}",
        f"corrupted: {received.corrupted}",
        f"psnr: {quality[0]:.4f}",
        f"ssim: {quality[1]:.6f}",
    ]
    for line in log:
        logger.info(line)
    return SimulationResult(
        reconstruction,
        error_map(image, reconstruction),
        quality[0],
        quality[1],
        log,
    )


def channel_mosaic(system: SemanticSystem, params: ParamDict, image: Image) -> Image:
    """
    Render every latent channel as a grayscale tile in a near-square grid.

    Each tile is min-max normalized on its own; a constant channel renders black.

    Args:
        system (SemanticSystem): A system with a channel-map codec.
        params (ParamDict): Trained parameters.
        image (Image): Input image.

    Returns:
        Image: The mosaic.

    Raises:
        ConfigError: If the codec does not produce channel maps.
    """
    if system.layout != "channel_map":
        raise ConfigError("A channel mosaic needs `codec.kind = cnn`.")
    maps = np.asarray(system.encode(to_unit_tensor(image), params).real().data)[0]
    channels, height, width = maps.shape
    columns = math.ceil(math.sqrt(channels))
    grid_rows = math.ceil(channels / columns)
    canvas = np.zeros((grid_rows * height, columns * width), dtype=np.float64)
    for channel, tile in enumerate(maps):
        spread = tile.max() - tile.min()
        normalized = (tile - tile.min()) / spread if spread > 0 else np.zeros_like(tile)
        row, column = divmod(channel, columns)
        canvas[row * height : (row + 1) * height, column * width : (column + 1) * width] = normalized
    gray = np.floor(canvas * 255 + 0.5).astype(np.uint8)
    return Image(np.repeat(gray[..., None], 3, axis=2))


@dataclasses.dataclass(frozen=True)
class UdpDemoResult:
    """
    Output of `udp_demo`.

    Attributes:
        reconstruction (Image): Image rebuilt from the datagrams that arrived.
        udp_psnr (float): PSNR of the loopback reconstruction.
        simulated_psnr (float): PSNR of the simulated channel with the same drops.
        sent (int): Packets sent.
        dropped (int): Packets dropped by the sender.
        received (int): Datagrams that arrived intact.
    """

    reconstruction: Image
    udp_psnr: float
    simulated_psnr: float
    sent: int
    dropped: int
    received: int


def udp_demo(
    system: SemanticSystem,
    params: ParamDict,
    image: Image,
    rate: float,
    timeout: float = 2.0,
) -> UdpDemoResult:
    """
    Transmit one image over loopback UDP, dropping packets on the sender side.

    The drop pattern is the one the simulated channel draws for the same key, so
    both paths lose the same packets.

    Args:
        system (SemanticSystem): The system.
        params (ParamDict): Trained parameters.
        image (Image): Input image.
        rate (float): Drop rate.
        timeout (float): Longest wait for any single datagram.

    Returns:
        UdpDemoResult: Both reconstructions' PSNR and the packet counts.

    Raises:
        FragmentationError: If a packet does not fit the MTU.
        TransportError: If the socket fails.
    """
    config = system.config
    model = config.channel.with_rate(rate)
    spec = config.partition
    latent = system.quantize(image, params)
    packets = group(
        partition(latent, spec),
        derive_seed(config.seeds.channel, PERMUTATION_STREAM, *SIMULATION_KEY),
        config.units_per_packet,
        spec,
        session=config.transport.session,
        interleave=config.transport.interleave,
    )
    lost = model.losses(len(packets), *SIMULATION_KEY)
    dropped = {packet.index for packet, drop in zip(packets, lost) if drop}

    with UdpReceiver() as receiver:
        sent = udp_send(packets, receiver.address, drop=dropped, mtu=config.transport.mtu)
        datagrams = receiver.collect(expected=len(sent), timeout=timeout)
    over_udp = ungroup(datagrams, spec)
    reconstruction = system.render(
        aggregate(over_udp.units, over_udp.mask, spec, latent.step),
        params,
    )

    simulated = ungroup(transmit(packets, model, *SIMULATION_KEY), spec)
    simulated_image = system.render(
        aggregate(simulated.units, simulated.mask, spec, latent.step),
        params,
    )
    logger.info(
        "UDP demo: sent %d, dropped %d, received %d",
        len(sent),
        len(dropped),
        len(datagrams) - over_udp.corrupted,
    )
    return UdpDemoResult(
        reconstruction,
        psnr(image, reconstruction),
        psnr(image, simulated_image),
        len(sent),
        len(dropped),
        len(datagrams) - over_udp.corrupted,
    )
