"""
This module provides the main entry point for running semequal experiments.

It contains the Simulator class, which binds a configuration to a semantic system and
runs every experiment, writing its outputs as a report directory.

Classes:
    Simulator: The main entry point of the library.

Dependencies:
    - semequal.configuration: Provides Configuration.
    - semequal.pipeline: Provides SemanticSystem.
    - semequal.experiments: Provides the experiment functions.
    - semequal.report: Provides ReportBundle.
"""

from __future__ import annotations

import os
import pathlib
import sys

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal import experiments
from semequal.checkpoint import dump_params, load_checkpoint
from semequal.codec import ParamDict, cbr
from semequal.configuration import Configuration
from semequal.dataio import (
    Image,
    dataset_manifest,
    generate_image,
    read_ppm,
    save_ppm,
    write_ppm,
)
from semequal.logger import logger
from semequal.metrics import DistributionReport
from semequal.pipeline import SemanticSystem
from semequal.report import ReportBundle, sweep_summary_lines
from semequal.types.config import SemConfigDict
from semequal.types.report import (
    DISTRIBUTION_COLUMNS,
    LOSS_CURVE_COLUMNS,
    PER_IMAGE_COLUMNS,
    PROFILE_COLUMNS,
    SWEEP_COLUMNS,
    SWEEP_SUMMARY_COLUMNS,
    DistributionRow,
)

PathLike = typing.Union[str, os.PathLike[str]]

CHECKPOINT_FILE: typing.Final[str] = "checkpoint.semw"


class Simulator:
    """
    The main entry point for semequal experiments.

    Attributes:
        config (Configuration): The validated configuration.
        system (SemanticSystem): The system the configuration describes.
    """

    def __init__(
        self,
        config: typing.Union[Configuration, SemConfigDict, None] = None,
    ) -> None:
        """
        Initialize the Simulator.

        Args:
            config (Configuration | SemConfigDict | None): A configuration or its
                raw sections; None uses every default.

        Example:
            >>> simulator = Simulator({"codec": {"kind": "cnn"}, "sem": {"variant": "scale"}})
            >>> simulator.config.sem.quant_factor
            16.0
        """
        self.config = config if isinstance(config, Configuration) else Configuration(config)
        self.system = SemanticSystem(self.config)

    def load_params(self, checkpoint: typing.Union[PathLike, None]) -> ParamDict:
        """
        Load parameters from a checkpoint, or draw the initial ones.

        Args:
            checkpoint (PathLike | None): A checkpoint file, or None.

        Returns:
            ParamDict: Parameters checked against the configuration.

        Raises:
            CheckpointError: If the file is malformed or does not fit.
        """
        if checkpoint is None:
            logger.warning("No checkpoint given, using untrained parameters")
            return self.system.init_params()
        params = load_checkpoint(checkpoint)
        self.system.check_params(params)
        return params

    def _bundle(self, out: PathLike) -> ReportBundle:
        bundle = ReportBundle(out, self.config.config_hash, self.config.seeds)
        bundle.summary.append(f"codec: {self.config.codec_kind} cbr {cbr(self.config.codec):.4f}")
        bundle.summary.append(f"sem: {self.config.sem.variant}")
        return bundle

    def train(self, out: PathLike) -> experiments.TrainResult:
        """
        Train and write the checkpoint, the loss curve and the dataset manifest.

        Args:
            out (PathLike): Report directory.

        Returns:
            experiments.TrainResult: Parameters and loss curve.
        """
        result = experiments.train(self.system)
        bundle = self._bundle(out)
        bundle.add_file(CHECKPOINT_FILE, dump_params(result.params))
        bundle.add_file("dataset.tsv", dataset_manifest(self.config.dataset).encode("utf-8"))
        if result.loss_curve:
            bundle.add_table("loss_curve.csv", LOSS_CURVE_COLUMNS, result.loss_curve)
            first, last = result.loss_curve[0]["mse"], result.loss_curve[-1]["mse"]
            bundle.summary.append(f"mse: epoch 1 {first:.6f}, last epoch {last:.6f}")
        bundle.write()
        return result

    def sweep(self, params: ParamDict, out: PathLike) -> experiments.SweepResult:
        """
        Run the configured loss-rate sweep and write its tables.

        Raises:
            ReportError: If the sweep produced no rows.
        """
        result = experiments.sweep(self.system, params)
        summary = result.summary()
        bundle = self._bundle(out)
        bundle.summary.extend(sweep_summary_lines(summary))
        bundle.add_table("sweep.csv", SWEEP_COLUMNS, result.rows)
        bundle.add_table("sweep_summary.csv", SWEEP_SUMMARY_COLUMNS, summary)
        bundle.add_table("per_image.csv", PER_IMAGE_COLUMNS, result.per_image())
        bundle.write()
        return result

    def profile(
        self,
        params: ParamDict,
        out: PathLike,
        mosaic: typing.Union[Image, None] = None,
    ) -> experiments.ProfileResult:
        """
        Profile channel-group importance, optionally with a channel mosaic.

        Args:
            params (ParamDict): Parameters.
            out (PathLike): Report directory.
            mosaic (Image | None): Image whose latent channels are rendered as tiles.

        Returns:
            experiments.ProfileResult: The ranked table.
        """
        result = experiments.profile_channels(self.system, params)
        bundle = self._bundle(out)
        bundle.add_table("profile.csv", PROFILE_COLUMNS, result.rows)
        bundle.summary.append(f"profile std: {result.std:.4f} dB")
        if mosaic is not None:
            tiles = experiments.channel_mosaic(self.system, params, mosaic)
            bundle.add_file("mosaic.ppm", save_ppm(tiles))
        bundle.write()
        return result

    def distributions(
        self,
        params: ParamDict,
        out: PathLike,
    ) -> typing.List[DistributionReport]:
        """Write the latent value distributions and their entropies."""
        reports = experiments.distribution_report(self.system, params)
        rows = [
            DistributionRow(
                report=report.label,
                bin_left=float(report.edges[position]),
                bin_right=float(report.edges[position + 1]),
                probability=float(probability),
            )
            for report in reports
            for position, probability in enumerate(report.probabilities)
        ]
        bundle = self._bundle(out)
        bundle.add_table("distribution.csv", DISTRIBUTION_COLUMNS, rows)
        for report in reports:
            low, high = report.modal_bin
            bundle.summary.append(
                f"{report.label}: entropy {report.entropy:.4f} bits,"
                + f" modal bin [{low:.4f}, {high:.4f}) mass {report.modal_mass:.4f}",
            )
        bundle.write()
        return reports

    def simulate(
        self,
        params: ParamDict,
        image_path: PathLike,
        out_file: PathLike,
        rate: typing.Union[float, None] = None,
    ) -> experiments.SimulationResult:
        """
        Transmit one PPM image and write the reconstruction, error map and log.

        The error map goes to `<out>.err.ppm` and the log to `<out>.log`, where
        `<out>` is `out_file` without its suffix.

        Raises:
            ImageFormatError: If the input is not a binary PPM.
            IncompatibleSize: If the image does not fit the codec.
        """
        result = experiments.simulate(self.system, params, read_ppm(image_path), rate)
        target = pathlib.Path(out_file)
        write_ppm(target, result.reconstruction)
        write_ppm(target.with_suffix(".err.ppm"), result.error)
        target.with_suffix(".log").write_text("\n".join(result.log) + "\n", encoding="utf-8")
        return result

    def udp_demo(
        self,
        params: ParamDict,
        rate: float,
        image_path: typing.Union[PathLike, None] = None,
    ) -> experiments.UdpDemoResult:
        """Send an image over loopback UDP; None sends the first held-out image."""
        if image_path is None:
            image, _ = generate_image(self.config.eval_dataset, 0)
        else:
            image = read_ppm(image_path)
        return experiments.udp_demo(self.system, params, image, rate)
