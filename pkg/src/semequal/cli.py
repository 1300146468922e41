"""
Command-line interface.

Subcommands: train, simulate, sweep, profile, dist, report, udp-demo. Every
subcommand takes `--config`, the three seed overrides and `--out`.

Exit codes: 0 on success, 2 on configuration or argument errors, 3 on any other
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.configuration import Configuration, load_config_file
from semequal.dataio import read_ppm
from semequal.exceptions import ConfigError, SemEqualError
from semequal.logger import logger
from semequal.report import combine
from semequal.simulator import Simulator
from semequal.types.config import SemConfigDict

EXIT_OK: typing.Final[int] = 0
EXIT_CONFIG: typing.Final[int] = 2
EXIT_RUNTIME: typing.Final[int] = 3
LOG_FORMAT: typing.Final[str] = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _common(parser: argparse.ArgumentParser, out_help: str) -> None:
    parser.add_argument("--config", help="Configuration file of `section.key = value` lines")
    parser.add_argument("--seed-data", type=int, help="Override seeds.data")
    parser.add_argument("--seed-train", type=int, help="Override seeds.train")
    parser.add_argument("--seed-channel", type=int, help="Override seeds.channel")
    parser.add_argument("--out", required=True, help=out_help)
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser with every subcommand."""
    parser = argparse.ArgumentParser(
        prog="semequal",
        description="Semantic image transmission over packet erasure channels.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    train_parser = subparsers.add_parser("train", help="Train codec and equalizer")
    _common(train_parser, "Report directory")

    for name, help_text in (
        ("sweep", "Quality over loss rates"),
        ("profile", "Per-channel ablation table"),
        ("dist", "Latent value distributions"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        _common(sub, "Report directory")
        sub.add_argument("--checkpoint", help="Checkpoint written by `train`")
        if name == "profile":
            sub.add_argument("--mosaic", help="PPM image whose latent channels are tiled")

    simulate_parser = subparsers.add_parser("simulate", help="Transmit one image")
    _common(simulate_parser, "Reconstructed PPM file")
    simulate_parser.add_argument("--checkpoint", help="Checkpoint written by `train`")
    simulate_parser.add_argument("--image", required=True, help="Binary PPM input")
    simulate_parser.add_argument("--rate", type=float, help="Loss rate; default channel.p")

    report_parser = subparsers.add_parser("report", help="Combine experiment directories")
    _common(report_parser, "Combined report directory")
    report_parser.add_argument("inputs", nargs="+", help="Experiment directories")

    udp_parser = subparsers.add_parser("udp-demo", help="Loopback UDP transmission")
    _common(udp_parser, "Log file")
    udp_parser.add_argument("--checkpoint", help="Checkpoint written by `train`")
    udp_parser.add_argument("--image", help="Binary PPM input; default first held-out image")
    udp_parser.add_argument("--rate", type=float, default=0.2, help="Sender-side drop rate")
    return parser


def load_configuration(args: argparse.Namespace) -> Configuration:
    """
    Load the configuration file and apply the seed overrides.

    Raises:
        ConfigError: If the file or an override is invalid.
    """
    raw: typing.Dict[str, typing.Any] = dict(load_config_file(args.config)) if args.config else {}
    seeds = dict(raw.get("seeds", {}))
    for key in ("data", "train", "channel"):
        override = getattr(args, f"seed_{key}")
        if override is not None:
            seeds[key] = override
    if seeds:
        raw["seeds"] = seeds
    return Configuration(typing.cast(SemConfigDict, raw))


def _configure_logging(verbosity: int) -> None:
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
    if verbosity >= 2:
        logger.setLevel(logging.DEBUG)
    elif verbosity == 1:
        logger.setLevel(logging.INFO)


def run(args: argparse.Namespace) -> None:
    """
    Run one parsed command.

    Raises:
        SemEqualError: If the command fails.
        OSError: If a file cannot be read or written.
    """
    if args.command == "report":
        combine(args.inputs, args.out)
        return

    simulator = Simulator(load_configuration(args))
    if args.command == "train":
        simulator.train(args.out)
        return

    params = simulator.load_params(args.checkpoint)
    if args.command == "sweep":
        simulator.sweep(params, args.out)
    elif args.command == "profile":
        mosaic = read_ppm(args.mosaic) if args.mosaic else None
        simulator.profile(params, args.out, mosaic)
    elif args.command == "dist":
        simulator.distributions(params, args.out)
    elif args.command == "simulate":
        result = simulator.simulate(params, args.image, args.out, args.rate)
        print(f"psnr {result.psnr:.4f} ssim {result.ssim:.6f}")
    else:
        demo = simulator.udp_demo(params, args.rate, args.image)
        lines = [
            f"config_hash: {simulator.config.config_hash}",
            f"sent: {demo.sent}",
            f"dropped: {demo.dropped}",
            f"received: {demo.received}",
            f"udp_psnr: {demo.udp_psnr:.4f}",
            f"simulated_psnr: {demo.simulated_psnr:.4f}",
        ]
        with open(args.out, "w", encoding="utf-8") as log_file:
            log_file.write("\n".join(lines) + "\n")
        print("\n".join(lines[1:]))


def main(argv: typing.Union[typing.Sequence[str], None] = None) -> int:
    """
    Entry point of the `semequal` command.

    Args:
        argv (Sequence[str] | None): Arguments without the program name.

    Returns:
        int: The exit code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        return EXIT_OK if exit_request.code == 0 else EXIT_CONFIG
    _configure_logging(args.verbose)
    try:
        run(args)
    except ConfigError as error:
        logger.error("Configuration error: %s", error)
        return EXIT_CONFIG
    except (SemEqualError, OSError) as error:
        logger.error("%s: %s", type(error).__name__, error)
        return EXIT_RUNTIME
    return EXIT_OK
