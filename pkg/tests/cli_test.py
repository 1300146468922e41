"""Tests for the command-line interface."""

from __future__ import annotations

import pathlib

import numpy as np
import pytest
from pytest_mock import MockFixture

from semequal.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RUNTIME,
    build_parser,
    load_configuration,
    main,
)
from semequal.configuration import Configuration
from semequal.dataio import Image, write_ppm
from semequal.experiments import UdpDemoResult
from semequal.report import read_manifest
from semequal.types.config import SemConfigDict


@pytest.fixture(scope="function", name="config_file")
def config_file_fixture(
    small_cnn_config_dict: SemConfigDict,
    tmp_path: pathlib.Path,
) -> pathlib.Path:
    """Return a configuration file holding the small CNN configuration."""
    path = tmp_path / "small.cfg"
    lines = Configuration(small_cnn_config_dict).to_lines()
    path.write_text("# small system\n" + "\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_no_subcommand() -> None:
    """Test that a missing subcommand is an argument error."""
    assert main([]) == EXIT_CONFIG


def test_help(capsys: pytest.CaptureFixture[str]) -> None:
    """Test that --help exits successfully."""
    assert main(["--help"]) == EXIT_OK
    assert "udp-demo" in capsys.readouterr().out


def test_seed_overrides(config_file: pathlib.Path) -> None:
    """Test that seed flags override the configuration file."""
    args = build_parser().parse_args(
        ["train", "--config", str(config_file), "--seed-train", "5", "--out", "x"],
    )

    configuration = load_configuration(args)

    assert configuration.seeds.train == 5
    assert configuration.seeds.data == 7
    assert configuration.dataset.size == 16


def test_defaults_without_config() -> None:
    """Test that no configuration file means every default."""
    args = build_parser().parse_args(["dist", "--seed-data", "3", "--out", "x"])

    configuration = load_configuration(args)

    assert configuration.seeds.data == 3
    assert configuration.codec.latent_shape == (16, 16, 16)


def test_train(config_file: pathlib.Path, tmp_path: pathlib.Path) -> None:
    """Test that train writes a report directory and exits with 0."""
    out = tmp_path / "train"

    assert main(["train", "--config", str(config_file), "--out", str(out)]) == EXIT_OK
    assert "checkpoint.semw" in read_manifest(out).files


def test_bad_config_value(tmp_path: pathlib.Path) -> None:
    """Test that an invalid value exits with the configuration code."""
    path = tmp_path / "bad.cfg"
    path.write_text("sem.variant = sharpen\n", encoding="utf-8")

    assert main(["dist", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG


def test_config_not_utf8(tmp_path: pathlib.Path) -> None:
    """Test that a configuration file that is not UTF-8 exits with the configuration code."""
    path = tmp_path / "bad.cfg"
    path.write_bytes(b"codec.kind = \xff\n")

    assert main(["sweep", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG


def test_missing_config_file(tmp_path: pathlib.Path) -> None:
    """Test that an unreadable configuration exits with the configuration code."""
    code = main(["dist", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path)])

    assert code == EXIT_CONFIG


def test_missing_image(config_file: pathlib.Path, tmp_path: pathlib.Path) -> None:
    """Test that a runtime failure exits with 3."""
    code = main(
        [
            "simulate",
            "--config",
            str(config_file),
            "--image",
            str(tmp_path / "missing.ppm"),
            "--out",
            str(tmp_path / "out.ppm"),
        ],
    )

    assert code == EXIT_RUNTIME


def test_simulate(
    config_file: pathlib.Path,
    tmp_path: pathlib.Path,
    capsys: pytest.CaptureFixture[str],
) -> None:
    """Test that simulate prints the quality and writes the reconstruction."""
    image_path = tmp_path / "gray.ppm"
    write_ppm(image_path, Image(np.full((16, 16, 3), 128, dtype=np.uint8)))

    code = main(
        [
            "simulate",
            "--config",
            str(config_file),
            "--image",
            str(image_path),
            "--rate",
            "0.25",
            "--out",
            str(tmp_path / "out.ppm"),
        ],
    )

    assert code == EXIT_OK
    assert capsys.readouterr().out.startswith("psnr ")
    assert (tmp_path / "out.ppm").exists()
    assert (tmp_path / "out.log").exists()


def test_incompatible_image(config_file: pathlib.Path, tmp_path: pathlib.Path) -> None:
    """Test that an image of the wrong size exits with 3."""
    image_path = tmp_path / "large.ppm"
    write_ppm(image_path, Image(np.zeros((20, 20, 3), dtype=np.uint8)))

    code = main(
        [
            "simulate",
            "--config",
            str(config_file),
            "--image",
            str(image_path),
            "--out",
            str(tmp_path / "out.ppm"),
        ],
    )

    assert code == EXIT_RUNTIME


def test_report_hash_mismatch(tmp_path: pathlib.Path) -> None:
    """Test that combining different configurations exits with 3."""
    for name, variant in (("a", "none"), ("b", "scale")):
        config_path = tmp_path / f"{name}.cfg"
        config_path.write_text(
            "data.size = 16\ndata.eval_count = 2\n"
            + "cnn.layers = 4:3:2:1,8:3:2:1,4:1:1:0\n"
            + f"sem.variant = {variant}\n",
            encoding="utf-8",
        )
        assert main(["dist", "--config", str(config_path), "--out", str(tmp_path / name)]) == 0

    code = main(
        ["report", str(tmp_path / "a"), str(tmp_path / "b"), "--out", str(tmp_path / "all")],
    )

    assert code == EXIT_RUNTIME


def test_udp_demo(
    config_file: pathlib.Path,
    tmp_path: pathlib.Path,
    mocker: MockFixture,
) -> None:
    """Test that the demo log starts with the config hash and lists the counts."""
    mocker.patch(
        "semequal.cli.Simulator.udp_demo",
        return_value=UdpDemoResult(
            Image(np.zeros((16, 16, 3), dtype=np.uint8)),
            udp_psnr=20.0,
            simulated_psnr=20.0,
            sent=3,
            dropped=1,
            received=3,
        ),
    )
    out = tmp_path / "udp.log"

    code = main(["udp-demo", "--config", str(config_file), "--out", str(out)])

    assert code == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == f"config_hash: {Configuration.from_file(config_file).config_hash}"
    assert lines[1:4] == ["sent: 3", "dropped: 1", "received: 3"]
