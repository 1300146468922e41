"""
This module writes experiment outputs as a directory of CSV files with a manifest.

Classes:
    ReportBundle: Files of one experiment directory, written together.

Functions:
    read_manifest: Read the config hash, seeds and file list of a directory.
    combine: Merge several experiment directories that share a config hash.
    sweep_summary_lines: Human-readable table of a sweep.

Every directory carries `summary.txt`, whose first line is `config_hash: <hash>`,
and `manifest.txt`, which lists every file with its size and the config hash.
"""

from __future__ import annotations

import csv
import io
import os
import pathlib
import sys

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.configuration import Seeds
from semequal.exceptions import HashMismatch, ReportError
from semequal.logger import logger
from semequal.types.report import SweepSummaryRow

SUMMARY_FILE: typing.Final[str] = "summary.txt"
MANIFEST_FILE: typing.Final[str] = "manifest.txt"
HASH_PREFIX: typing.Final[str] = "config_hash: "
SEED_PREFIX: typing.Final[str] = "seeds."

PathLike = typing.Union[str, os.PathLike[str]]
Row = typing.Mapping[str, typing.Any]


def _csv_text(columns: typing.Sequence[str], rows: typing.Iterable[Row]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({column: row[column] for column in columns})
    return buffer.getvalue()


class ReportBundle:
    """
    The files of one experiment directory.

    Attributes:
        directory (pathlib.Path): Where the files go.
        config_hash (str): Hash of the configuration every file came from.
        seeds (Seeds): The master seeds.
    """

    def __init__(self, directory: PathLike, config_hash: str, seeds: Seeds) -> None:
        """Initialize an empty bundle."""
        self.directory = pathlib.Path(directory)
        self.config_hash = config_hash
        self.seeds = seeds
        self.summary: typing.List[str] = []
        self._files: typing.Dict[str, bytes] = {}

    def add_file(self, name: str, payload: bytes) -> None:
        """
        Add a file.

        Raises:
            ReportError: If the name is taken or reserved.
        """
        if name in self._files or name in (SUMMARY_FILE, MANIFEST_FILE):
            raise ReportError(f"File {name} is already part of the report.")
        self._files[name] = payload

    def add_table(
        self,
        name: str,
        columns: typing.Sequence[str],
        rows: typing.Sequence[Row],
    ) -> None:
        """
        Add a CSV table with a fixed column order.

        Raises:
            ReportError: If the table has no rows.
        """
        if not rows:
            raise ReportError(f"Refusing to write {name} without rows.")
        self.add_file(name, _csv_text(columns, rows).encode("utf-8"))

    def write(self) -> typing.List[pathlib.Path]:
        """
        Write every file, then `summary.txt` and `manifest.txt`.

        Returns:
            list[pathlib.Path]: Paths written, manifest last.
        """
        self.directory.mkdir(parents=True, exist_ok=True)
        summary = "\n".join([f"{HASH_PREFIX}{self.config_hash}", *self.summary]) + "\n"
        files = {**self._files, SUMMARY_FILE: summary.encode("utf-8")}
        written = []
        for name, payload in files.items():
            path = self.directory / name
            path.write_bytes(payload)
            written.append(path)
            logger.info("Wrote %s", path)

        manifest = [f"{name}\t{len(payload)}\t{self.config_hash}" for name, payload in files.items()]
        manifest.extend(
            f"{SEED_PREFIX}{field}\t{value}"
            for field, value in (
                ("data", self.seeds.data),
                ("train", self.seeds.train),
                ("channel", self.seeds.channel),
            )
        )
        manifest_path = self.directory / MANIFEST_FILE
        manifest_path.write_text("\n".join(manifest) + "\n", encoding="utf-8")
        written.append(manifest_path)
        return written


class Manifest(typing.NamedTuple):
    """
    Contents of `manifest.txt`.

    Attributes:
        config_hash (str): The shared config hash.
        seeds (Seeds): The master seeds.
        files (dict[str, int]): File sizes by name.
    """

    config_hash: str
    seeds: Seeds
    files: typing.Dict[str, int]


def read_manifest(directory: PathLike) -> Manifest:
    """
    Read an experiment directory's manifest.

    Args:
        directory (PathLike): The directory.

    Returns:
        Manifest: Hash, seeds and file sizes.

    Raises:
        ReportError: If the manifest is missing or malformed.
        HashMismatch: If files in one directory disagree on the hash.
    """
    path = pathlib.Path(directory) / MANIFEST_FILE
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as error:
        raise ReportError(f"Cannot read {path}: {error}") from error

    hashes = set()
    seeds: typing.Dict[str, int] = {}
    files: typing.Dict[str, int] = {}
    for line in lines:
        fields = line.split("\t")
        if fields[0].startswith(SEED_PREFIX) and len(fields) == 2:
            seeds[fields[0][len(SEED_PREFIX) :]] = int(fields[1])
        elif len(fields) == 3:
            files[fields[0]] = int(fields[1])
            hashes.add(fields[2])
        else:
            raise ReportError(f"Malformed manifest line in {path}: {line!r}")
    if len(hashes) > 1:
        raise HashMismatch(f"{path} lists files from several configurations.")
    if not hashes:
        raise ReportError(f"{path} lists no files.")
    return Manifest(hashes.pop(), Seeds(**seeds), files)


def combine(directories: typing.Sequence[PathLike], out: PathLike) -> typing.List[pathlib.Path]:
    """
    Merge experiment directories into one report directory.

    Args:
        directories (Sequence[PathLike]): Directories written by `ReportBundle`.
        out (PathLike): Target directory.

    Returns:
        list[pathlib.Path]: Paths written.

    Raises:
        ReportError: If there is nothing to merge or two inputs share a file name.
        HashMismatch: If the inputs come from different configurations.
    """
    if not directories:
        raise ReportError("No experiment directories to combine.")
    manifests = [read_manifest(directory) for directory in directories]
    hashes = {manifest.config_hash for manifest in manifests}
    if len(hashes) > 1:
        raise HashMismatch(f"Cannot combine results of configurations {sorted(hashes)}.")

    bundle = ReportBundle(out, manifests[0].config_hash, manifests[0].seeds)
    for directory, manifest in zip(directories, manifests):
        source = pathlib.Path(directory)
        summary = (source / SUMMARY_FILE).read_text(encoding="utf-8").splitlines()
        bundle.summary.extend([f"[{source.name}]", *summary[1:]])
        for name in manifest.files:
            if name != SUMMARY_FILE:
                bundle.add_file(name, (source / name).read_bytes())
    target = pathlib.Path(out).resolve()
    if any(pathlib.Path(directory).resolve() == target for directory in directories):
        raise ReportError(f"{target} is one of the inputs.")
    return bundle.write()


def sweep_summary_lines(summary: typing.Sequence[SweepSummaryRow]) -> typing.List[str]:
    """
    Format sweep aggregates as a fixed-width table.

    Raises:
        ReportError: If the sweep is empty.
    """
    if not summary:
        raise ReportError("The sweep produced no results.")
    header = f"{'rate':>6} {'psnr':>8} {'std':>7} {'min':>8} {'ci95':>7} {'ssim':>7} {'dpsnr':>8} {'retain':>7} {'lost':>6}"
    lines = [header]
    for row in summary:
        lines.append(
            f"{row['rate']:>6.3f} {row['mean_psnr']:>8.3f} {row['std_psnr']:>7.3f}"
            + f" {row['min_psnr']:>8.3f} {row['ci95_psnr']:>7.3f} {row['mean_ssim']:>7.4f}"
            + f" {row['delta_psnr']:>8.3f} {row['retention']:>7.3f} {row['loss_fraction']:>6.3f}",
        )
    return lines
