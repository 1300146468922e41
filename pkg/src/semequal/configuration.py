"""
This module provides configuration management for semequal experiments.

Classes:
    - SemSettings: Equalization variant and its knobs.
    - TransportSettings: Packetization settings.
    - TrainSettings: Training loop settings.
    - EvalSettings: Sweep settings.
    - Seeds: The three master seeds.
    - Configuration: Validated, defaulted view of a raw configuration.
    - ConfigurationValidations: Static checks on raw configurations.

Functions:
    - load_config_file: Read a `section.key = value` file into a raw configuration.

Exceptions:
    - ConfigError: Custom exception for configuration-related errors.
"""

from __future__ import annotations

import dataclasses
import hashlib
import os
import sys

if sys.version_info >= (3, 11):
    import typing
else:
    import typing_extensions as typing

from semequal.channel import ChannelModel
from semequal.codec import (
    DEFAULT_CNN_LAYERS,
    CnnCodecConfig,
    CnnLayer,
    CodecConfig,
    TokenCodecConfig,
)
from semequal.dataio import DatasetSpec
from semequal.exceptions import ConfigError, IllegalPartition
from semequal.logger import logger
from semequal.partition import STRATEGY_LAYOUTS, PartitionSpec
from semequal.preprocess import parse_config_text, process_param_list, stringify
from semequal.quantizer import QuantizerConfig
from semequal.sem import SCALE_VARIANTS, SEM_VARIANTS, SemVariant
from semequal.types.config import SECTION_KEYS, SemConfigDict

EVAL_SEED_MASK: typing.Final[int] = 0x5EED
SCALE_QUANT_FACTOR: typing.Final[float] = 16.0

TValue = typing.TypeVar("TValue")


@dataclasses.dataclass(frozen=True)
class SemSettings:
    """
    Equalization settings.

    Attributes:
        variant (SemVariant): The variant.
        k (int): Broadcast neighbourhood size.
        s (float): Channel state fed to the gain network.
        quant_factor (float): Scale applied before rounding.
    """

    variant: SemVariant = "none"
    k: int = 4
    s: float = 1.0
    quant_factor: float = 1.0


@dataclasses.dataclass(frozen=True)
class TransportSettings:
    """
    Packetization settings.

    Attributes:
        units_per_packet (int): U; 0 derives it from the MTU.
        mtu (int): Payload bytes per packet.
        session (int): Session id.
        interleave (str): `random` or `sequential`.
    """

    units_per_packet: int = 0
    mtu: int = 1400
    session: int = 1
    interleave: typing.Literal["random", "sequential"] = "random"


@dataclasses.dataclass(frozen=True)
class TrainSettings:
    """
    Training loop settings.

    Attributes:
        epochs (int): Passes over the training set.
        batch (int): Images per step.
        lr (float): Adam learning rate.
    """

    epochs: int = 30
    batch: int = 16
    lr: float = 1e-3


@dataclasses.dataclass(frozen=True)
class EvalSettings:
    """
    Sweep settings.

    Attributes:
        rates (tuple[float, ...]): Loss rates.
        trials (int): Channel trials per image and rate.
        erasure (str): `packet` runs the transport path, `exact` erases round(p N) units.
        workers (int): Threads used by sweeps.
    """

    rates: typing.Tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4)
    trials: int = 20
    erasure: typing.Literal["packet", "exact"] = "packet"
    workers: int = 1


@dataclasses.dataclass(frozen=True)
class Seeds:
    """
    The master seeds every random draw derives from.

    Attributes:
        data (int): Dataset seed.
        train (int): Initialization, batching and quantization noise seed.
        channel (int): Channel and permutation seed.
    """

    data: int = 7
    train: int = 1
    channel: int = 2

    @property
    def eval_data(self) -> int:
        """Return the seed of the held-out set."""
        return self.data ^ EVAL_SEED_MASK


def load_config_file(path: typing.Union[str, os.PathLike[str]]) -> SemConfigDict:
    """
    Read a configuration file.

    Args:
        path (str | PathLike): The file.

    Returns:
        SemConfigDict: The raw configuration.

    Raises:
        ConfigError: If the file cannot be read or parsed.
    """
    try:
        with open(path, encoding="utf-8") as config_file:
            text = config_file.read()
    except (OSError, UnicodeDecodeError) as error:
        raise ConfigError(f"Cannot read configuration {path}: {error}") from error
    return typing.cast(SemConfigDict, parse_config_text(text))


class _Section:
    """Typed access to one raw section."""

    def __init__(self, name: str, values: typing.Mapping[str, typing.Any]) -> None:
        self.name = name
        self.values = values

    def get(self, key: str, default: TValue, kind: typing.Type[typing.Any]) -> TValue:
        if key not in self.values:
            return default
        value = self.values[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is int and isinstance(value, bool):
            raise ConfigError(f"`{self.name}.{key}` must be an integer.")
        if not isinstance(value, kind):
            raise ConfigError(
                f"`{self.name}.{key}` must be {kind.__name__}, got {value!r}.",
            )
        return typing.cast(TValue, value)

    def get_list(self, key: str, default: typing.Sequence[TValue]) -> typing.List[typing.Any]:
        if key not in self.values:
            return list(default)
        value = self.values[key]
        return list(value) if isinstance(value, list) else [value]


class Configuration:
    """
    Validated experiment configuration with every default filled in.

    Attributes:
        codec_kind (str): `cnn` or `token`.
        codec (CodecConfig): Codec topology.
        sem (SemSettings): Equalization settings.
        quantizer (QuantizerConfig): Test-mode quantizer settings.
        partition (PartitionSpec): Partition of one latent.
        transport (TransportSettings): Packetization settings.
        channel (ChannelModel): Channel model.
        dataset (DatasetSpec): Training set.
        eval_dataset (DatasetSpec): Held-out set.
        train (TrainSettings): Training settings.
        evaluation (EvalSettings): Sweep settings.
        seeds (Seeds): Master seeds.
    """

    def __init__(self, config_dict: typing.Union[SemConfigDict, None] = None) -> None:
        """
        Initialize a Configuration from a raw configuration.

        Args:
            config_dict (SemConfigDict | None): Raw sections; None means all defaults.

        Raises:
            ConfigError: If a value is invalid or sections contradict each other.
        """
        raw: typing.Mapping[str, typing.Any] = config_dict or {}
        self.validations = ConfigurationValidations
        self.validations.show_unknown_key_warnings(raw)

        def section(name: str) -> _Section:
            return _Section(name, raw.get(name, {}))

        self.seeds = self._seeds(section("seeds"))
        data = section("data")
        image_size = data.get("size", 64, int)

        self.codec_kind = section("codec").get("kind", "cnn", str)
        self.validations.validate_choice("codec.kind", self.codec_kind, ("cnn", "token"))
        self.codec: CodecConfig = (
            self._cnn(section("cnn"), image_size)
            if self.codec_kind == "cnn"
            else self._token(section("token"), image_size)
        )

        self.sem = self._sem(section("sem"))
        self.validations.validate_sem_codec(self.sem.variant, self.codec_kind)

        self.quantizer = QuantizerConfig(
            mode="test_round",
            clamp=section("quant").get("clamp", 127, int),
            factor=self.sem.quant_factor,
            seed=self.seeds.train,
        )
        self.partition = self._partition(section("partition"))
        self.transport = self._transport(section("transport"))
        self.channel = self._channel(section("channel"))
        weights = tuple(float(weight) for weight in data.get_list("weights", [0.2] * 5))
        self.dataset = DatasetSpec(
            count=data.get("count", 2000, int),
            size=image_size,
            seed=self.seeds.data,
            weights=weights,
        )
        self.eval_dataset = DatasetSpec(
            count=data.get("eval_count", 64, int),
            size=image_size,
            seed=self.seeds.eval_data,
            weights=weights,
        )
        train = section("train")
        self.train = TrainSettings(
            epochs=train.get("epochs", 30, int),
            batch=train.get("batch", 16, int),
            lr=train.get("lr", 1e-3, float),
        )
        self.evaluation = self._evaluation(section("eval"))
        self.validations.validate_positive(
            {
                "train.batch": self.train.batch,
                "train.lr": self.train.lr,
                "eval.trials": self.evaluation.trials,
                "eval.workers": self.evaluation.workers,
                "transport.mtu": self.transport.mtu,
            },
        )
        self.validations.validate_nonnegative(
            {
                "train.epochs": self.train.epochs,
                "transport.units_per_packet": self.transport.units_per_packet,
            },
        )

    @classmethod
    def from_file(cls, path: typing.Union[str, os.PathLike[str]]) -> Configuration:
        """Load and validate a configuration file."""
        return cls(load_config_file(path))

    @staticmethod
    def _seeds(seeds: _Section) -> Seeds:
        return Seeds(
            data=seeds.get("data", 7, int),
            train=seeds.get("train", 1, int),
            channel=seeds.get("channel", 2, int),
        )

    @staticmethod
    def _cnn(cnn: _Section, image_size: int) -> CnnCodecConfig:
        default = [":".join(str(part) for part in layer) for layer in DEFAULT_CNN_LAYERS]
        layers = []
        for entry in cnn.get_list("layers", default):
            parts = str(entry).strip().split(":")
            if len(parts) != 4 or not all(part.strip().isdigit() for part in parts):
                raise ConfigError(f"`cnn.layers` entry {entry!r} is not out:kernel:stride:pad.")
            layers.append(CnnLayer(*(int(part) for part in parts)))
        return CnnCodecConfig(
            layers=tuple(layers),
            alpha=cnn.get("alpha", 0.2, float),
            image_size=image_size,
        )

    @staticmethod
    def _token(token: _Section, image_size: int) -> TokenCodecConfig:
        return TokenCodecConfig(
            patch=token.get("patch", 8, int),
            dim=token.get("dim", 64, int),
            blocks=token.get("blocks", 2, int),
            heads=token.get("heads", 1, int),
            out_dim=token.get("out_dim", 24, int),
            positional=token.get("positional", True, bool),
            image_size=image_size,
        )

    @staticmethod
    def _sem(sem: _Section) -> SemSettings:
        variant = sem.get("variant", "none", str)
        ConfigurationValidations.validate_choice("sem.variant", variant, SEM_VARIANTS)
        default_factor = SCALE_QUANT_FACTOR if variant in SCALE_VARIANTS else 1.0
        return SemSettings(
            variant=typing.cast(SemVariant, variant),
            k=sem.get("k", 4, int),
            s=sem.get("s", 1.0, float),
            quant_factor=sem.get("quant_factor", default_factor, float),
        )

    def _partition(self, partition: _Section) -> PartitionSpec:
        default_strategy = "channel_of_map" if self.codec_kind == "cnn" else "token_channel"
        strategy = partition.get("strategy", default_strategy, str)
        ConfigurationValidations.validate_choice(
            "partition.strategy", strategy, tuple(STRATEGY_LAYOUTS),
        )
        layout = "channel_map" if self.codec_kind == "cnn" else "tokens"
        try:
            return PartitionSpec(
                strategy=typing.cast(typing.Any, strategy),
                group=partition.get("group", 1, int),
                layout=layout,
                shape=self.codec.latent_shape,
            )
        except IllegalPartition as error:
            raise ConfigError(str(error)) from error

    @staticmethod
    def _transport(transport: _Section) -> TransportSettings:
        interleave = transport.get("interleave", "random", str)
        ConfigurationValidations.validate_choice(
            "transport.interleave", interleave, ("random", "sequential"),
        )
        return TransportSettings(
            units_per_packet=transport.get("units_per_packet", 0, int),
            mtu=transport.get("mtu", 1400, int),
            session=transport.get("session", 1, int),
            interleave=typing.cast(typing.Any, interleave),
        )

    def _channel(self, channel: _Section) -> ChannelModel:
        return ChannelModel(
            kind=typing.cast(typing.Any, channel.get("kind", "iid", str)),
            p=channel.get("p", 0.0, float),
            p_gb=channel.get("p_gb", 0.1, float),
            p_bg=channel.get("p_bg", 0.5, float),
            loss_good=channel.get("loss_good", 0.0, float),
            loss_bad=channel.get("loss_bad", 1.0, float),
            seed=self.seeds.channel,
        )

    @staticmethod
    def _evaluation(evaluation: _Section) -> EvalSettings:
        rates = []
        for rate in evaluation.get_list("rates", (0.0, 0.1, 0.2, 0.3, 0.4)):
            if isinstance(rate, bool) or not isinstance(rate, (int, float)) or not 0 <= rate <= 1:
                raise ConfigError(f"`eval.rates` entries must lie in [0, 1], got {rate!r}.")
            rates.append(float(rate))
        erasure = evaluation.get("erasure", "packet", str)
        ConfigurationValidations.validate_choice("eval.erasure", erasure, ("packet", "exact"))
        return EvalSettings(
            rates=tuple(rates),
            trials=evaluation.get("trials", 20, int),
            erasure=typing.cast(typing.Any, erasure),
            workers=evaluation.get("workers", 1, int),
        )

    def to_dict(self) -> typing.Dict[str, typing.Dict[str, typing.Any]]:
        """
        Return the effective configuration as nested sections, defaults included.

        Returns:
            dict[str, dict[str, Any]]: Values by section and key.
        """
        sections: typing.Dict[str, typing.Dict[str, typing.Any]] = {
            "codec": {"kind": self.codec_kind},
        }
        if isinstance(self.codec, CnnCodecConfig):
            sections["cnn"] = {
                "layers": [":".join(str(part) for part in layer) for layer in self.codec.layers],
                "alpha": self.codec.alpha,
            }
        else:
            sections["token"] = {
                "patch": self.codec.patch,
                "dim": self.codec.dim,
                "blocks": self.codec.blocks,
                "heads": self.codec.heads,
                "out_dim": self.codec.out_dim,
                "positional": self.codec.positional,
            }
        sections["sem"] = dataclasses.asdict(self.sem)
        sections["quant"] = {"clamp": self.quantizer.clamp}
        sections["partition"] = {
            "strategy": self.partition.strategy,
            "group": self.partition.group,
        }
        sections["transport"] = dataclasses.asdict(self.transport)
        channel = dataclasses.asdict(self.channel)
        del channel["seed"]
        sections["channel"] = channel
        sections["data"] = {
            "count": self.dataset.count,
            "size": self.dataset.size,
            "weights": list(self.dataset.weights),
            "eval_count": self.eval_dataset.count,
        }
        sections["train"] = dataclasses.asdict(self.train)
        evaluation = dataclasses.asdict(self.evaluation)
        evaluation["rates"] = list(self.evaluation.rates)
        sections["eval"] = evaluation
        sections["seeds"] = dataclasses.asdict(self.seeds)
        return sections

    def to_lines(self) -> typing.List[str]:
        """
        Render the effective configuration as `section.key = value` lines.

        Returns:
            list[str]: One line per key, in a fixed order.
        """
        lines = []
        for section_name, values in self.to_dict().items():
            for key, value in values.items():
                text = process_param_list(value) if isinstance(value, list) else stringify(value)
                lines.append(f"{section_name}.{key} = {text}")
        return lines

    @property
    def config_hash(self) -> str:
        """Return the first 12 hex digits of SHA-256 over `to_lines`."""
        digest = hashlib.sha256("\n".join(self.to_lines()).encode("utf-8"))
        return digest.hexdigest()[:12]

    @property
    def units_per_packet(self) -> int:
        """Return U, derived from the MTU when the configuration leaves it at 0."""
        if self.transport.units_per_packet:
            return self.transport.units_per_packet
        return max(1, self.transport.mtu // self.partition.unit_length)


class ConfigurationValidations:
    """Class for validating raw and resolved configuration values."""

    @staticmethod
    def show_unknown_key_warnings(config_dict: typing.Mapping[str, typing.Any]) -> None:
        """
        Warn about sections and keys that nothing reads.

        Args:
            config_dict (Mapping[str, Any]): The raw configuration.
        """
        for section_name, values in config_dict.items():
            known = SECTION_KEYS.get(section_name)
            if known is None:
                logger.warning("Unknown configuration section `%s` is ignored", section_name)
                continue
            for key in values:
                if key not in known:
                    logger.warning(
                        "Unknown configuration key `%s.%s` is ignored", section_name, key,
                    )

    @staticmethod
    def validate_choice(name: str, value: str, choices: typing.Sequence[str]) -> None:
        """
        Validate that a value is one of the allowed names.

        Raises:
            ConfigError: If it is not.
        """
        if value not in choices:
            raise ConfigError(f"`{name}` must be one of {', '.join(choices)}, got {value!r}.")

    @staticmethod
    def validate_sem_codec(variant: str, codec_kind: str) -> None:
        """
        Validate that equalization is only requested for the CNN codec.

        Raises:
            ConfigError: If a SEM variant is combined with the token codec.
        """
        if variant != "none" and codec_kind != "cnn":
            raise ConfigError(f"`sem.variant = {variant}` requires `codec.kind = cnn`.")

    @staticmethod
    def validate_positive(values: typing.Mapping[str, float]) -> None:
        """
        Validate that every value is strictly positive.

        Raises:
            ConfigError: If one is not.
        """
        for name, value in values.items():
            if value <= 0:
                raise ConfigError(f"`{name}` must be positive, got {value}.")

    @staticmethod
    def validate_nonnegative(values: typing.Mapping[str, float]) -> None:
        """
        Validate that every value is zero or more.

        Raises:
            ConfigError: If one is negative.
        """
        for name, value in values.items():
            if value < 0:
                raise ConfigError(f"`{name}` must be >= 0, got {value}.")
