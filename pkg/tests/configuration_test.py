"""Tests for the Configuration class."""

from __future__ import annotations

import pathlib

import pytest

from semequal.codec import CnnCodecConfig, TokenCodecConfig
from semequal.configuration import (
    EVAL_SEED_MASK,
    Configuration,
    EvalSettings,
    Seeds,
    TransportSettings,
    load_config_file,
)
from semequal.exceptions import ConfigError
from tests.utils.object_assertions import assert_match_object, assert_to_contain_object


def test_configuration_defaults() -> None:
    """Test the Configuration constructor defaults."""
    configuration = Configuration()

    assert configuration.codec_kind == "cnn"
    assert isinstance(configuration.codec, CnnCodecConfig)
    assert configuration.codec.latent_shape == (16, 16, 16)
    assert configuration.sem.variant == "none"
    assert configuration.quantizer.factor == 1.0
    assert configuration.quantizer.clamp == 127
    assert configuration.partition.strategy == "channel_of_map"
    assert configuration.partition.unit_count == 16
    assert configuration.channel.kind == "iid"
    assert configuration.dataset.count == 2000
    assert configuration.eval_dataset.count == 64

    assert_match_object(configuration.seeds, Seeds(data=7, train=1, channel=2))
    assert_match_object(configuration.transport, TransportSettings())
    assert_match_object(configuration.evaluation, EvalSettings())
    assert_to_contain_object(configuration.train, {"epochs": 30, "batch": 16, "lr": 1e-3})


def test_configuration_explicit() -> None:
    """Test the Configuration constructor with explicit values."""
    configuration = Configuration(
        {
            "sem": {"variant": "scale_broadcast", "k": 2, "s": 0.5},
            "partition": {"group": 2},
            "channel": {"kind": "gilbert_elliott", "p_gb": 0.05},
            "eval": {"rates": [0, 0.5], "trials": 3, "erasure": "exact"},
            "seeds": {"data": 11, "channel": 5},
        },
    )

    assert_to_contain_object(
        configuration.sem,
        {"variant": "scale_broadcast", "k": 2, "s": 0.5, "quant_factor": 16.0},
    )
    assert configuration.quantizer.factor == 16.0
    assert configuration.partition.unit_count == 8
    assert configuration.channel.p_gb == 0.05
    assert configuration.channel.seed == 5
    assert configuration.evaluation.rates == (0.0, 0.5)
    assert configuration.evaluation.erasure == "exact"
    assert configuration.dataset.seed == 11
    assert configuration.eval_dataset.seed == 11 ^ EVAL_SEED_MASK


def test_configuration_token_codec() -> None:
    """Test that the token codec selects the token partition by default."""
    configuration = Configuration({"codec": {"kind": "token"}})

    assert isinstance(configuration.codec, TokenCodecConfig)
    assert configuration.codec.latent_shape == (64, 24)
    assert configuration.partition.strategy == "token_channel"
    assert configuration.partition.layout == "tokens"


def test_configuration_cnn_layers() -> None:
    """Test that CNN layers parse from out:kernel:stride:pad entries."""
    configuration = Configuration(
        {"data": {"size": 16}, "cnn": {"layers": ["4:3:2:1", "8:3:2:1", "4:1:1:0"]}},
    )

    assert configuration.codec.latent_shape == (4, 4, 4)


def test_configuration_bad_cnn_layer() -> None:
    """Test that a malformed layer entry raises."""
    with pytest.raises(ConfigError, match="out:kernel:stride:pad"):
        Configuration({"cnn": {"layers": "4:3:2"}})


def test_configuration_wrong_type() -> None:
    """Test that a value of the wrong type raises."""
    with pytest.raises(ConfigError, match="`sem.k` must be int"):
        Configuration({"sem": {"k": "four"}})  # type: ignore[typeddict-item]


def test_configuration_bool_is_not_int() -> None:
    """Test that booleans are rejected for integer keys."""
    with pytest.raises(ConfigError, match="integer"):
        Configuration({"train": {"epochs": True}})


def test_configuration_int_accepted_as_float() -> None:
    """Test that an integer is accepted where a float is expected."""
    configuration = Configuration({"train": {"lr": 1}})

    assert configuration.train.lr == 1.0
    assert isinstance(configuration.train.lr, float)


def test_configuration_sem_requires_cnn() -> None:
    """Test that equalization with the token codec raises."""
    with pytest.raises(ConfigError, match="requires `codec.kind = cnn`"):
        Configuration({"codec": {"kind": "token"}, "sem": {"variant": "scale"}})


def test_configuration_illegal_partition() -> None:
    """Test that a strategy that does not fit the codec raises ConfigError."""
    with pytest.raises(ConfigError):
        Configuration({"partition": {"strategy": "token"}})


def test_configuration_bad_rate() -> None:
    """Test that a rate outside [0, 1] raises."""
    with pytest.raises(ConfigError, match="eval.rates"):
        Configuration({"eval": {"rates": [0.1, 1.5]}})


def test_configuration_nonpositive_batch() -> None:
    """Test that a zero batch raises."""
    with pytest.raises(ConfigError, match="`train.batch` must be positive"):
        Configuration({"train": {"batch": 0}})


def test_units_per_packet_from_mtu() -> None:
    """Test that U is derived from the MTU when left at zero."""
    assert Configuration().units_per_packet == 5
    assert Configuration({"transport": {"mtu": 100}}).units_per_packet == 1
    assert Configuration({"transport": {"units_per_packet": 3}}).units_per_packet == 3


def test_to_lines() -> None:
    """Test that every effective value is rendered as a `section.key = value` line."""
    lines = Configuration({"sem": {"variant": "broadcast", "k": 2}}).to_lines()

    assert "codec.kind = cnn" in lines
    assert "cnn.layers = 32:5:2:2,64:5:2:2,16:1:1:0" in lines
    assert "sem.variant = broadcast" in lines
    assert "sem.k = 2" in lines
    assert "eval.rates = 0.0,0.1,0.2,0.3,0.4" in lines
    assert "seeds.data = 7" in lines
    assert not any(line.startswith("channel.seed") for line in lines)


def test_config_hash() -> None:
    """Test that the hash is stable and sensitive to effective values."""
    assert Configuration().config_hash == Configuration({"sem": {"k": 4}}).config_hash
    assert Configuration().config_hash != Configuration({"sem": {"k": 2}}).config_hash
    assert len(Configuration().config_hash) == 12


def test_from_file(tmp_path: pathlib.Path) -> None:
    """Test that a configuration written with to_lines loads back identically."""
    configuration = Configuration({"sem": {"variant": "scale"}, "seeds": {"train": 9}})
    path = tmp_path / "experiment.cfg"
    path.write_text("\n".join(configuration.to_lines()), encoding="utf-8")

    loaded = Configuration.from_file(path)

    assert loaded.config_hash == configuration.config_hash
    assert loaded.sem.variant == "scale"


def test_load_config_file_missing(tmp_path: pathlib.Path) -> None:
    """Test that a missing file raises ConfigError."""
    with pytest.raises(ConfigError, match="Cannot read configuration"):
        load_config_file(tmp_path / "missing.cfg")
