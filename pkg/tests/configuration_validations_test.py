"""Tests for the ConfigurationValidations class."""

from __future__ import annotations

import pytest

from semequal.configuration import Configuration, ConfigurationValidations
from semequal.exceptions import ConfigError


def test_unknown_section_warning(caplog: pytest.LogCaptureFixture) -> None:
    """Test that an unknown section is reported and ignored."""
    ConfigurationValidations.show_unknown_key_warnings({"network": {"host": "x"}})

    assert "Unknown configuration section `network` is ignored" in caplog.text


def test_unknown_key_warning(caplog: pytest.LogCaptureFixture) -> None:
    """Test that an unknown key in a known section is reported."""
    configuration = Configuration({"sem": {"variant": "scale", "gain": 2}})  # type: ignore[typeddict-unknown-key]

    assert "Unknown configuration key `sem.gain` is ignored" in caplog.text
    assert configuration.sem.variant == "scale"


def test_known_keys_do_not_warn(caplog: pytest.LogCaptureFixture) -> None:
    """Test that a fully known configuration logs nothing."""
    ConfigurationValidations.show_unknown_key_warnings(
        {"sem": {"variant": "none", "k": 4}, "seeds": {"data": 1}},
    )

    assert caplog.text == ""


def test_validate_choice() -> None:
    """Test that validate_choice accepts members and names the allowed values."""
    ConfigurationValidations.validate_choice("codec.kind", "cnn", ("cnn", "token"))

    with pytest.raises(ConfigError, match="must be one of cnn, token, got 'vit'"):
        ConfigurationValidations.validate_choice("codec.kind", "vit", ("cnn", "token"))


def test_validate_sem_codec() -> None:
    """Test that only the none variant is allowed with the token codec."""
    ConfigurationValidations.validate_sem_codec("none", "token")
    ConfigurationValidations.validate_sem_codec("scale_broadcast", "cnn")

    with pytest.raises(ConfigError):
        ConfigurationValidations.validate_sem_codec("broadcast", "token")


def test_validate_positive() -> None:
    """Test that zero and negative values are rejected."""
    ConfigurationValidations.validate_positive({"train.lr": 1e-4})

    with pytest.raises(ConfigError, match="`eval.trials` must be positive"):
        ConfigurationValidations.validate_positive({"train.lr": 1e-4, "eval.trials": 0})


def test_validate_nonnegative() -> None:
    """Test that zero passes and negative values are rejected."""
    ConfigurationValidations.validate_nonnegative({"train.epochs": 0})

    with pytest.raises(ConfigError, match=r"`train.epochs` must be >= 0"):
        ConfigurationValidations.validate_nonnegative({"train.epochs": -1})
