"""Pytest configuration file."""

from __future__ import annotations

import pathlib

import pytest

pytest.register_assert_rewrite("tests.utils.object_assertions")

pytest_plugins = [
    f"tests.fixtures.{fixture_file.stem}"
    for fixture_file in sorted(pathlib.Path(__file__).parent.glob("fixtures/[!_]*.py"))
]


def pytest_addoption(parser: pytest.Parser) -> None:
    """Add the option that enables the slow training runs."""
    parser.addoption(
        "--run-acceptance",
        action="store_true",
        default=False,
        help="Run the acceptance tests that train full models.",
    )


def pytest_collection_modifyitems(
    config: pytest.Config,
    items: list[pytest.Item],
) -> None:
    """Skip acceptance tests unless `--run-acceptance` is given."""
    if config.getoption("--run-acceptance"):
        return
    skip_acceptance = pytest.mark.skip(reason="needs --run-acceptance")
    for item in items:
        if "acceptance" in item.keywords:
            item.add_marker(skip_acceptance)
