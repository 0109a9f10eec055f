"""Shared fixtures plus the acceptance-criteria summary reporter."""

from __future__ import annotations

import numpy as np
import pytest

from define_engine.schema import (
    Category,
    FactorSchema,
    FactorSpec,
    OutcomeSpec,
    Polarity,
    default_schema,
)

_ACCEPTANCE: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(num, title): end-to-end acceptance criterion"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None and report.when == "call":
        _ACCEPTANCE[marker.args[0]] = (marker.args[1], report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        title, passed = _ACCEPTANCE[num]
        terminalreporter.write_line(
            f"criterion {num:>2}: {'PASS' if passed else 'FAIL'} - {title}"
        )


@pytest.fixture
def schema():
    return default_schema()


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def make_item_schema(m: int) -> FactorSchema:
    """A single-factor schema with m outcomes: m flat items for matrix tests."""
    outcomes = tuple(OutcomeSpec(f"item-{i}", Polarity.NEUTRAL_UNCERTAIN) for i in range(m))
    return FactorSchema(
        (FactorSpec(0, "Test Factor", Category.MACROECONOMIC, "test", outcomes),)
    )


@pytest.fixture
def item_schema():
    return make_item_schema
