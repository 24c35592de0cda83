"""Shared fixtures and the acceptance-summary hook.

Acceptance tests register one line per criterion through record_criterion();
the terminal-summary hook prints the collected lines after the run so the
pass/fail ledger is visible even though pytest captures stdout.
"""
import pytest

from utalk import AudioBuffer, ImageBuffer
from utalk.fixtures import fixture_avatar
from utalk.orchestrator import _reset_for_tests, build_engine, template_box
from utalk.stages import _stub_tone_sequence

_criterion_lines: list = []


def record_criterion(line: str) -> None:
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _criterion_lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_avatar() -> ImageBuffer:
    return fixture_avatar(192, 256)


@pytest.fixture(scope="session")
def small_box(small_avatar):
    return template_box(small_avatar.width, small_avatar.height)


@pytest.fixture(scope="session")
def short_clip() -> AudioBuffer:
    return _stub_tone_sequence("hi there friend")


@pytest.fixture()
def engine():
    return build_engine()


@pytest.fixture(autouse=True)
def _singleton_guard():
    yield
    _reset_for_tests()
