import json
from pathlib import Path

import pytest

from reelchat.engine import DialogEngine, EngineConfig
from reelchat.extract import default_patterns
from reelchat.kb import load_kb

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def kb_main():
    return load_kb(FIXTURES / "kb_fixture.jsonl")


@pytest.fixture(scope="session")
def kb_pair():
    return load_kb(FIXTURES / "kb_pair.jsonl")


@pytest.fixture(scope="session")
def patterns():
    return default_patterns()


@pytest.fixture
def engine(kb_main, patterns):
    return DialogEngine(kb_main, patterns=patterns)


@pytest.fixture
def make_engine(kb_main, patterns):
    def build(kb=None, config=None, **kwargs):
        return DialogEngine(
            kb if kb is not None else kb_main,
            patterns=patterns,
            config=config or EngineConfig(),
            **kwargs,
        )

    return build


@pytest.fixture(scope="session")
def metrics_sheet():
    with open(FIXTURES / "metrics_sheet.json", encoding="utf-8") as fh:
        return json.load(fh)


# ------------------------------------------------- acceptance result summary

_acceptance_results: dict[str, tuple[bool, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and report.when == "call":
        _acceptance_results[marker.args[0]] = (report.passed, marker.args[1])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion in sorted(_acceptance_results):
        passed, description = _acceptance_results[criterion]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {criterion}: {description}")
