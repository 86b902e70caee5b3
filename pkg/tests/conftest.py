import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_acceptance_lines: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion, printed at session end."""
    name = request.node.name

    def record(label: str):
        request.node._criterion_label = label

    yield record
    label = getattr(request.node, "_criterion_label", name)
    failed = getattr(request.node, "_call_failed", None)
    _acceptance_lines.append((label, failed))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call":
        item._call_failed = report.failed


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for label, failed in _acceptance_lines:
        terminalreporter.write_line(f"{'FAIL' if failed else 'PASS'}  {label}")

