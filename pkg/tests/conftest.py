import pytest

_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_KEY] = []


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    if call.when == "call":
        item.call_report = report
    return report


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the acceptance summary, then assert."""
    lines = request.config.stash[_KEY]
    seen = []

    def record(number: int, title: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}"
        if detail:
            line += f"  ({detail})"
        lines.append((number, line))
        seen.append(number)
        print(line)
        assert ok, line

    yield record
    report = getattr(request.node, "call_report", None)
    if not seen and report is not None and report.failed:
        lines.append((99, f"[FAIL] {request.node.name} raised before reaching a verdict"))


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
