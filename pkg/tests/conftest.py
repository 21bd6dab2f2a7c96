import pytest

_LINES: list[str] = []


class AcceptanceLog:
    def __init__(self, reporter):
        self._reporter = reporter

    def record(self, criterion: str, ok: bool, detail: str) -> None:
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES.append(line)
        # the terminal reporter bypasses output capture, so the line shows up live
        if self._reporter is not None:
            self._reporter.ensure_newline()
            self._reporter.write_line(line)
        else:
            print(line)


@pytest.fixture(scope="session")
def acceptance(request):
    return AcceptanceLog(request.config.pluginmanager.get_plugin("terminalreporter"))


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
