import pytest


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance(request, capsys):
    """Report one PASS/FAIL line for an acceptance criterion (echoed live and in the summary)."""

    def report(criterion: int, ok: bool, detail: str) -> bool:
        line = f"[acceptance {criterion}] {'PASS' if ok else 'FAIL'}: {detail}"
        request.config._acceptance_lines.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
