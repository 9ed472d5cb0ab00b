import pytest

_RESULTS: list = []


@pytest.fixture
def criterion(capsys):
    """Record one PASS/FAIL line per acceptance criterion.

    Usage: ``with criterion(3, "rate") as c: ... c.detail = "..."; c.ok = cond``.
    A criterion that raises is reported as FAIL.
    """

    class Entry:
        def __init__(self, number, title):
            self.number, self.title = number, title
            self.ok, self.detail = False, ""

        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc_type is not None and not self.detail:
                self.detail = f"{exc_type.__name__}: {exc}"
            ok = self.ok and exc_type is None
            line = f"criterion {self.number:>2} {'PASS' if ok else 'FAIL'}  {self.title}: {self.detail}"
            _RESULTS.append(line)
            with capsys.disabled():
                print("\n" + line)
            return False

    return Entry


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
