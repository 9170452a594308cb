import contextlib

import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


class CriterionRecorder:
    """Collects per-criterion sub-checks and prints one pass/fail line."""

    def __init__(self, capsys):
        self.capsys = capsys

    @contextlib.contextmanager
    def __call__(self, number: int, title: str):
        failures: list[str] = []
        try:
            yield failures
        except Exception as exc:
            failures.append(f"error: {exc!r}")
            raise
        finally:
            ok = not failures
            line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}"
            if failures:
                line += "  [" + "; ".join(failures) + "]"
            _RESULTS[number] = (ok, line)
            with self.capsys.disabled():
                print("\n" + line)
        assert not failures, "; ".join(failures)


@pytest.fixture
def criterion(capsys):
    return CriterionRecorder(capsys)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[n][1])
