import time

import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, with wall time."""

    class Recorder:
        def __init__(self):
            self.start = None

        def __call__(self, label, budget):
            self.label, self.budget = label, budget
            self.start = time.perf_counter()
            return self

        def __enter__(self):
            return self

        def note(self, text):
            """A diagnostic line reported alongside the criteria, never pass/fail."""
            line = f"[INFO] {self.label}: {text}"
            ACCEPTANCE_LINES.append(line)
            print(line)

        def __exit__(self, exc_type, exc, tb):
            elapsed = time.perf_counter() - self.start
            ok = exc_type is None and elapsed < self.budget
            status = "PASS" if ok else "FAIL"
            line = f"[{status}] {self.label} ({elapsed:.2f}s, budget {self.budget:g}s)"
            ACCEPTANCE_LINES.append(line)
            print(line)
            if exc_type is None:
                assert elapsed < self.budget, f"runtime {elapsed:.1f}s exceeds budget {self.budget}s"
            return False

    return Recorder()
