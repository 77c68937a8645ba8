import time

import pytest

_ACCEPTANCE_LINES: list[str] = []


class CriterionRecorder:
    """Times one acceptance criterion and records a PASS/FAIL line for the summary."""

    def __init__(self, number: int, title: str, budget_s: float | None):
        self.number, self.title, self.budget_s = number, title, budget_s
        self.start = time.perf_counter()
        self.detail = ""

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def finish(self, passed: bool) -> None:
        took = self.elapsed()
        budget = f" (budget {self.budget_s:g} s)" if self.budget_s else ""
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {self.number}: {self.title}; {took:.2f} s{budget}"
        if self.detail:
            line += f"; {self.detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)


@pytest.fixture
def criterion(request):
    """Usage: rec = criterion(3, "title", budget_s); set rec.detail; failures are recorded automatically."""
    recorders: list[CriterionRecorder] = []

    def make(number: int, title: str, budget_s: float | None = None) -> CriterionRecorder:
        rec = CriterionRecorder(number, title, budget_s)
        recorders.append(rec)
        return rec

    yield make
    failed = getattr(request.node, "_call_failed", False)
    for rec in recorders:
        rec.finish(not failed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and report.failed:
        item._call_failed = True


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
