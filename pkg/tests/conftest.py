"""Shared fixtures and the per-criterion acceptance summary."""
import pytest

_CRITERIA: dict[str, list[tuple[bool, str]]] = {}


class CriterionLog:
    """Collects sub-check outcomes for one acceptance criterion."""

    def __init__(self, name: str):
        self.name = name
        self.checks = _CRITERIA.setdefault(name, [])

    def check(self, ok: bool, detail: str) -> bool:
        self.checks.append((bool(ok), detail))
        return bool(ok)

    def failures(self) -> list[str]:
        return [d for ok, d in self.checks if not ok]


@pytest.fixture
def criterion():
    return CriterionLog


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        checks = _CRITERIA[name]
        bad = [d for ok, d in checks if not ok]
        status = "PASS" if not bad else "FAIL"
        line = f"{status} {name}: {len(checks) - len(bad)}/{len(checks)} checks"
        if bad:
            line += "; failing: " + "; ".join(bad[:6]) + (" ..." if len(bad) > 6 else "")
        tr.write_line(line)
