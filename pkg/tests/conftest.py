"""Shared fixtures and the per-criterion acceptance summary."""

import pytest

LIMITS = {1: 1, 2: 1, 3: 5, 4: 10, 5: 60, 6: 10, 7: 5, 8: 1, 9: 30, 10: 60, 11: 10}


class AcceptanceLedger:
    def __init__(self):
        self.rows = {}

    def record(self, cid, name, passed, seconds, note=""):
        self.rows[cid] = (name, bool(passed), seconds, note)


_LEDGER = AcceptanceLedger()


@pytest.fixture(scope="session")
def acceptance_ledger():
    return _LEDGER


def pytest_terminal_summary(terminalreporter):
    rows = _LEDGER.rows
    if not rows:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(LIMITS):
        if cid not in rows:
            tr.write_line(f"criterion {cid:2d}: NOT RUN")
            continue
        name, passed, seconds, note = rows[cid]
        verdict = "PASS" if passed else "FAIL"
        extra = f" ({note})" if note else ""
        tr.write_line(f"criterion {cid:2d}: {verdict}  {name}  {seconds:.2f}s / limit {LIMITS[cid]}s{extra}")
