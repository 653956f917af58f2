import pytest

# criterion number -> (status, detail), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status:7s} {detail}")


@pytest.fixture
def report():
    def record(n, ok, detail, status=None):
        ACCEPTANCE[n] = (status or ("PASS" if ok else "FAIL"), detail)
        print(f"criterion {n}: {ACCEPTANCE[n][0]} {detail}")
    return record
