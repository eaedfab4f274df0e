import pytest

# criterion number -> list of (part, passed, detail)
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def criterion(capsys):
    """Record one part of an acceptance criterion and echo a pass/fail line."""

    def record(number: int, part: str, passed: bool, detail: str = ""):
        ACCEPTANCE.setdefault(number, []).append((part, bool(passed), detail))
        with capsys.disabled():
            print(f"\n[acceptance {number:2d}] {'PASS' if passed else 'FAIL'}  {part}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p for _, p, _ in parts)
        failed = ", ".join(name for name, p, _ in parts if not p)
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += f"  (failing part: {failed})"
        terminalreporter.write_line(line)

