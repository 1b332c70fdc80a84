import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> list of (label, passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def record(criterion, label, passed, detail=""):
    ACCEPTANCE.setdefault(criterion, []).append((label, bool(passed), detail))
    print(f"criterion {criterion} [{label}]: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[k]
        ok = all(p for _, p, _ in parts)
        failed = [label for label, p, _ in parts if not p]
        line = f"criterion {k}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += f" (failing: {', '.join(failed)})"
        terminalreporter.write_line(line)
        for label, p, detail in parts:
            terminalreporter.write_line(f"    {label}: {'pass' if p else 'FAIL'} {detail}")
