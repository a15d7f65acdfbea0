"""Shared pytest hooks: acceptance verdicts are echoed in the terminal summary."""

VERDICTS: list[str] = []


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title}"
    if detail:
        line += f" ({detail})"
    VERDICTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
