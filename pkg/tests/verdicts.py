"""Pass/fail lines for the acceptance criteria, echoed again at session end."""

LINES = []


def record(number: int, name: str, ok: bool, detail: str) -> str:
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    LINES.append(line)
    return line
