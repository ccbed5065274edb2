"""One line per acceptance criterion, printed again in the pytest terminal summary."""

LINES: list[str] = []


def report(tag: str, ok: bool, detail: str) -> None:
    line = f"{tag}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
