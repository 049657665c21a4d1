"""Shared store for one-line acceptance verdicts, printed at session end."""

REGISTRY: dict[str, str] = {}


def record(number: int, passed: bool | None, detail: str) -> str:
    status = {True: "PASS", False: "FAIL", None: "SKIP"}[passed]
    line = f"criterion {number:>2}: {status}  {detail}"
    REGISTRY[str(number)] = line
    print(line)
    return line
