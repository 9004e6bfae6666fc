"""Shared store for per-criterion verdict lines."""

RESULTS: dict[int, str] = {}


def record(number: int, passed: bool, detail: str) -> str:
    line = f"CRITERION {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    return line
