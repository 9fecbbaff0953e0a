"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

RESULTS = []


def record(criterion, ok, detail=""):
    RESULTS.append((criterion, bool(ok), detail))
    return ok
