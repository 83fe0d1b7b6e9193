import pytest

from klgof.samplers import SeededRng


@pytest.fixture
def draw():
    """``draw(seed, shape)`` -> standard normal array from a reproducible stream."""

    def _draw(seed, shape):
        return SeededRng(seed).generator().standard_normal(shape)

    return _draw


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", None) != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((props["criterion"], "PASS" if outcome == "passed" else "FAIL",
                              props.get("detail", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for crit, verdict, detail in sorted(lines, key=lambda t: (int(t[0].split(".")[0]), t[0])):
            terminalreporter.write_line(f"[{verdict}] criterion {crit}: {detail}")
