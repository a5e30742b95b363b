import pytest

from leohap.env import ScenarioConfig, calibrate_reward

_LINES = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def default_cfg():
    """Default scenario with the reward scale already calibrated."""
    return calibrate_reward(ScenarioConfig())


def pytest_configure(config):
    config.stash[_LINES] = {}


@pytest.fixture(scope="session")
def acceptance(request):
    """``acceptance(n, ok, detail)`` records one result line per criterion."""
    lines = request.config.stash[_LINES]

    def record(n: int, ok: bool, detail: str) -> bool:
        lines[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(lines[n])
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
