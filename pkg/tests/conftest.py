import time
from dataclasses import replace

import pytest

from fosmc_gyro.cli_io.config import load_preset
from fosmc_gyro.sim import run

_CACHE = {}
_TIMING = {}
ACCEPTANCE_LINES = []


def _key(preset, dt, overrides):
    return preset, dt, tuple(sorted(overrides.items()))


class PaperRuns:
    """Full-horizon preset runs, computed once per session and timed."""

    def get(self, *cases):
        out = []
        for preset, dt, overrides in cases:
            key = _key(preset, dt, overrides)
            if key not in _CACHE:
                cfg = replace(load_preset(preset), dt=dt, **overrides)
                t0 = time.perf_counter()
                _CACHE[key] = run(cfg)
                _TIMING[key] = time.perf_counter() - t0
            out.append(_CACHE[key])
        return out

    def seconds(self, preset, dt, overrides=None):
        return _TIMING[_key(preset, dt, overrides or {})]


@pytest.fixture(scope="session")
def paper_runs():
    return PaperRuns()


@pytest.fixture
def acceptance_report():
    def report(label, ok, detail, informational=False):
        tag = "INFO" if informational else ("PASS" if ok else "FAIL")
        if informational:
            tag += "/pass" if ok else "/fail"
        line = f"[{tag}] {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
