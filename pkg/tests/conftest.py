from __future__ import annotations

import time
from pathlib import Path

import pytest

from uavswarm import config as cfgmod
from uavswarm.engine import run_scenario

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")


def load_scenario(name: str) -> cfgmod.SimConfig:
    return cfgmod.load(SCENARIOS / f"{name}.toml")


class TimedRun:
    def __init__(self, config):
        self.config = config
        start = time.perf_counter()
        self.log = run_scenario(config)
        self.seconds = time.perf_counter() - start


@pytest.fixture(scope="session")
def case_a_run():
    return TimedRun(load_scenario("case_a"))


@pytest.fixture(scope="session")
def case_b_run():
    return TimedRun(load_scenario("case_b"))
