"""Shared fixtures: the expensive scenario runs happen once per session."""
from __future__ import annotations

import numpy as np
import pytest

from stirapnet.config import Units, build_network, build_network_schedule, load_config
from stirapnet.network import NetworkModel, run_transfer
from stirapnet.scenarios import simulate_swap, swap_setup

ACCEPTANCE_LINES: list[str] = []


def record(label: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


class SwapRun:
    def __init__(self, name: str, store_states: bool = True):
        self.cfg = load_config(name)
        self.units = Units.from_config(self.cfg)
        self.setup = swap_setup(self.cfg, self.units)
        integ = self.cfg["integrator"]
        self.basis, self.traj = simulate_swap(self.setup, integ["samples"], integ["rel_tol"],
                                              integ["abs_tol"], store_states=store_states)
        k = int(np.argmax(self.traj["cavityA"]))
        self.peak_index = k
        self.peak_time = float(self.traj.times[k])
        self.peak_population = float(self.traj["cavityA"][k])


class NetworkRun:
    def __init__(self, name: str):
        self.cfg = load_config(name)
        self.units = Units.from_config(self.cfg)
        self.params = build_network(self.cfg, self.units)
        self.schedule = build_network_schedule(self.cfg, self.params, self.units)
        self.model = NetworkModel(self.params)
        integ = self.cfg["integrator"]
        self.times = self.schedule.times(integ["samples"])
        self.result = run_transfer(self.params, self.schedule, self.times, integ["rel_tol"],
                                   integ["abs_tol"], model=self.model, store_states=True)
        self.traj = self.result.trajectory


@pytest.fixture(scope="session")
def swap_run():
    return SwapRun("swap")


@pytest.fixture(scope="session")
def swap_constant_run():
    return SwapRun("swap-constant-chirp", store_states=False)


@pytest.fixture(scope="session")
def nv_run():
    return NetworkRun("network-nv")


@pytest.fixture(scope="session")
def er_run():
    return NetworkRun("network-er")
