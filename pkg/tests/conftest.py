import numpy as np
import pytest

from twr_chtm.dsp import DspConfig, process_cube, torso_ranges
from twr_chtm.echo import RadarConfig, ScattererSet, WallConfig, simulate_cube
from twr_chtm.envelope import extract_envelopes
from twr_chtm.kinematics import Gait, GaitConfig


def run_walk(gait, radar=RadarConfig(), wall=WallConfig(), dsp=DspConfig()):
    cube = simulate_cube(gait, radar, wall, ScattererSet())
    center = radar.array_center
    profiles, rtm, dtm = process_cube(cube, lambda t: torso_ranges(gait, t, center), dsp)
    return cube, profiles, rtm, dtm


@pytest.fixture(scope="session")
def normal_walk():
    gait = GaitConfig()
    cube, profiles, rtm, dtm = run_walk(gait)
    return {"gait": gait, "cube": cube, "profiles": profiles, "rtm": rtm, "dtm": dtm,
            "env": extract_envelopes(dtm)}


@pytest.fixture(scope="session")
def armed_walk():
    gait = GaitConfig(pattern=Gait.ARMED)
    cube, profiles, rtm, dtm = run_walk(gait)
    return {"gait": gait, "dtm": dtm, "env": extract_envelopes(dtm)}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
