import numpy as np
import pytest

from orthoact.geometry import Workspace, make_canonical_cameras
from orthoact.pointcloud import fuse
from orthoact.renderer import render_canonical_set
from orthoact.synthetic import random_sample


@pytest.fixture(scope="session")
def unit_ws():
    return Workspace((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def scene_sample():
    return random_sample(7)


@pytest.fixture(scope="session")
def canonical_views(scene_sample):
    cloud = fuse(scene_sample.observations, scene_sample.workspace)
    cams = make_canonical_cameras(scene_sample.workspace, 256, 256)
    return render_canonical_set(cloud, cams)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one summary line per acceptance criterion."""

    def log(line):
        ACCEPTANCE_LINES.append(line)
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
