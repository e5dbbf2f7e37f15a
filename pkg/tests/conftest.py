import json
import math
import os

import numpy as np
import pytest

from leakywire import geometry


@pytest.fixture(scope="session")
def bessel_table():
    path = os.path.join(os.path.dirname(__file__), "fixtures",
                        "bessel_reference.json")
    with open(path) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def broken():
    """Single unit corner at the origin."""
    return geometry.broken_line(1.0)


@pytest.fixture(scope="session")
def zigzag():
    """Corner pair +pi/4 at -1, -pi/4 at +1; straight far tails."""
    return geometry.CurveSpec(vertices=(geometry.Vertex(-1.0, math.pi / 4),
                                        geometry.Vertex(1.0, -math.pi / 4)))


@pytest.fixture(scope="session")
def twin_corners():
    """Two well separated 1.2 rad corners; binds a two-level doublet."""
    return geometry.CurveSpec(vertices=(geometry.Vertex(-20.0, 1.2),
                                        geometry.Vertex(20.0, 1.2)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)


def pytest_terminal_summary(terminalreporter):
    lines = getattr(terminalreporter.config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
