import numpy as np
import pytest

from wulff_lab.body import make_body
from wulff_lab.patch import make_grid, make_patch

ACCEPTANCE_LINES: list[str] = []

BODY_SPECS = {
    "ball": {"radius": 1.3},
    "ellipsoid": {"axes": [1.0, 1.3, 0.8]},
    "offset-ellipsoid": {"axes": [1.0, 1.2, 0.9], "offset": [0.1, 0.05, 0.1]},
    "lp-ball": {"p": 4, "ball_radius": 0.2},
    "perturbed-ball": {"eps": 0.1},
}


@pytest.fixture(params=sorted(BODY_SPECS))
def body(request):
    return make_body(request.param, BODY_SPECS[request.param])


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def unit_vectors(rng, count, dim=3):
    w = rng.normal(size=(count, dim))
    return w / np.linalg.norm(w, axis=-1, keepdims=True)


def wulff_patch(body, nodes=32):
    patch = make_patch({"kind": "wulff"}, body)
    return patch, make_grid(patch, nodes)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
